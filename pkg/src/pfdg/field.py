"""Piecewise-polynomial DG functions on 1D and 2D meshes.

Coefficients are modal, over the orthonormal Legendre basis of each cell.
In 1D the array has shape ``(N, k+1)``; in 2D it is ``(N, M, k+1, k+1)``
with the x-mode before the y-mode.  Flattening in C order gives the global
DOF numbering used by every assembled operator.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .mesh import Mesh1D, Mesh2D, build_mesh_1d
from .quadrature import eval_basis, gauss_legendre


def _default_projection_points(k: int) -> int:
    return max(4 * (k + 1), 10)


@dataclass
class DGField:
    mesh: Mesh1D | Mesh2D
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        expected = self.shape_for(self.mesh, self.k)
        if self.coeffs.shape != expected:
            if self.coeffs.size != int(np.prod(expected)):
                raise ValueError(f"coefficient array of size {self.coeffs.size}, expected shape {expected}")
            self.coeffs = self.coeffs.reshape(expected)

    @staticmethod
    def shape_for(mesh, k: int) -> tuple[int, ...]:
        if isinstance(mesh, Mesh2D):
            return (mesh.n, mesh.m, k + 1, k + 1)
        return (mesh.n, k + 1)

    @classmethod
    def zeros(cls, mesh, k: int) -> "DGField":
        return cls(mesh, k, np.zeros(cls.shape_for(mesh, k)))

    @property
    def dim(self) -> int:
        return 2 if isinstance(self.mesh, Mesh2D) else 1

    @property
    def vector(self) -> np.ndarray:
        """Flat view of the coefficients (global DOF order)."""
        return self.coeffs.reshape(-1)

    @property
    def cell_measure(self) -> float:
        if self.dim == 2:
            return self.mesh.dx * self.mesh.dy
        return self.mesh.h

    def with_vector(self, vec: np.ndarray) -> "DGField":
        return DGField(self.mesh, self.k, np.asarray(vec, dtype=float).reshape(self.coeffs.shape))

    def copy(self) -> "DGField":
        return DGField(self.mesh, self.k, self.coeffs.copy())

    def _check(self, other: "DGField"):
        if other.mesh != self.mesh or other.k != self.k:
            raise ValueError("fields live on different meshes or degrees")

    def __add__(self, other: "DGField") -> "DGField":
        self._check(other)
        return DGField(self.mesh, self.k, self.coeffs + other.coeffs)

    def __sub__(self, other: "DGField") -> "DGField":
        self._check(other)
        return DGField(self.mesh, self.k, self.coeffs - other.coeffs)

    def __mul__(self, s: float) -> "DGField":
        return DGField(self.mesh, self.k, s * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "DGField":
        return DGField(self.mesh, self.k, -self.coeffs)

    def axpy(self, alpha: float, other: "DGField") -> "DGField":
        """Return ``alpha * other + self``."""
        self._check(other)
        return DGField(self.mesh, self.k, self.coeffs + alpha * other.coeffs)

    def inner(self, other: "DGField") -> float:
        self._check(other)
        scale = self.cell_measure / (2.0 ** self.dim)
        return float(scale * np.dot(self.vector, other.vector))

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self)))

    def __call__(self, x, y=None, side=None):
        if self.dim == 2:
            if y is None:
                raise TypeError("2D field needs both x and y")
            return eval_2d(self, x, y, side=side)
        return eval(self, x, side=side)


def eval(field: DGField, x, side=None):
    """Evaluate a 1D field at physical points.

    ``side`` picks the left (``"left"``, i.e. ``v^-``) or right trace at cell
    edges; see :meth:`Mesh1D.locate`.
    """
    cell, xi = field.mesh.locate(x, side)
    vals, _ = eval_basis(field.k, xi)
    c = field.coeffs[cell]  # (..., k+1)
    out = np.einsum("...i,i...->...", c, vals)
    return float(out) if np.ndim(out) == 0 else out


def eval_derivative(field: DGField, x, side=None):
    cell, xi = field.mesh.locate(x, side)
    _, ders = eval_basis(field.k, xi)
    out = np.einsum("...i,i...->...", field.coeffs[cell], ders) * (2.0 / field.mesh.h)
    return float(out) if np.ndim(out) == 0 else out


def eval_2d(field: DGField, x, y, side=None):
    """Evaluate a 2D field; ``side`` is a per-axis pair or a single value."""
    sx, sy = side if isinstance(side, tuple) else (side, side)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    ci, xi = field.mesh.x.locate(x, sx)
    cj, eta = field.mesh.y.locate(y, sy)
    px, _ = eval_basis(field.k, xi)
    py, _ = eval_basis(field.k, eta)
    c = field.coeffs[ci, cj]  # (..., k+1, k+1)
    out = np.einsum("...ab,a...,b...->...", c, px, py)
    return float(out) if np.ndim(out) == 0 else out


def cell_values(field: DGField, points: np.ndarray) -> np.ndarray:
    """Values at reference points ``points`` in every cell.

    1D: shape ``(N, npts)``.  2D: tensor points, shape ``(N, M, npts, npts)``.
    """
    vals, _ = eval_basis(field.k, points)
    if field.dim == 1:
        return field.coeffs @ vals
    return np.einsum("ijab,ap,bq->ijpq", field.coeffs, vals, vals)


def l2_project(f: Callable, mesh, k: int, npoints: int | None = None) -> DGField:
    """Cellwise L2 projection onto degree-``k`` polynomials.

    ``f`` takes ``x`` (1D) or ``x, y`` (2D) as arrays.  Moments use a
    Gauss rule with ``npoints`` per direction.
    """
    rule = gauss_legendre(npoints or _default_projection_points(k))
    vals, _ = eval_basis(k, rule.nodes)
    wv = vals * rule.weights  # (k+1, q)
    if isinstance(mesh, Mesh2D):
        xq = mesh.x.to_physical(np.arange(mesh.n)[:, None], rule.nodes[None, :])
        yq = mesh.y.to_physical(np.arange(mesh.m)[:, None], rule.nodes[None, :])
        fx = np.asarray(
            f(xq[:, None, :, None], yq[None, :, None, :]), dtype=float
        ) * np.ones((mesh.n, mesh.m, rule.npoints, rule.npoints))
        # orthonormal basis: coefficient = (4 / dxdy) * int f phi = sum w w f phi phi
        coeffs = np.einsum("ijpq,ap,bq->ijab", fx, wv, wv)
        return DGField(mesh, k, coeffs)
    xq = mesh.to_physical(np.arange(mesh.n)[:, None], rule.nodes[None, :])
    fx = np.asarray(f(xq), dtype=float) * np.ones_like(xq)
    return DGField(mesh, k, fx @ wv.T)


def _sample_exact(exact, mesh, pts, t):
    if isinstance(mesh, Mesh2D):
        xq = mesh.x.to_physical(np.arange(mesh.n)[:, None], pts[None, :])
        yq = mesh.y.to_physical(np.arange(mesh.m)[:, None], pts[None, :])
        X = xq[:, None, :, None]
        Y = yq[None, :, None, :]
        shape = (mesh.n, mesh.m, pts.size, pts.size)
        val = exact(X, Y) if t is None else exact(X, Y, t)
        return np.asarray(val, dtype=float) * np.ones(shape)
    xq = mesh.to_physical(np.arange(mesh.n)[:, None], pts[None, :])
    val = exact(xq) if t is None else exact(xq, t)
    return np.asarray(val, dtype=float) * np.ones_like(xq)


def error_l2(field: DGField, exact: Callable, t: float | None = None, npoints: int | None = None) -> float:
    """L2 error with (k+1)-point Gauss quadrature per cell (per direction).

    ``exact`` is called as ``exact(x, t)`` (or ``exact(x, y, t)``); pass
    ``t=None`` for a time-independent function.  ``npoints`` overrides the
    rule size.
    """
    rule = gauss_legendre(npoints or field.k + 1)
    diff = cell_values(field, rule.nodes) - _sample_exact(exact, field.mesh, rule.nodes, t)
    if field.dim == 1:
        total = (field.mesh.h / 2.0) * np.sum((diff**2) @ rule.weights)
    else:
        w2 = np.outer(rule.weights, rule.weights)
        total = (field.mesh.dx * field.mesh.dy / 4.0) * np.sum(diff**2 * w2)
    return float(np.sqrt(total))


def error_linf(
    field: DGField, exact: Callable, t: float | None = None, npoints: int | None = None, sample: str = "gauss"
) -> float:
    """Max pointwise error per cell (per direction).

    ``sample="gauss"`` uses the Gauss nodes of :func:`error_l2`;
    ``sample="uniform"`` uses ``npoints`` (default 2k+3) equispaced points
    including the cell edges, where DG errors usually peak.
    """
    if sample == "gauss":
        nodes = gauss_legendre(npoints or field.k + 1).nodes
    elif sample == "uniform":
        nodes = np.linspace(-1.0, 1.0, max(npoints or 2 * field.k + 3, 2))
    else:
        raise ValueError(f"unknown sample {sample!r}")
    diff = cell_values(field, nodes) - _sample_exact(exact, field.mesh, nodes, t)
    return float(np.max(np.abs(diff)))


def convergence_order(e_coarse: float, e_fine: float) -> float:
    """``log2(e_h / e_{h/2})``."""
    return float(np.log2(e_coarse / e_fine))


# -- snapshot files ---------------------------------------------------------

def write_snapshot(field: DGField, path, t: float = 0.0) -> Path:
    """Write a field as CSV with a ``#`` header block.

    Header keys: dimension, k, N, M (2D only), domain, time.  Data rows are
    one per cell: the cell index (``i`` or ``i,j``) and then the modal
    coefficients in flat order (x-mode major in 2D).
    """
    path = Path(path)
    buf = io.StringIO()
    mesh = field.mesh
    buf.write(f"# dimension={field.dim}\n# k={field.k}\n")
    if field.dim == 1:
        buf.write(f"# N={mesh.n}\n# domain={mesh.a!r},{mesh.b!r}\n# topology={mesh.topology}\n")
    else:
        buf.write(f"# N={mesh.n}\n# M={mesh.m}\n")
        buf.write(f"# domain={mesh.x.a!r},{mesh.x.b!r},{mesh.y.a!r},{mesh.y.b!r}\n")
        buf.write(f"# topology={mesh.x.topology},{mesh.y.topology}\n")
    buf.write(f"# time={t!r}\n")
    writer = csv.writer(buf, lineterminator="\n")
    nm = (field.k + 1) ** field.dim
    if field.dim == 1:
        writer.writerow(["i"] + [f"c{a}" for a in range(nm)])
        for i in range(mesh.n):
            writer.writerow([i] + [repr(float(c)) for c in field.coeffs[i]])
    else:
        writer.writerow(["i", "j"] + [f"c{a}_{b}" for a in range(field.k + 1) for b in range(field.k + 1)])
        for i in range(mesh.n):
            for j in range(mesh.m):
                writer.writerow([i, j] + [repr(float(c)) for c in field.coeffs[i, j].ravel()])
    path.write_text(buf.getvalue())
    return path


def read_snapshot(path) -> tuple[DGField, float]:
    from .mesh import build_mesh_2d

    header = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            header[key] = value
        elif line:
            rows.append(line)
    dim = int(header["dimension"])
    k = int(header["k"])
    dom = [float(v) for v in header["domain"].split(",")]
    topo = header.get("topology", "periodic").split(",")
    data = list(csv.reader(rows))[1:]
    if dim == 1:
        mesh = build_mesh_1d(dom[0], dom[1], int(header["N"]), topo[0])
        coeffs = np.array([[float(v) for v in r[1:]] for r in data])
    else:
        mesh = build_mesh_2d(((dom[0], dom[1]), (dom[2], dom[3])), int(header["N"]), int(header["M"]), tuple(topo))
        coeffs = np.array([[float(v) for v in r[2:]] for r in data])
    return DGField(mesh, k, coeffs), float(header["time"])
