"""Global projections P (1D) and Pi = P x P (2D), used as test oracles.

``P w`` in V_h^k is fixed by

    (P w - w, v)_K = 0        for v in P^{k-2}(K), every cell K
    {P w}   = {w}             at every interface (periodic wrap included)
    {(P w)_x} = {w_x}         at every interface

which makes ``A(P w - w, v) = 0`` for all ``v`` in V_h^k.  The system is
square with N(k+1) unknowns and is singular for k = 1 with N even.

Every right-hand side is a linear functional of samples of ``w`` and
``w_x``.  Writing it as ``d = L0 f + L1 f'`` lets the 2D projection apply
the x- and y-functionals to a tensor array of samples.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .field import DGField
from .mesh import Mesh1D, Mesh2D
from .quadrature import eval_basis, gauss_legendre, reference_basis


class ProjectionError(ValueError):
    pass


def _moment_points(k: int) -> int:
    return 4 * (k + 1)


@dataclass(frozen=True)
class GlobalProjectionSystem:
    """Factorized square system for P on one periodic 1D mesh.

    Rows are ordered cell by cell: moments 0..k-2 of cell j, then the value
    and derivative mean at the interface on the left of cell j.  Sample
    points are the moment-quadrature nodes of every cell followed by the N
    interface points.
    """

    mesh: Mesh1D
    k: int
    matrix: sp.csc_array
    lu: object
    points: np.ndarray
    L0: sp.csr_array
    L1: sp.csr_array

    @property
    def size(self) -> int:
        return self.mesh.n * (self.k + 1)

    def solve(self, d: np.ndarray) -> np.ndarray:
        return self.lu.solve(np.asarray(d, dtype=float))


def _face_of_cell(mesh: Mesh1D, j: int):
    """Interface on the left of cell j: (x, left cell, right cell)."""
    return mesh.a + j * mesh.h, (j - 1) % mesh.n, j


@lru_cache(maxsize=64)
def projection_system(mesh: Mesh1D, k: int) -> GlobalProjectionSystem:
    if not mesh.periodic:
        raise ProjectionError("the global projection is defined on periodic meshes only")
    if k < 1:
        raise ProjectionError("the global projection needs k >= 1")
    if k == 1 and mesh.n % 2 == 0:
        raise ProjectionError(
            "P is not unique for k = 1 with an even number of cells; use an odd N"
        )
    n, nb = mesh.n, k + 1
    ref = reference_basis(k)
    h = mesh.h
    rule = gauss_legendre(_moment_points(k))
    nq = rule.npoints
    vals, _ = eval_basis(k, rule.nodes)
    wv = vals * rule.weights
    points = np.concatenate(
        [mesh.to_physical(np.arange(n)[:, None], rule.nodes[None, :]).ravel(), mesh.a + h * np.arange(n)]
    )
    npts = points.size
    rows, cols, data = [], [], []
    l0 = sp.lil_array((n * nb, npts))
    l1 = sp.lil_array((n * nb, npts))
    for j in range(n):
        base = j * nb
        for i in range(k - 1):
            rows.append(base + i)
            cols.append(base + i)
            data.append(1.0)
            l0[base + i, j * nq:(j + 1) * nq] = wv[i]
        _, left, right = _face_of_cell(mesh, j)
        r_val, r_der = base + k - 1, base + k
        for cell, tr, dtr in ((left, ref.right, ref.dright), (right, ref.left, ref.dleft)):
            for m in range(nb):
                rows += [r_val, r_der]
                cols += [cell * nb + m, cell * nb + m]
                data += [0.5 * tr[m], dtr[m] / h]
        l0[r_val, n * nq + j] = 1.0
        l1[r_der, n * nq + j] = 1.0
    mat = sp.coo_array((data, (rows, cols)), shape=(n * nb, n * nb)).tocsc()
    lu = spla.splu(mat)
    return GlobalProjectionSystem(mesh, k, mat, lu, points, l0.tocsr(), l1.tocsr())


def _trace_data(v: DGField) -> np.ndarray:
    """Right-hand side built from a DG function's moments and interface means."""
    mesh, k = v.mesh, v.k
    ref = reference_basis(k)
    nb = k + 1
    d = np.zeros(mesh.n * nb)
    for j in range(mesh.n):
        _, left, right = _face_of_cell(mesh, j)
        d[j * nb:j * nb + k - 1] = v.coeffs[j, : k - 1]
        cl, cr = v.coeffs[left], v.coeffs[right]
        d[j * nb + k - 1] = 0.5 * (cl @ ref.right + cr @ ref.left)
        d[j * nb + k] = (cl @ ref.dright + cr @ ref.dleft) / mesh.h
    return d


def project_P(w, mesh: Mesh1D, k: int, dw: Callable | None = None) -> DGField:
    """Global projection of ``w`` (callable with derivative ``dw``, or a DGField)."""
    system = projection_system(mesh, k)
    if isinstance(w, DGField):
        if w.mesh != mesh or w.k != k:
            raise ValueError("field lives on a different mesh or degree")
        d = _trace_data(w)
    else:
        if dw is None:
            raise TypeError("project_P needs the derivative dw of a smooth target")
        pts = system.points
        d = system.L0 @ np.asarray(w(pts), float) + system.L1 @ np.asarray(dw(pts), float)
    return DGField(mesh, k, system.solve(d))


def project_Pi_2d(w, mesh: Mesh2D, k: int, derivs: Mapping[str, Callable] | None = None) -> DGField:
    """Tensor projection ``Pi = P^(x) (x) P^(y)``.

    For a callable ``w(x, y)`` pass ``derivs`` with keys ``"x"``, ``"y"`` and
    ``"xy"`` (the mixed derivative).  A DGField target is projected line by
    line.
    """
    sx, sy = projection_system(mesh.x, k), projection_system(mesh.y, k)
    nb = k + 1
    if isinstance(w, DGField):
        # apply P^(x) along x for every (y-cell, y-mode), then P^(y)
        c = w.coeffs.transpose(0, 2, 1, 3).reshape(mesh.n * nb, mesh.m * nb)
        cx = np.column_stack([project_P(DGField(mesh.x, k, col), mesh.x, k).vector for col in c.T])
        out = np.vstack([project_P(DGField(mesh.y, k, row), mesh.y, k).vector for row in cx])
    else:
        if derivs is None or not {"x", "y", "xy"} <= set(derivs):
            raise TypeError("project_Pi_2d needs derivs with keys 'x', 'y' and 'xy'")
        X, Y = np.meshgrid(sx.points, sy.points, indexing="ij")
        F = {
            (0, 0): np.asarray(w(X, Y), float) * np.ones_like(X),
            (1, 0): np.asarray(derivs["x"](X, Y), float) * np.ones_like(X),
            (0, 1): np.asarray(derivs["y"](X, Y), float) * np.ones_like(X),
            (1, 1): np.asarray(derivs["xy"](X, Y), float) * np.ones_like(X),
        }
        Lx, Ly = (sx.L0, sx.L1), (sy.L0, sy.L1)
        D = sum(Lx[a] @ (Ly[b] @ F[(a, b)].T).T for (a, b) in F)
        tmp = np.column_stack([sx.solve(col) for col in D.T])
        out = np.vstack([sy.solve(row) for row in tmp])
    coeffs = out.reshape(mesh.n, nb, mesh.m, nb).transpose(0, 2, 1, 3)
    return DGField(mesh, k, coeffs)


# -- Galerkin orthogonality ---------------------------------------------------

def _smooth_form_functionals(mesh: Mesh1D, k: int):
    """Functionals giving ``A(w, phi_i)`` and ``(w, phi_i)`` from samples.

    Returns ``(G, Mw)`` acting on samples at ``projection_system`` points:
    ``A(w, .) = G @ w_x`` for continuous w, and ``(w, .) = Mw @ w``.
    """
    ref = reference_basis(k)
    rule = gauss_legendre(_moment_points(k))
    nq, n, nb = rule.npoints, mesh.n, k + 1
    vals, ders = eval_basis(k, rule.nodes)
    G = sp.lil_array((n * nb, n * nq + n))
    Mw = sp.lil_array((n * nb, n * nq + n))
    for j in range(n):
        sl = slice(j * nb, (j + 1) * nb)
        G[sl, j * nq:(j + 1) * nq] = ders * rule.weights
        Mw[sl, j * nq:(j + 1) * nq] = (mesh.h / 2.0) * vals * rule.weights
        _, left, right = _face_of_cell(mesh, j)
        # [phi] = phi^+ - phi^- at the interface left of cell j
        G[left * nb:(left + 1) * nb, n * nq + j] = -ref.right
        G[right * nb:(right + 1) * nb, n * nq + j] = ref.left
    return G.tocsr(), Mw.tocsr()


def galerkin_residual(w: Callable, dw: Callable, mesh: Mesh1D, k: int, form=None) -> np.ndarray:
    """Vector ``A(P w - w, phi_i)`` over the basis of V_h^k."""
    from .forms import assemble_A_periodic_1d

    form = form or assemble_A_periodic_1d(mesh, k)
    pw = project_P(w, mesh, k, dw=dw)
    G, _ = _smooth_form_functionals(mesh, k)
    pts = projection_system(mesh, k).points
    return form.apply(pw) - G @ np.asarray(dw(pts), float)


def check_galerkin_orthogonality(w, mesh: Mesh1D, k: int, dw: Callable | None = None) -> float:
    """Max over basis functions of ``|A(P w - w, phi)|``.

    ``w`` may be a DGField (then the residual is identically zero up to
    rounding) or a callable with derivative ``dw``.
    """
    from .forms import assemble_A_periodic_1d

    if isinstance(w, DGField):
        form = assemble_A_periodic_1d(mesh, k)
        return float(np.max(np.abs(form.apply(project_P(w, mesh, k) - w))))
    if dw is None:
        raise TypeError("a smooth target needs its derivative dw")
    return float(np.max(np.abs(galerkin_residual(w, dw, mesh, k))))


def galerkin_residual_2d(
    w: Callable, derivs: Mapping[str, Callable], mesh: Mesh2D, k: int, norm: str = "basis"
) -> float:
    """Normalized residual of ``A(Pi w - w, .)`` on a periodic grid.

    ``norm="basis"`` gives ``max_phi |A(Pi w - w, phi)| / ||phi||`` over the
    orthonormal basis; ``norm="dual"`` gives the full dual norm
    ``sup_eta |A(Pi w - w, eta)| / ||eta||`` over all of Q_h.
    """
    from .forms import assemble_A_periodic_2d

    if norm not in ("basis", "dual"):
        raise ValueError(f"unknown norm {norm!r}")
    form = assemble_A_periodic_2d(mesh, k)
    pw = project_Pi_2d(w, mesh, k, derivs)
    Gx, Mx = _smooth_form_functionals(mesh.x, k)
    Gy, My = _smooth_form_functionals(mesh.y, k)
    px, py = projection_system(mesh.x, k).points, projection_system(mesh.y, k).points
    X, Y = np.meshgrid(px, py, indexing="ij")
    wx = np.asarray(derivs["x"](X, Y), float) * np.ones_like(X)
    wy = np.asarray(derivs["y"](X, Y), float) * np.ones_like(X)
    aw = Gx @ (My @ wx.T).T + Mx @ (Gy @ wy.T).T  # (n*nb, m*nb)
    nb = k + 1
    aw = aw.reshape(mesh.n, nb, mesh.m, nb).transpose(0, 2, 1, 3).ravel()
    r = form.apply(pw) - aw
    phi_norm = np.sqrt(mesh.dx * mesh.dy / 4.0)
    if norm == "basis":
        return float(np.max(np.abs(r)) / phi_norm)
    return float(np.linalg.norm(r) / phi_norm)
