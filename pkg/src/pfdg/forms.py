"""Mass matrix, the penalty-free DG bilinear forms and boundary loads.

Matrix convention: ``mat[i, j] = A(phi_j, phi_i)``, so row ``i`` is the
test function.  ``A(w, v) = v @ mat @ w`` on coefficient vectors.

The periodic form is

    A(w, v) = sum_K (w_x, v_x)_K + sum_faces ({w_x}[v] + [w]{v_x}),

with ``[v] = v^+ - v^-`` and central means.  No jump-jump penalty enters.
Boundary variants add face terms on physical edges and produce the load
vectors ``L1`` (u-equation) and ``L2`` (q-equation):

    (u_t, phi) = -At(phi, q) + g (u, phi) - B(u, phi) + L1(phi)
    (q, psi)   =  At(u, psi) + L2(psi)

where ``At = c A + s (.,.)`` with ``c = sqrt(-a2)``, ``s = a1 / (2c)`` and
``g = a0 - a1^2 / (4 a2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh1D, Mesh2D
from .quadrature import reference_basis

BCKind = Literal["periodic", "dirichlet1", "dirichlet2", "neumann"]
_BC_KINDS = ("periodic", "dirichlet1", "dirichlet2", "neumann")
BoundaryData = Callable[[float, float], float]


def default_betas(k: int) -> tuple[float, float]:
    """Default ``(beta0, beta1)`` for degree ``k``.

    beta1 (first-kind Dirichlet) is 0 for k = 1 and 1 for k >= 2; beta0
    (second-kind Dirichlet) is 3 for k = 1 and 0 for k >= 2.
    """
    if k <= 1:
        return 3.0, 0.0
    return 0.0, 1.0


@dataclass(frozen=True)
class OperatorSpec:
    """``L = a0 + a1 Lap + a2 Lap^2`` plus boundary treatment.

    Boundary data are callables ``g(x, t)`` at a boundary point ``x``:
    ``g1 = u``, ``g2 = d_nu u``, ``g3 = Lap u``, ``g4 = d_nu Lap u``, with
    ``nu`` the outward normal.  Missing data count as zero.
    """

    a0: float = 0.0
    a1: float = 0.0
    a2: float = -1.0
    bc_kind: BCKind = "periodic"
    beta0: float | None = None
    beta1: float | None = None
    g1: BoundaryData | None = None
    g2: BoundaryData | None = None
    g3: BoundaryData | None = None
    g4: BoundaryData | None = None

    def __post_init__(self):
        if not self.a2 < 0:
            raise ValueError(f"the fourth-order coefficient a2 must be negative, got {self.a2}")
        if self.bc_kind not in _BC_KINDS:
            raise ValueError(f"unknown boundary kind {self.bc_kind!r}")

    @property
    def scale(self) -> float:
        """``c = sqrt(-a2)``."""
        return math.sqrt(-self.a2)

    @property
    def shift(self) -> float:
        """Mass coefficient ``a1 / (2c)`` inside the tilde form."""
        return self.a1 / (2.0 * self.scale)

    @property
    def growth(self) -> float:
        """``M = a0 - a1^2 / (4 a2)``; solutions obey ``||u(t)|| <= e^{Mt} ||u0||``."""
        return self.a0 - self.a1**2 / (4.0 * self.a2)

    @property
    def has_data(self) -> bool:
        return any(g is not None for g in (self.g1, self.g2, self.g3, self.g4))

    def betas(self, k: int) -> tuple[float, float]:
        b0, b1 = default_betas(k)
        if self.bc_kind == "dirichlet2":
            b1 = 0.0
        return (b0 if self.beta0 is None else float(self.beta0),
                b1 if self.beta1 is None else float(self.beta1))


@dataclass(frozen=True)
class AssembledForm:
    """A bilinear form stored as a block-sparse matrix.

    ``penalty`` holds the optional ``B`` matrix of first-kind Dirichlet
    boundaries; it acts on the u,u-block only.
    """

    matrix: sp.bsr_array
    name: str
    mesh: Mesh1D | Mesh2D
    k: int
    penalty: sp.bsr_array | None = field(default=None, compare=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def __call__(self, w, v) -> float:
        w = getattr(w, "vector", w)
        v = getattr(v, "vector", v)
        return float(v @ (self.matrix @ w))

    def apply(self, w) -> np.ndarray:
        return self.matrix @ getattr(w, "vector", w)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def symmetry_defect(self) -> float:
        diff = (self.matrix - self.matrix.T).tocoo()
        return float(np.max(np.abs(diff.data), initial=0.0))

    def scaled(self, alpha: float, name: str | None = None) -> "AssembledForm":
        pen = None if self.penalty is None else (alpha * self.penalty).tobsr(blocksize=self.matrix.blocksize)
        return AssembledForm(
            (alpha * self.matrix).tobsr(blocksize=self.matrix.blocksize), name or self.name, self.mesh, self.k, pen
        )

    def dump_coo(self, path) -> Path:
        """Write nonzeros as ``row col value`` lines, sorted by (row, col)."""
        path = Path(path)
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f"# {self.name} shape={self.shape[0]}x{self.shape[1]} k={self.k}"]
        lines += [f"{r} {c} {v!r}" for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order].tolist())]
        path.write_text("\n".join(lines) + "\n")
        return path


# -- block bookkeeping ------------------------------------------------------

class _Blocks:
    """Accumulates dense cell-pair blocks in insertion order."""

    def __init__(self, ncells: int, bs: int):
        self.ncells = ncells
        self.bs = bs
        self.data: dict[tuple[int, int], np.ndarray] = {}

    def add(self, row: int, col: int, block: np.ndarray):
        key = (row, col)
        if key in self.data:
            self.data[key] = self.data[key] + block
        else:
            self.data[key] = np.array(block, dtype=float)

    def to_bsr(self) -> sp.bsr_array:
        n = self.ncells * self.bs
        if not self.data:
            return sp.bsr_array((n, n), blocksize=(self.bs, self.bs))
        keys = sorted(self.data)
        rows = np.array([r for r, _ in keys])
        cols = np.array([c for _, c in keys])
        blocks = np.stack([self.data[kk] for kk in keys])
        indptr = np.searchsorted(rows, np.arange(self.ncells + 1))
        return sp.bsr_array((blocks, cols, indptr), shape=(n, n))


def _face_vectors(mesh: Mesh1D, k: int, side: str):
    """Basis traces and physical x-derivatives at one end of a cell.

    ``side`` is ``"right"`` for xi = +1 and ``"left"`` for xi = -1.
    """
    ref = reference_basis(k)
    if side == "right":
        return ref.right, (2.0 / mesh.h) * ref.dright
    return ref.left, (2.0 / mesh.h) * ref.dleft


def _interior_blocks_1d(mesh: Mesh1D, k: int) -> _Blocks:
    ref = reference_basis(k)
    blocks = _Blocks(mesh.n, k + 1)
    vol = (2.0 / mesh.h) * ref.stiffness
    for j in range(mesh.n):
        blocks.add(j, j, vol)
    tr_l, d_l = _face_vectors(mesh, k, "right")  # left cell sees its right end
    tr_r, d_r = _face_vectors(mesh, k, "left")
    jump = {0: -tr_l, 1: tr_r}
    dmean = {0: 0.5 * d_l, 1: 0.5 * d_r}
    for face in mesh.interior_faces():
        cells = (face.left, face.right)
        for sv in (0, 1):
            for sw in (0, 1):
                blk = np.outer(jump[sv], dmean[sw]) + np.outer(dmean[sv], jump[sw])
                blocks.add(cells[sv], cells[sw], blk)
    return blocks


def assemble_mass(mesh: Mesh1D | Mesh2D, k: int) -> AssembledForm:
    if isinstance(mesh, Mesh2D):
        ncells, bs, scale = mesh.ncells, (k + 1) ** 2, mesh.dx * mesh.dy / 4.0
    else:
        ncells, bs, scale = mesh.n, k + 1, mesh.h / 2.0
    blocks = np.broadcast_to(scale * np.eye(bs), (ncells, bs, bs)).copy()
    mat = sp.bsr_array((blocks, np.arange(ncells), np.arange(ncells + 1)), shape=(ncells * bs,) * 2)
    return AssembledForm(mat, "mass", mesh, k)


def assemble_A_periodic_1d(mesh: Mesh1D, k: int) -> AssembledForm:
    if not isinstance(mesh, Mesh1D) or not mesh.periodic:
        raise ValueError("periodic 1D assembly needs a periodic Mesh1D")
    return AssembledForm(_interior_blocks_1d(mesh, k).to_bsr(), "A", mesh, k)


def _tensor(xblocks: _Blocks, yblocks: _Blocks, m: int, bs: int) -> dict:
    out: dict[tuple[int, int], np.ndarray] = {}
    for (i, ip), bx in xblocks.data.items():
        for (j, jp), by in yblocks.data.items():
            out[(i * m + j, ip * m + jp)] = np.kron(bx, by)
    return out


def _mass_blocks(mesh: Mesh1D, k: int) -> _Blocks:
    blocks = _Blocks(mesh.n, k + 1)
    for j in range(mesh.n):
        blocks.add(j, j, (mesh.h / 2.0) * np.eye(k + 1))
    return blocks


def assemble_A_periodic_2d(mesh: Mesh2D, k: int) -> AssembledForm:
    """Tensor-product assembly ``A = A_x (x) M_y + M_x (x) A_y``.

    The 1D interface terms are exact, so the edge integrals of the 2D form
    reduce to a 1D face term times a 1D mass block along the edge.
    """
    if not isinstance(mesh, Mesh2D) or not mesh.periodic:
        raise ValueError("periodic 2D assembly needs a Mesh2D periodic on both axes")
    bs = (k + 1) ** 2
    total = _Blocks(mesh.ncells, bs)
    ax, ay = _interior_blocks_1d(mesh.x, k), _interior_blocks_1d(mesh.y, k)
    mx, my = _mass_blocks(mesh.x, k), _mass_blocks(mesh.y, k)
    for part in (_tensor(ax, my, mesh.m, bs), _tensor(mx, ay, mesh.m, bs)):
        for (r, c), blk in part.items():
            total.add(r, c, blk)
    return AssembledForm(total.to_bsr(), "A", mesh, k)


# -- boundary variants (1D) -------------------------------------------------

def _boundary_vectors(mesh: Mesh1D, k: int):
    """Yield ``(cell, x, trace, d_nu trace)`` for each physical boundary face."""
    for face in mesh.boundary_faces():
        cell = face.right if face.left is None else face.left
        side = "left" if face.left is None else "right"
        tr, d = _face_vectors(mesh, k, side)
        yield cell, face.x, tr, face.normal * d


def _check_bounded(spec: OperatorSpec, mesh) -> None:
    if not isinstance(mesh, Mesh1D):
        raise NotImplementedError("boundary variants are available on 1D meshes")
    if spec.bc_kind == "periodic" or mesh.periodic:
        raise ValueError(f"boundary kind {spec.bc_kind!r} does not match a {mesh.topology} mesh")


def _boundary_matrices(kind: str, mesh: Mesh1D, k: int, beta0: float, beta1: float):
    """Homogeneous boundary parts of the biharmonic-level form and of ``B``."""
    form = _interior_blocks_1d(mesh, k)
    pen = _Blocks(mesh.n, k + 1)
    h = mesh.h
    for cell, _, tr, dn in _boundary_vectors(mesh, k):
        if kind == "dirichlet1":
            form.add(cell, cell, -np.outer(dn, tr))
        elif kind == "dirichlet2":
            form.add(cell, cell, -np.outer(tr, dn) - np.outer(dn, tr) + (beta0 / h) * np.outer(tr, tr))
        if kind in ("dirichlet1", "dirichlet2") and beta1 != 0.0:
            pen.add(cell, cell, (beta1 / h) * np.outer(tr, tr))
    return form.to_bsr(), (pen.to_bsr() if pen.data else None)


def boundary_loads(spec: OperatorSpec, mesh: Mesh1D, k: int, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Load vectors ``(L1, L2)`` from the boundary data at time ``t``."""
    n = mesh.n * (k + 1)
    l1, l2 = np.zeros(n), np.zeros(n)
    if spec.bc_kind == "periodic" or not spec.has_data:
        return l1, l2
    c, s, h = spec.scale, spec.shift, mesh.h
    beta0, beta1 = spec.betas(k)

    def val(g, x):
        return 0.0 if g is None else float(g(x, t))

    for cell, x, tr, dn in _boundary_vectors(mesh, k):
        g1, g2, g3, g4 = (val(g, x) for g in (spec.g1, spec.g2, spec.g3, spec.g4))
        sl = slice(cell * (k + 1), (cell + 1) * (k + 1))
        if spec.bc_kind == "dirichlet1":
            l1[sl] += c * (beta1 / h) * g1 * tr
            l2[sl] += c * (g1 * dn - g2 * tr)
        elif spec.bc_kind == "dirichlet2":
            q_bc = -c * g3 + s * g1
            l1[sl] += c * ((beta0 / h) * q_bc * tr - q_bc * dn + (beta1 / h) * g1 * tr)
            l2[sl] += c * (g1 * dn - (beta0 / h) * g1 * tr)
        else:
            dq_bc = -c * g4 + s * g2
            l1[sl] += c * dq_bc * tr
            l2[sl] += -c * g2 * tr
    return l1, l2


def assemble_A_boundary(spec: OperatorSpec, mesh: Mesh1D, k: int, t: float = 0.0):
    """Tilde form with boundary terms, plus loads ``(L1, L2)`` at time ``t``.

    For first-kind Dirichlet the form is not symmetric (only the ``-w d_nu v``
    face term appears); the coupled block operator built from it and its
    transpose still is.
    """
    _check_bounded(spec, mesh)
    beta0, beta1 = spec.betas(k)
    bih, pen = _boundary_matrices(spec.bc_kind, mesh, k, beta0, beta1)
    c, s = spec.scale, spec.shift
    mass = assemble_mass(mesh, k).matrix
    mat = (c * bih + s * mass).tobsr(blocksize=(k + 1, k + 1))
    pen = None if pen is None else (c * pen).tobsr(blocksize=(k + 1, k + 1))
    form = AssembledForm(mat, f"tilde_A[{spec.bc_kind}]", mesh, k, pen)
    l1, l2 = boundary_loads(spec, mesh, k, t)
    return form, l1, l2


def assemble_tilde_A(spec: OperatorSpec, mesh, k: int) -> AssembledForm:
    """``c A + s (.,.)``; bounded meshes get the homogeneous boundary variant."""
    if isinstance(mesh, Mesh2D):
        base = assemble_A_periodic_2d(mesh, k)
    elif mesh.periodic:
        if spec.bc_kind != "periodic":
            raise ValueError(f"boundary kind {spec.bc_kind!r} on a periodic mesh")
        base = assemble_A_periodic_1d(mesh, k)
    else:
        return assemble_A_boundary(spec, mesh, k)[0]
    mass = assemble_mass(mesh, k).matrix
    mat = (spec.scale * base.matrix + spec.shift * mass).tobsr(blocksize=base.matrix.blocksize)
    return AssembledForm(mat, "tilde_A", mesh, k)


def sh_operator_spec(D: float, kappa: float, beta0: float | None = None) -> OperatorSpec:
    """Linear Swift-Hohenberg part ``-D (kappa^2 + Lap)^2`` with ``u = Lap u = 0``."""
    if not D > 0:
        raise ValueError(f"D must be positive, got {D}")
    return OperatorSpec(a0=-D * kappa**4, a1=-2.0 * D * kappa**2, a2=-D, bc_kind="dirichlet2", beta0=beta0)


def assemble_sh_form(D: float, kappa: float, beta0: float | None, mesh: Mesh1D, k: int) -> AssembledForm:
    """``sqrt(D) (A0 - kappa^2 (.,.) + second-kind boundary terms)``, homogeneous data."""
    form = assemble_A_boundary(sh_operator_spec(D, kappa, beta0), mesh, k)[0]
    return AssembledForm(form.matrix, "sh_A", mesh, k)


@dataclass(frozen=True)
class DiscreteOperator:
    """Everything a time stepper needs for one (spec, mesh, k)."""

    spec: OperatorSpec
    mesh: Mesh1D | Mesh2D
    k: int
    mass: AssembledForm
    form: AssembledForm

    @property
    def penalty(self):
        return self.form.penalty

    @property
    def growth(self) -> float:
        return self.spec.growth

    @property
    def homogeneous(self) -> bool:
        return self.spec.bc_kind == "periodic" or not self.spec.has_data

    @property
    def ndofs(self) -> int:
        return self.mass.shape[0]

    def loads(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        if self.homogeneous:
            z = np.zeros(self.ndofs)
            return z, z
        return boundary_loads(self.spec, self.mesh, self.k, t)


def build_operator(spec: OperatorSpec, mesh, k: int) -> DiscreteOperator:
    return DiscreteOperator(spec, mesh, k, assemble_mass(mesh, k), assemble_tilde_A(spec, mesh, k))
