"""Theta-family time stepping for the mixed DG system.

Per step the unknowns ``(U, Q)`` at level n+1 solve the symmetric,
indefinite block system

    [ M/dt + th (B - g M)   th A^T ] [U]   [ M U^n/dt - (1-th)(A^T Q^n + B U^n - g M U^n) + L1^th ]
    [ th A                 -th M   ] [Q] = [ -th L2(t^{n+1})                                     ]

whose second row is ``M Q = A U + L2``, i.e. q is always the discrete
image of u.  ``L1^th = th L1(t^{n+1}) + (1-th) L1(t^n)``.  For ``th = 0``
the second row degenerates, so forward Euler runs as an explicit update
followed by q recovery.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Literal

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .field import DGField
from .forms import AssembledForm, DiscreteOperator
from .mesh import Mesh2D

SolverKind = Literal["direct", "minres", "schur"]


class SolverError(RuntimeError):
    """Linear (or nonlinear) solve failed; carries the residual and step index."""

    def __init__(self, message: str, residual: float = float("nan"), step: int | None = None):
        self.residual = residual
        self.step = step
        where = "" if step is None else f" at step {step}"
        super().__init__(f"{message}{where} (residual {residual:.3e})")


class CFLError(ValueError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    theta: float = 0.5
    dt: float = 1e-3
    T: float = 1.0
    k: int | None = None
    tol: float = 1e-12
    solver: SolverKind = "direct"
    max_iter: int = 5000
    residual_limit: float = 1e-10
    assert_stability: bool = False
    allow_cfl_violation: bool = False

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if not self.dt > 0 or not self.T > 0:
            raise ValueError("dt and T must be positive")
        if self.solver not in ("direct", "minres", "schur"):
            raise ValueError(f"unknown solver {self.solver!r}")


def gamma_k(k: int) -> float:
    """Inverse-inequality constant ``(k+1)^2 k (k+2) + 4 (k+1)^2 k sqrt(k(k+2))``."""
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    return (k + 1) ** 2 * k * (k + 2) + 4 * (k + 1) ** 2 * k * math.sqrt(k * (k + 2))


def cfl_max_dt(k: int, h: float, theta: float) -> float:
    """Sufficient stability bound ``2 h^4 / ((1 - 2 theta) gamma(k)^2)``.

    Returns ``math.inf`` for ``theta >= 1/2`` (unconditional stability).
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if theta >= 0.5:
        return math.inf
    return 2.0 * h**4 / ((1.0 - 2.0 * theta) * gamma_k(k) ** 2)


def _mesh_h(mesh) -> float:
    return min(mesh.dx, mesh.dy) if isinstance(mesh, Mesh2D) else mesh.h


def recover_q(u: DGField, form: AssembledForm, load: np.ndarray | None = None) -> DGField:
    """Solve ``(q, psi) = A(u, psi) + L2(psi)`` for q (mass is diagonal)."""
    rhs = form.apply(u)
    if load is not None:
        rhs = rhs + load
    mdiag = _mass_diagonal(u)
    return u.with_vector(rhs / mdiag)


def _mass_diagonal(u: DGField) -> np.ndarray:
    scale = u.cell_measure / (2.0 ** u.dim)
    return np.full(u.vector.size, scale)


def energy_identity_defect(u0: DGField, u1: DGField, q0: DGField, q1: DGField, theta: float, dt: float) -> float:
    """Relative defect of
    ``|u1|^2 - |u0|^2 + 2 dt |q_th|^2 - (1 - 2 th) |u1 - u0|^2 = 0``."""
    qth = q1 * theta + q0 * (1.0 - theta)
    terms = (u1.norm() ** 2, u0.norm() ** 2, 2 * dt * qth.norm() ** 2, (1 - 2 * theta) * (u1 - u0).norm() ** 2)
    defect = terms[0] - terms[1] + terms[2] - terms[3]
    return abs(defect) / max(max(abs(x) for x in terms), 1e-300)


class ThetaStepper:
    """Advance ``(u, q)`` for one discrete operator and scheme config.

    Factorizations are cached per step size, so a final shortened step
    costs one extra factorization.
    """

    def __init__(self, op: DiscreteOperator, config: SchemeConfig):
        self.op = op
        self.config = config
        self.M = op.mass.matrix.tocsr()
        self.A = op.form.matrix.tocsr()
        self.At = self.A.T.tocsr()
        n = self.M.shape[0]
        self.B = op.penalty.tocsr() if op.penalty is not None else sp.csr_array((n, n))
        self.g = op.growth
        self.mdiag = self.M.diagonal()
        self._cache: dict[float, object] = {}
        self.last_residual = 0.0
        theta = config.theta
        if theta < 0.5 and not config.allow_cfl_violation:
            bound = cfl_max_dt(op.k, _mesh_h(op.mesh), theta)
            if config.dt >= bound:
                raise CFLError(f"dt={config.dt:.3e} violates the stability bound {bound:.3e} for theta={theta}")

    # -- linear algebra --------------------------------------------------
    def block_matrix(self, dt: float) -> sp.csc_array:
        th = self.config.theta
        top_left = self.M / dt + th * (self.B - self.g * self.M)
        return sp.block_array([[top_left, th * self.At], [th * self.A, -th * self.M]], format="csc")

    def _solver(self, dt: float):
        key = float(dt)
        if key not in self._cache:
            if len(self._cache) > 4:
                self._cache.clear()
            th = self.config.theta
            if self.config.solver == "schur":
                minv = sp.diags_array(1.0 / self.mdiag)
                schur = self.M / dt + th * (self.B - self.g * self.M) + th * (self.At @ minv @ self.A)
                self._cache[key] = spla.splu(sp.csc_array(schur))
            elif self.config.solver == "direct":
                self._cache[key] = spla.splu(self.block_matrix(dt))
            else:
                self._cache[key] = self.block_matrix(dt).tocsr()
        return self._cache[key]

    def _solve_block(self, dt: float, r1: np.ndarray, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        th = self.config.theta
        n = r1.size
        solver = self._solver(dt)
        if self.config.solver == "schur":
            # Q = M^-1 (A U - r2 / th)
            l2 = -r2 / th
            u = solver.solve(r1 - th * (self.At @ (l2 / self.mdiag)))
            q = (self.A @ u + l2) / self.mdiag
            x = np.concatenate([u, q])
            K = self.block_matrix(dt)
        elif self.config.solver == "direct":
            x = solver.solve(np.concatenate([r1, r2]))
            K = None
        else:
            K = solver
            d = np.concatenate([np.abs(1.0 / dt + th * (self.B.diagonal() / self.mdiag - self.g)) * self.mdiag,
                                th * self.mdiag])
            prec = sp.diags_array(1.0 / d)
            x, info = spla.minres(K, np.concatenate([r1, r2]), M=prec, rtol=self.config.tol,
                                  maxiter=self.config.max_iter)
            if info != 0:
                res = self._residual(K, x, np.concatenate([r1, r2]))
                raise SolverError("MINRES did not converge", res)
        rhs = np.concatenate([r1, r2])
        if K is None:
            K = self.block_matrix(dt) if self.config.assert_stability else None
        if K is not None:
            self.last_residual = self._residual(K, x, rhs)
            if self.last_residual > self.config.residual_limit:
                raise SolverError("block solve inaccurate", self.last_residual)
        return x[:n], x[n:]

    @staticmethod
    def _residual(K, x, rhs) -> float:
        norm = np.linalg.norm(rhs)
        return float(np.linalg.norm(K @ x - rhs) / (norm if norm > 0 else 1.0))

    def block_residual(self, u0: np.ndarray, q0: np.ndarray, u1: np.ndarray, q1: np.ndarray, t: float, dt: float) -> float:
        """Relative residual of the block system for a computed step."""
        r1, r2 = self._rhs(u0, q0, t, dt)
        return self._residual(self.block_matrix(dt), np.concatenate([u1, q1]), np.concatenate([r1, r2]))

    def _rhs(self, u, q, t, dt):
        th = self.config.theta
        l1_old, _ = self.op.loads(t)
        l1_new, l2_new = self.op.loads(t + dt)
        explicit = self.At @ q + self.B @ u - self.g * (self.M @ u)
        r1 = self.M @ u / dt - (1.0 - th) * explicit + th * l1_new + (1.0 - th) * l1_old
        r2 = -th * l2_new
        return r1, r2

    # -- stepping --------------------------------------------------------
    def initial_q(self, u0: DGField, t: float = 0.0) -> DGField:
        _, l2 = self.op.loads(t)
        return recover_q(u0, self.op.form, l2)

    def step_vectors(self, u: np.ndarray, q: np.ndarray, t: float, dt: float | None = None):
        dt = self.config.dt if dt is None else dt
        th = self.config.theta
        if th == 0.0:
            l1, _ = self.op.loads(t)
            _, l2 = self.op.loads(t + dt)
            du = -(self.At @ q + self.B @ u - self.g * (self.M @ u)) + l1
            u1 = u + dt * du / self.mdiag
            return u1, (self.A @ u1 + l2) / self.mdiag
        r1, r2 = self._rhs(u, q, t, dt)
        return self._solve_block(dt, r1, r2)

    def step(self, u: DGField, q: DGField, t: float = 0.0, dt: float | None = None) -> tuple[DGField, DGField]:
        u1, q1 = self.step_vectors(u.vector, q.vector, t, dt)
        return u.with_vector(u1), q.with_vector(q1)


Observer = Callable[[int, float, DGField, DGField], None]


@dataclass
class Trajectory:
    u: DGField
    q: DGField
    t: float
    steps: int
    norms: list[tuple[int, float, float, float]] = field(default_factory=list)


def time_levels(T: float, dt: float) -> list[float]:
    """Step sizes reaching ``T`` exactly; the last one is shortened if needed."""
    nfull = int(math.floor(T / dt + 1e-9))
    sizes = [dt] * nfull
    rest = T - nfull * dt
    if rest > 1e-12 * max(T, 1.0):
        sizes.append(rest)
    return sizes


def evolve(
    u0: DGField,
    op: DiscreteOperator,
    config: SchemeConfig,
    observers: Iterable[Observer] = (),
    every: int = 1,
    t0: float = 0.0,
) -> Trajectory:
    """Run the theta-scheme from ``u0`` at ``t0`` to ``t0 + T``.

    Observers are called as ``obs(step, t, u, q)`` at step 0, every
    ``every`` steps, and at the final step.
    """
    stepper = ThetaStepper(op, config)
    observers = list(observers)
    u = u0.copy()
    q = stepper.initial_q(u, t0)
    t = t0
    traj = Trajectory(u, q, t, 0)
    for obs in observers:
        obs(0, t, u, q)
    sizes = time_levels(config.T, config.dt)
    times = t0 + np.cumsum(sizes)
    if sizes:
        times[-1] = t0 + config.T
    for n, dt in enumerate(sizes, start=1):
        try:
            u_new, q_new = stepper.step(u, q, t, dt)
        except SolverError as err:
            raise SolverError("step failed", err.residual, n) from err
        if config.assert_stability and op.homogeneous and config.theta >= 0.5 and op.growth <= 0:
            if u_new.norm() > u.norm() * (1 + 1e-12):
                raise SolverError("norm increased for an unconditionally stable scheme", 0.0, n)
        u, q, t = u_new, q_new, float(times[n - 1])
        if observers and (n % every == 0 or n == len(sizes)):
            for obs in observers:
                obs(n, t, u, q)
    traj.u, traj.q, traj.t, traj.steps = u, q, t, len(sizes)
    return traj


class NormLogger:
    """Observer collecting ``(step, t, |u|, |q|)`` rows; optionally writes CSV."""

    header = ("step", "t", "u_norm", "q_norm")

    def __init__(self, path=None):
        self.rows: list[tuple[int, float, float, float]] = []
        self.path = Path(path) if path is not None else None

    def __call__(self, step, t, u, q):
        self.rows.append((step, t, u.norm(), q.norm()))

    def write(self, path=None) -> Path:
        path = Path(path) if path is not None else self.path
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.header)
            for step, t, un, qn in self.rows:
                writer.writerow([step, repr(t), repr(un), repr(qn)])
        return path
