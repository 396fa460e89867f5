"""Energy-stable Swift-Hohenberg solver in 1D.

    u_t = -D (kappa^2 + d_xx)^2 u + f(u),   f(u) = eps u + g u^2 - u^3

on ``[a, b]`` with ``u = u_xx = 0`` at both ends.  The free energy is
``E = int Phi(u) + q^2 / 2`` with ``Phi(u) = -eps/2 u^2 - g/3 u^3 + u^4/4``
and ``q`` the discrete image of u under the linear form.

Each Crank-Nicolson step replaces ``Phi'(u)`` by the secant quotient
``(Phi(u^{n+1}) - Phi(u^n)) / (u^{n+1} - u^n) = G1(u^{n+1}, u^n) u^{n+1} + G2(u^n)``
and resolves the dependence of G1 on u^{n+1} by fixed-point iteration.
Every iterate solves a linear symmetric system for u, with q eliminated.  At convergence

    E^{n+1} - E^n = -|u^{n+1} - u^n|^2 / dt

holds exactly (up to the iteration tolerance), since both the nonlinear
block and the energy use the same 2(k+1)-point Gauss rule, which is exact
for the polynomial integrands.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
import scipy.linalg as sla

from .field import DGField, l2_project, write_snapshot
from .forms import assemble_mass, assemble_sh_form
from .mesh import Mesh1D, build_mesh_1d
from .quadrature import eval_basis, gauss_legendre
from .stepper import SolverError, recover_q, time_levels


class InnerIterationError(SolverError):
    pass


@dataclass(frozen=True)
class SHParams:
    D: float = 1.0
    kappa: float = 1.0
    eps: float = 0.5
    g: float = 0.0
    a: float = 0.0
    b: float = 4.0
    delta: float = 1e-12
    max_inner: int = 50
    beta0: float | None = None

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError(f"D must be positive, got {self.D}")
        if self.eps < 0 or self.g < 0:
            raise ValueError("eps and g must be nonnegative")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.a < self.b:
            raise ValueError("need a < b")

    def f(self, u):
        return self.eps * u + self.g * u**2 - u**3

    def phi(self, u):
        return -0.5 * self.eps * u**2 - self.g / 3.0 * u**3 + 0.25 * u**4

    def dphi(self, u):
        return -self.f(u)

    def G1(self, w, v):
        return -0.5 * self.eps - self.g / 3.0 * (w + v) + 0.25 * (w * w + w * v + v * v)

    def G2(self, v):
        return -0.5 * self.eps * v - self.g / 3.0 * v**2 + 0.25 * v**3


def secant_nonlinearity(w, v, params: SHParams):
    """``G1(w, v) w + G2(v)``; equals ``(Phi(w) - Phi(v)) / (w - v)`` for w != v."""
    return params.G1(w, v) * w + params.G2(v)


@dataclass(frozen=True)
class EnergyRecord:
    step: int
    t: float
    energy: float
    dissipation: float
    inner_iters: int


def _rule(k: int):
    rule = gauss_legendre(2 * (k + 1))
    vals, _ = eval_basis(k, rule.nodes)
    return rule, vals


def free_energy(u: DGField, q: DGField, params: SHParams) -> float:
    """``int Phi(u) dx + |q|^2 / 2`` with a 2(k+1)-point Gauss rule per cell."""
    rule, vals = _rule(u.k)
    uq = u.coeffs @ vals
    bulk = (u.mesh.h / 2.0) * np.sum(params.phi(uq) @ rule.weights)
    return float(bulk + 0.5 * q.norm() ** 2)


class SHSolver:
    """Holds the linear operators for one (params, mesh, k, dt)."""

    def __init__(self, params: SHParams, mesh: Mesh1D, k: int, dt: float):
        if mesh.periodic:
            raise ValueError("the Swift-Hohenberg driver needs a bounded mesh")
        self.params, self.mesh, self.k, self.dt = params, mesh, k, float(dt)
        self.form = assemble_sh_form(params.D, params.kappa, params.beta0, mesh, k)
        self.mass = assemble_mass(mesh, k)
        A = self.form.dense()
        n = A.shape[0]
        self.n = n
        self.A = A
        self.mdiag = np.full(n, mesh.h / 2.0)
        M = np.diag(self.mdiag)
        # q = M^-1 A u eliminated from the block system
        self.S0 = M / self.dt + 0.5 * (A.T / self.mdiag) @ A
        self.rule, self.vals = _rule(k)
        # phi_i phi_j w_q on the reference cell, scaled by h/2
        self._pp = (mesh.h / 2.0) * np.einsum("iq,jq,q->qij", self.vals, self.vals, self.rule.weights)
        self._pw = (mesh.h / 2.0) * self.vals * self.rule.weights
        nb = k + 1
        base = nb * np.arange(mesh.n)[:, None, None]
        self._rows = (base + np.arange(nb)[None, :, None]) * np.ones((1, 1, nb), int)
        self._cols = (base + np.arange(nb)[None, None, :]) * np.ones((1, nb, 1), int)

    def _at_nodes(self, c: np.ndarray) -> np.ndarray:
        return c.reshape(self.mesh.n, self.k + 1) @ self.vals

    def nonlinear_block(self, w: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Cell blocks of ``(G1(w, v) phi_j, phi_i)``; shape (N, k+1, k+1)."""
        g1 = self.params.G1(self._at_nodes(w), self._at_nodes(v))
        return np.einsum("cq,qij->cij", g1, self._pp)

    def g2_vector(self, v: np.ndarray) -> np.ndarray:
        return (self.params.G2(self._at_nodes(v)) @ self._pw.T).ravel()

    def initial_q(self, u: DGField) -> DGField:
        return recover_q(u, self.form)

    def step(self, u: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
        rhs = self.mdiag * u / self.dt - 0.5 * (self.A.T @ q) - self.g2_vector(u)
        w = u.copy()
        for it in range(1, self.params.max_inner + 1):
            K = self.S0.copy()
            K[self._rows, self._cols] += self.nonlinear_block(w, u)
            w_new = sla.solve(K, rhs, assume_a="sym", check_finite=False)
            change = np.sqrt(np.sum(self.mdiag * (w_new - w) ** 2))
            w = w_new
            if change < self.params.delta:
                return w, (self.A @ w) / self.mdiag, it
        raise InnerIterationError("inner iteration did not converge", change)

    def steady_residual(self, u: DGField, q: DGField) -> float:
        """``max_phi |A(phi, q) + (Phi'(u), phi)|`` at 2(k+1)-point quadrature."""
        dphi = self.params.dphi(self._at_nodes(u.vector))
        r = self.A.T @ q.vector + (dphi @ self._pw.T).ravel()
        return float(np.max(np.abs(r)))


def sh_step(u: DGField, q: DGField, params: SHParams, dt: float, solver: SHSolver | None = None,
            step: int = 1, t: float = 0.0):
    """One energy-stable step; returns ``(u1, q1, EnergyRecord)``."""
    solver = solver or SHSolver(params, u.mesh, u.k, dt)
    try:
        u1, q1, its = solver.step(u.vector, q.vector)
    except InnerIterationError as err:
        raise InnerIterationError("inner iteration did not converge", err.residual, step) from err
    uf, qf = u.with_vector(u1), q.with_vector(q1)
    diss = -((uf - u).norm() ** 2) / dt
    return uf, qf, EnergyRecord(step, t + dt, free_energy(uf, qf, params), diss, its)


@dataclass
class PatternRun:
    u: DGField
    q: DGField
    t: float
    records: list[EnergyRecord]
    initial_energy: float
    steady_at: float | None = None
    snapshots: list[Path] = field(default_factory=list)


def initial_profile(params: SHParams, amplitude: float = 0.1) -> Callable:
    length = params.b - params.a
    return lambda x: amplitude * np.sin(np.pi * (x - params.a) / length)


def run_sh(
    params: SHParams,
    n: int,
    k: int,
    dt: float,
    T: float,
    u0: Callable | DGField | None = None,
    snapshot_times: Iterable[float] = (),
    snapshot_dir=None,
    steady_tol: float = 1e-10,
    stop_at_steady: bool = False,
) -> PatternRun:
    """Evolve from ``u0`` (default ``0.1 sin(pi (x - a) / (b - a))``) to ``T``."""
    mesh = build_mesh_1d(params.a, params.b, n, "bounded")
    if isinstance(u0, DGField):
        u = u0.copy()
    else:
        u = l2_project(u0 or initial_profile(params), mesh, k)
    solver = SHSolver(params, mesh, k, dt)
    q = solver.initial_q(u)
    e0 = free_energy(u, q, params)
    run = PatternRun(u, q, 0.0, [], e0)
    pending = sorted(snapshot_times)
    t = 0.0
    sizes = time_levels(T, dt)
    for step, h in enumerate(sizes, start=1):
        if h != solver.dt:
            solver = SHSolver(params, mesh, k, h)
        u_new, q_new, rec = sh_step(u, q, params, h, solver, step, t)
        t = rec.t if step < len(sizes) else T
        rec = EnergyRecord(step, t, rec.energy, rec.dissipation, rec.inner_iters)
        run.records.append(rec)
        rate = np.sqrt(-rec.dissipation * h) / h
        u, q = u_new, q_new
        while pending and t >= pending[0] - 1e-12:
            if snapshot_dir is not None:
                path = Path(snapshot_dir) / f"snapshot_t{pending[0]:g}.csv"
                run.snapshots.append(write_snapshot(u, path, t))
            pending.pop(0)
        if run.steady_at is None and rate < steady_tol:
            run.steady_at = t
            if stop_at_steady:
                break
    run.u, run.q, run.t = u, q, t
    return run


def write_energy_log(records: Iterable[EnergyRecord], path, initial_energy: float | None = None) -> Path:
    """CSV with header ``step,t,energy,dissipation,inner_iters``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "t", "energy", "dissipation", "inner_iters"])
        if initial_energy is not None:
            writer.writerow([0, repr(0.0), repr(initial_energy), repr(0.0), 0])
        for r in records:
            writer.writerow([r.step, repr(r.t), repr(r.energy), repr(r.dissipation), r.inner_iters])
    return path


def count_sign_changes(u: DGField, samples_per_cell: int = 8, rel_tol: float = 1e-6) -> int:
    """Interior zeros of u, counted as sign changes on a fine sample grid.

    Samples with ``|u| < rel_tol * max|u|`` are ignored, so the zero
    boundary values do not count.
    """
    mesh = u.mesh
    xi = np.linspace(-1.0, 1.0, samples_per_cell + 2)[1:-1]
    vals, _ = eval_basis(u.k, xi)
    s = (u.coeffs @ vals).ravel()
    scale = np.max(np.abs(s))
    if scale == 0:
        return 0
    s = s[np.abs(s) > rel_tol * scale]
    return int(np.sum(np.sign(s[1:]) != np.sign(s[:-1])))
