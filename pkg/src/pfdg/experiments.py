"""Convergence, boundary-parameter and pattern studies with file output.

Problems:

- ``ex51``: 1D periodic biharmonic on [0, 2pi], ``u = e^{-t} sin x``.
- ``ex52``: 2D periodic biharmonic on [0, 4pi]^2,
  ``u = e^{-t/4} sin(x/2) sin(y/2)``.
- ``ex53``: 2D linearized Cahn-Hilliard ``u_t = -Lap^2 u - Lap u`` on
  [0, 2pi/a]^2, ``u = e^{-bt} sin(ax) sin(ay)`` with ``b = 4a^4 - 2a^2``.
- ``ex54``: 1D biharmonic on [0, 2pi] with ``u`` and ``u_x`` prescribed
  (first-kind Dirichlet), ``u = e^{-t} sin x``.
- ``ex55``: 1D biharmonic on [0, 3pi] with ``u = u_xx = 0`` (second-kind
  Dirichlet), ``u = e^{-t} sin x``.
- ``ex56``: Swift-Hohenberg pattern runs on [0, L].
- ``custom``: 1D periodic ``u_t = (a0 + a1 Lap + a2 Lap^2) u`` on [0, 2pi]
  from ``sin(m x)``.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
import scipy

from . import __version__
from .field import DGField, convergence_order, error_l2, error_linf, l2_project
from .field import eval as field_eval
from .forms import OperatorSpec, build_operator
from .mesh import build_mesh_1d, build_mesh_2d
from .stepper import SchemeConfig, SolverError, evolve
from .swift_hohenberg import PatternRun, SHParams, count_sign_changes, run_sh, write_energy_log
from .targets import DEFAULT_ORDER_ATOL, ERROR_RTOL, ORDER_ATOL, lookup

PROBLEMS = ("ex51", "ex52", "ex53", "ex54", "ex55", "ex56", "custom")
TABLE_HEADER = ("N", "l2_error", "l2_order", "linf_error", "linf_order")
TAG_HEADER = ("table", "N", "quantity", "value", "target", "tolerance", "pass")


class ExperimentError(RuntimeError):
    pass


# -- configuration ----------------------------------------------------------

def _tuple(v, cast=float):
    if v is None:
        return None
    if isinstance(v, str):
        v = [x for x in v.replace(" ", "").split(",") if x]
    if not isinstance(v, (list, tuple)):
        v = [v]
    return tuple(cast(x) for x in v)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment.  ``None`` fields take per-problem defaults."""

    problem: str = "ex51"
    k: tuple[int, ...] = (1,)
    n_list: tuple[int, ...] | None = None
    dt: float | None = None
    theta: float = 0.5
    T: float | None = None
    beta0: tuple[float, ...] | None = None
    beta1: tuple[float, ...] | None = None
    a: float = 0.5
    a0: float = 0.0
    a1: float = 0.0
    a2: float = -1.0
    wavenumber: int = 1
    norm: str = "fine"
    solver: str = "direct"
    out: str = "results"
    lengths: tuple[float, ...] = (4.0, 14.0)
    cell_size: float = 0.5
    eps: float = 0.5
    g: float = 0.0
    D: float = 1.0
    kappa: float = 1.0
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}; choose from {', '.join(PROBLEMS)}")
        if not self.k or any(kk < 1 for kk in self.k):
            raise ValueError("k must list degrees >= 1")
        if self.n_list is not None:
            ns = list(self.n_list)
            if any(n < 2 for n in ns):
                raise ValueError("every N must be at least 2")
            for a, b in zip(ns, ns[1:]):
                if not (b > a and b % a == 0):
                    raise ValueError(f"N list must be strictly increasing multiples, got {ns}")
        if self.norm not in ("fine", "gauss"):
            raise ValueError(f"norm must be 'fine' or 'gauss', got {self.norm!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.T is not None and not self.T > 0:
            raise ValueError("T must be positive")
        if self.problem == "ex53" and not self.a > 0:
            raise ValueError("ex53 needs a > 0")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        d = dict(data)
        for key in ("k", "n_list"):
            if key in d:
                d[key] = _tuple(d[key], int)
        for key in ("beta0", "beta1", "lengths", "snapshot_times"):
            if key in d:
                d[key] = _tuple(d[key], float)
        return cls(**d)

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v, tuple) else v)
                for f in dataclasses.fields(self) for v in [getattr(self, f.name)]}

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# -- problems ---------------------------------------------------------------

@dataclass(frozen=True)
class Problem:
    name: str
    dim: int
    domain: tuple
    topology: str
    T: float
    exact: Callable
    spec: OperatorSpec

    def initial(self):
        if self.dim == 1:
            return lambda x: self.exact(x, 0.0)
        return lambda x, y: self.exact(x, y, 0.0)

    def mesh(self, n: int):
        if self.dim == 1:
            return build_mesh_1d(*self.domain, n, self.topology)
        return build_mesh_2d(self.domain, n, n, self.topology)


def _nu(x, a, b):
    return np.where(np.isclose(x, a), -1.0, 1.0)


def make_problem(cfg: ExperimentConfig, beta0=None, beta1=None) -> Problem:
    p = cfg.problem
    if p == "ex51":
        ex = lambda x, t: np.exp(-t) * np.sin(x)
        return Problem(p, 1, (0.0, 2 * np.pi), "periodic", 1.0, ex, OperatorSpec())
    if p == "ex52":
        ex = lambda x, y, t: np.exp(-0.25 * t) * np.sin(0.5 * x) * np.sin(0.5 * y)
        L = 4 * np.pi
        return Problem(p, 2, ((0.0, L), (0.0, L)), "periodic", 0.1, ex, OperatorSpec())
    if p == "ex53":
        a = cfg.a
        b = 4 * a**4 - 2 * a**2
        ex = lambda x, y, t: np.exp(-b * t) * np.sin(a * x) * np.sin(a * y)
        L = 2 * np.pi / a
        return Problem(p, 2, ((0.0, L), (0.0, L)), "periodic", 0.1, ex, OperatorSpec(a0=0.0, a1=-1.0, a2=-1.0))
    if p == "ex54":
        a, b = 0.0, 2 * np.pi
        ex = lambda x, t: np.exp(-t) * np.sin(x)
        spec = OperatorSpec(
            bc_kind="dirichlet1", beta0=beta0, beta1=beta1,
            g1=lambda x, t: float(np.exp(-t) * np.sin(x)),
            g2=lambda x, t: float(_nu(x, a, b) * np.exp(-t) * np.cos(x)),
        )
        return Problem(p, 1, (a, b), "bounded", 0.1, ex, spec)
    if p == "ex55":
        ex = lambda x, t: np.exp(-t) * np.sin(x)
        spec = OperatorSpec(bc_kind="dirichlet2", beta0=beta0, beta1=beta1)
        return Problem(p, 1, (0.0, 3 * np.pi), "bounded", 1.0, ex, spec)
    if p == "custom":
        m = cfg.wavenumber
        lam = cfg.a0 - cfg.a1 * m**2 + cfg.a2 * m**4
        ex = lambda x, t: np.exp(lam * t) * np.sin(m * x)
        return Problem(p, 1, (0.0, 2 * np.pi), "periodic", 1.0, ex, OperatorSpec(a0=cfg.a0, a1=cfg.a1, a2=cfg.a2))
    raise ExperimentError(f"problem {p!r} has no convergence study")


def default_dt(problem: str, k: int) -> float:
    if problem == "ex51":
        return {1: 1e-2, 2: 5e-4, 3: 5e-4}.get(k, 1e-4)
    if problem in ("ex52", "ex53"):
        return {1: 1e-3, 2: 1e-4}.get(k, 1e-5)
    if problem == "ex54":
        return 1e-4
    if problem == "ex55":
        return 1e-3 if k <= 2 else 1e-4
    if problem == "ex56":
        return 1e-2
    return 1e-3


def default_n_list(problem: str, k: int) -> tuple[int, ...]:
    if problem in ("ex52", "ex53"):
        return (8, 16, 32, 64) if k <= 2 else (4, 8, 16, 32)
    return (10, 20, 40, 80) if k <= 2 else (5, 10, 20, 40)


# -- tables -----------------------------------------------------------------

@dataclass(frozen=True)
class TableRow:
    N: int
    l2_error: float
    l2_order: float | None
    linf_error: float
    linf_order: float | None


@dataclass
class ConvergenceTable:
    problem: str
    k: int
    dt: float
    T: float
    rows: list[TableRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        parts = [f"table_{self.problem}_k{self.k}"]
        for key in ("beta0", "beta1"):
            if self.meta.get(f"sweep_{key}"):
                parts.append(f"{key}_{_fmt_label(self.meta[key])}")
        return "_".join(parts)

    def add(self, n: int, l2: float, linf: float) -> None:
        if self.rows:
            prev = self.rows[-1]
            self.rows.append(TableRow(n, l2, convergence_order(prev.l2_error, l2), linf,
                                      convergence_order(prev.linf_error, linf)))
        else:
            self.rows.append(TableRow(n, l2, None, linf, None))

    def final_order(self) -> float | None:
        return self.rows[-1].l2_order if len(self.rows) > 1 else None

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TABLE_HEADER)
            for r in self.rows:
                w.writerow([r.N, _num(r.l2_error), _num(r.l2_order), _num(r.linf_error), _num(r.linf_order)])
        return path


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def _fmt_label(v) -> str:
    return f"{float(v):g}".replace("-", "m")


def _errors(u: DGField, exact: Callable, T: float, norm: str) -> tuple[float, float]:
    k = u.k
    if norm == "fine":
        return error_l2(u, exact, T, npoints=k + 4), error_linf(u, exact, T, sample="uniform")
    return error_l2(u, exact, T), error_linf(u, exact, T)


def run_convergence_study(cfg: ExperimentConfig, k: int | None = None, beta0=None, beta1=None,
                          progress: Callable[[str], None] | None = None) -> ConvergenceTable:
    """Errors and log2 orders over the N ladder for one degree."""
    k = cfg.k[0] if k is None else k
    prob = make_problem(cfg, beta0, beta1)
    T = cfg.T or prob.T
    dt = cfg.dt or default_dt(cfg.problem, k)
    ns = cfg.n_list or default_n_list(cfg.problem, k)
    table = ConvergenceTable(cfg.problem, k, dt, T)
    b0, b1 = (prob.spec.betas(k) if prob.spec.bc_kind != "periodic" else (None, None))
    table.meta.update(theta=cfg.theta, beta0=b0, beta1=b1, norm=cfg.norm)
    scheme = SchemeConfig(theta=cfg.theta, dt=dt, T=T, solver=cfg.solver)
    for n in ns:
        mesh = prob.mesh(n)
        try:
            op = build_operator(prob.spec, mesh, k)
            u0 = l2_project(prob.initial(), mesh, k)
            traj = evolve(u0, op, scheme)
        except (SolverError, ValueError) as err:
            raise ExperimentError(f"{cfg.problem} failed at k={k}, N={n}: {err}") from err
        l2, linf = _errors(traj.u, prob.exact, T, cfg.norm)
        table.add(n, l2, linf)
        if progress:
            progress(f"{cfg.problem} k={k} N={n}: l2={l2:.6g} linf={linf:.6g}")
    return table


# -- acceptance tags -------------------------------------------------------

@dataclass(frozen=True)
class Tag:
    table: str
    N: int | str
    quantity: str
    value: float
    target: float
    tolerance: str
    passed: bool

    def row(self):
        return [self.table, self.N, self.quantity, _num(self.value), _num(self.target), self.tolerance,
                "pass" if self.passed else "fail"]


def _variant(cfg: ExperimentConfig, table: ConvergenceTable):
    if cfg.problem == "ex53":
        return cfg.a
    if cfg.problem == "ex55":
        return table.meta.get("beta0")
    return None


def reference_tags(cfg: ExperimentConfig, table: ConvergenceTable) -> list[Tag]:
    """Compare rows against reference errors (5%) and orders."""
    ref = lookup(cfg.problem, table.k, _variant(cfg, table))
    dt_ref = default_dt(cfg.problem, table.k)
    if ref is None or cfg.problem == "custom" or not math.isclose(table.dt, dt_ref) or table.T != make_problem(cfg).T:
        return []
    if cfg.theta != 0.5 or cfg.norm != "fine":
        return []
    if cfg.problem in ("ex54", "ex55") and table.meta.get("beta1") not in (0.0, None):
        return []
    atol = ORDER_ATOL.get(cfg.problem, DEFAULT_ORDER_ATOL)
    tags = []
    prev_n = None
    for r in table.rows:
        if r.N in ref:
            err, order = ref[r.N]
            tags.append(Tag(table.name, r.N, "l2_error", r.l2_error, err, f"rel {ERROR_RTOL:g}",
                            abs(r.l2_error - err) <= ERROR_RTOL * err))
            if order is not None and r.l2_order is not None and prev_n is not None and prev_n in ref:
                tags.append(Tag(table.name, r.N, "l2_order", r.l2_order, order, f"abs {atol:g}",
                                abs(r.l2_order - order) <= atol))
        prev_n = r.N
    return tags


def verdict(table: ConvergenceTable) -> str:
    order = table.final_order()
    if order is None:
        return "undetermined"
    return "optimal" if order >= table.k + 0.8 else "suboptimal"


def sweep_tags(cfg: ExperimentConfig, table: ConvergenceTable) -> list[Tag]:
    """Expected optimal/suboptimal behaviour of the boundary parameters."""
    order = table.final_order()
    if order is None or table.T != make_problem(cfg).T:
        return []
    k = table.k
    name, n = table.name, table.rows[-1].N
    if cfg.problem == "ex54":
        b1 = table.meta["beta1"]
        if b1 == 0.0 and k >= 2:
            return [Tag(name, n, "l2_order", order, k + 0.5, "le", order <= k + 0.5)]
        if b1 == 0.0 and k == 1:
            return [Tag(name, n, "l2_order", order, 1.85, "ge", order >= 1.85)]
        if b1 > 0.0:
            return [Tag(name, n, "l2_order", order, k + 0.85, "ge", order >= k + 0.85)]
    if cfg.problem == "ex55" and k == 1:
        b0 = table.meta["beta0"]
        if b0 == 0.0:
            return [Tag(name, n, "l2_order", order, 1.2, "le", order <= 1.2)]
        if b0 == 4.0:
            return [Tag(name, n, "l2_order", order, 1.9, "ge", order >= 1.9)]
    return []


# -- studies ----------------------------------------------------------------

@dataclass
class StudyResult:
    config: ExperimentConfig
    tables: list[ConvergenceTable] = field(default_factory=list)
    tags: list[Tag] = field(default_factory=list)
    sweep: list[tuple] = field(default_factory=list)
    patterns: list[tuple[float, PatternRun]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.tags)


def run_beta_sweep(cfg: ExperimentConfig, progress=None) -> StudyResult:
    """One table per (k, beta) on a bounded problem, with verdicts."""
    if cfg.problem not in ("ex54", "ex55"):
        raise ExperimentError("the beta sweep needs a bounded problem (ex54 or ex55)")
    res = StudyResult(cfg)
    b0s = cfg.beta0 or (None,)
    b1s = cfg.beta1 or (None,)
    for k in cfg.k:
        for b0 in b0s:
            for b1 in b1s:
                table = run_convergence_study(cfg, k, b0, b1, progress)
                table.meta["sweep_beta0"] = cfg.beta0 is not None and len(cfg.beta0) > 0
                table.meta["sweep_beta1"] = cfg.beta1 is not None and len(cfg.beta1) > 0
                res.tables.append(table)
                res.tags += reference_tags(cfg, table) + sweep_tags(cfg, table)
                res.sweep.append((k, table.meta["beta0"], table.meta["beta1"], table.final_order(), verdict(table)))
    return res


def run_study(cfg: ExperimentConfig, progress=None, snapshot_dir=None) -> StudyResult:
    """Dispatch on the problem: pattern runs, beta sweeps or plain ladders."""
    if cfg.problem == "ex56":
        return run_pattern_study(cfg, progress, snapshot_dir)
    if cfg.problem in ("ex54", "ex55"):
        return run_beta_sweep(cfg, progress)
    res = StudyResult(cfg)
    for k in cfg.k:
        table = run_convergence_study(cfg, k, progress=progress)
        res.tables.append(table)
        res.tags += reference_tags(cfg, table)
    return res


def sh_params(cfg: ExperimentConfig, length: float) -> SHParams:
    beta0 = cfg.beta0[0] if cfg.beta0 else None
    return SHParams(D=cfg.D, kappa=cfg.kappa, eps=cfg.eps, g=cfg.g, a=0.0, b=float(length), beta0=beta0)


def run_pattern_study(cfg: ExperimentConfig, progress=None, snapshot_dir=None) -> StudyResult:
    """Swift-Hohenberg runs for every length in ``cfg.lengths``."""
    res = StudyResult(cfg)
    k = cfg.k[0]
    dt = cfg.dt or default_dt("ex56", k)
    T = cfg.T or 150.0
    for length in cfg.lengths:
        params = sh_params(cfg, length)
        n = max(2, int(round(length / cfg.cell_size)))
        sdir = None
        if snapshot_dir is not None and cfg.snapshot_times:
            sdir = Path(snapshot_dir) / f"snapshots_L{_fmt_label(length)}"
            sdir.mkdir(parents=True, exist_ok=True)
        try:
            run = run_sh(params, n, k, dt, T, snapshot_times=cfg.snapshot_times, snapshot_dir=sdir)
        except SolverError as err:
            raise ExperimentError(f"ex56 failed for L={length:g}: {err}") from err
        res.patterns.append((length, run))
        if progress:
            progress(f"ex56 L={length:g}: steady at {run.steady_at}, zeros={count_sign_changes(run.u)}")
    res.tags += pattern_tags(res)
    return res


def pattern_tags(res: StudyResult) -> list[Tag]:
    tags = []
    for length, run in res.patterns:
        name = f"energy_ex56_L{_fmt_label(length)}"
        energies = [run.initial_energy] + [r.energy for r in run.records]
        jumps = np.diff(energies)
        scale = np.maximum(np.abs(energies[1:]), 1e-300)
        worst = float(np.max(jumps / scale)) if jumps.size else 0.0
        tags.append(Tag(name, "all", "max_relative_energy_increase", worst, 1e-12, "le", worst <= 1e-12))
        defects = [abs(r.energy - e0 - r.dissipation) / max(abs(r.energy), 1e-300)
                   for r, e0 in zip(run.records, energies)]
        dmax = float(max(defects)) if defects else 0.0
        tags.append(Tag(name, "all", "energy_identity_defect", dmax, 1e-8, "le", dmax <= 1e-8))
    if len(res.patterns) >= 2:
        (l_small, small), (l_big, big) = min(res.patterns), max(res.patterns)
        zs, zb = count_sign_changes(small.u), count_sign_changes(big.u)
        tags.append(Tag(f"pattern_L{_fmt_label(l_big)}_vs_L{_fmt_label(l_small)}", "final", "interior_zeros",
                        zb, zs, "gt", zb > zs))
    return tags


# -- output -----------------------------------------------------------------

def _versions() -> list[tuple[str, str]]:
    return [("pfdg", __version__), ("numpy", np.__version__), ("scipy", scipy.__version__),
            ("python", platform.python_version())]


def emit_outputs(res: StudyResult, directory) -> list[Path]:
    """Write tables, plot data, energy logs, acceptance tags and a manifest."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ExperimentError(f"cannot create output directory {out}: {err}") from err
    files: list[Path] = []
    try:
        for table in res.tables:
            files.append(table.write_csv(out / f"{table.name}.csv"))
            for col in ("l2", "linf"):
                p = out / f"plot_{table.name[len('table_'):]}_{col}.dat"
                lines = [f"# h {col}_error"]
                length = _domain_length(res.config)
                lines += [f"{length / r.N!r} {getattr(r, col + '_error')!r}" for r in table.rows]
                p.write_text("\n".join(lines) + "\n")
                files.append(p)
        if res.sweep:
            p = out / f"sweep_{res.config.problem}.csv"
            with p.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["k", "beta0", "beta1", "final_l2_order", "verdict"])
                for k, b0, b1, order, v in res.sweep:
                    w.writerow([k, _num(b0), _num(b1), _num(order), v])
            files.append(p)
        for length, run in res.patterns:
            label = _fmt_label(length)
            files.append(write_energy_log(run.records, out / f"energy_ex56_L{label}.csv", run.initial_energy))
            p = out / f"plot_ex56_L{label}_energy.dat"
            lines = ["# t energy", f"{0.0!r} {run.initial_energy!r}"]
            lines += [f"{r.t!r} {r.energy!r}" for r in run.records]
            p.write_text("\n".join(lines) + "\n")
            files.append(p)
            p = out / f"profile_ex56_L{label}.dat"
            xs = np.linspace(0.0, length, 401)
            vals = field_eval(run.u, xs)
            files += run.snapshots
            p.write_text("# x u\n" + "".join(f"{x!r} {float(v)!r}\n" for x, v in zip(xs, vals)))
            files.append(p)
        p = out / "acceptance.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TAG_HEADER)
            for t in res.tags:
                w.writerow(t.row())
        files.append(p)
        manifest = out / "manifest.txt"
        lines = [f"problem: {res.config.problem}", f"config_hash: {res.config.digest()}",
                 "config: " + json.dumps(res.config.to_dict(), sort_keys=True)]
        lines += [f"version_{name}: {ver}" for name, ver in _versions()]
        lines += [f"file: {f.name}" for f in files]
        npass = sum(t.passed for t in res.tags)
        lines.append(f"acceptance: {npass}/{len(res.tags)} tagged rows pass")
        manifest.write_text("\n".join(lines) + "\n")
        files.append(manifest)
    except OSError as err:
        raise ExperimentError(f"failed writing outputs in {out}: {err}") from err
    return files


def _domain_length(cfg: ExperimentConfig) -> float:
    if cfg.problem in ("ex51", "ex54", "custom"):
        return 2 * np.pi
    if cfg.problem == "ex52":
        return 4 * np.pi
    if cfg.problem == "ex53":
        return 2 * np.pi / cfg.a
    return 3 * np.pi
