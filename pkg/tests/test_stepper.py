import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfdg.field import DGField, error_l2, l2_project
from pfdg.forms import OperatorSpec, build_operator
from pfdg.mesh import build_mesh_1d, build_mesh_2d
from pfdg.stepper import (CFLError, NormLogger, SchemeConfig, ThetaStepper, cfl_max_dt, energy_identity_defect, evolve,
                          gamma_k, recover_q, time_levels)

TWO_PI = 2 * math.pi


def _ex51(n=10, k=1):
    m = build_mesh_1d(0.0, TWO_PI, n)
    op = build_operator(OperatorSpec(), m, k)
    return op, l2_project(np.sin, m, k)


def test_gamma_values():
    assert gamma_k(1) == pytest.approx(39.7128, abs=1e-4)
    assert gamma_k(2) == pytest.approx(275.647, abs=1e-3)
    with pytest.raises(ValueError):
        gamma_k(0)


def test_cfl_bound():
    h = TWO_PI / 10
    assert cfl_max_dt(1, h, 0.0) == pytest.approx(2 * h**4 / gamma_k(1) ** 2)
    assert cfl_max_dt(1, h, 0.0) == pytest.approx(1.976e-4, rel=1e-3)
    assert cfl_max_dt(1, h, 0.25) == pytest.approx(2 * cfl_max_dt(1, h, 0.0))
    assert cfl_max_dt(2, h, 0.5) == math.inf


def test_cfl_violation_raises():
    op, _ = _ex51()
    with pytest.raises(CFLError):
        ThetaStepper(op, SchemeConfig(theta=0.0, dt=1e-3, T=1.0))
    ThetaStepper(op, SchemeConfig(theta=0.0, dt=1e-3, T=1.0, allow_cfl_violation=True))


def test_invalid_scheme():
    with pytest.raises(ValueError):
        SchemeConfig(theta=1.5)
    with pytest.raises(ValueError):
        SchemeConfig(dt=0.0)
    with pytest.raises(ValueError):
        SchemeConfig(solver="cg")


@pytest.mark.parametrize("theta", [0.5, 0.75, 1.0])
def test_energy_identity(theta):
    op, u = _ex51(10, 2)
    st_ = ThetaStepper(op, SchemeConfig(theta=theta, dt=0.05, T=1.0))
    q = st_.initial_q(u)
    for _ in range(5):
        u1, q1 = st_.step(u, q)
        assert energy_identity_defect(u, u1, q, q1, theta, 0.05) < 1e-9
        u, q = u1, q1


@given(theta=st.floats(0.5, 1.0), seed=st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_energy_identity_random_data(theta, seed):
    op, _ = _ex51(7, 2)
    u = DGField(op.mesh, 2, np.random.default_rng(seed).standard_normal((7, 3)))
    st_ = ThetaStepper(op, SchemeConfig(theta=theta, dt=0.1, T=1.0))
    q = st_.initial_q(u)
    u1, q1 = st_.step(u, q)
    assert energy_identity_defect(u, u1, q, q1, theta, 0.1) < 1e-9


@pytest.mark.parametrize("theta", [0.5, 1.0])
def test_unconditional_decay_at_large_dt(theta):
    op, u = _ex51(20, 2)
    log = NormLogger()
    evolve(u, op, SchemeConfig(theta=theta, dt=10.0, T=100.0), [log])
    norms = [r[2] for r in log.rows]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))


def test_solvers_agree_1d():
    op, u = _ex51(10, 2)
    outs = []
    for solver in ("direct", "minres", "schur"):
        st_ = ThetaStepper(op, SchemeConfig(dt=0.01, solver=solver))
        outs.append(st_.step(u, st_.initial_q(u))[0].vector)
    np.testing.assert_allclose(outs[1], outs[0], atol=1e-9)
    np.testing.assert_allclose(outs[2], outs[0], atol=1e-11)


def test_solvers_agree_2d():
    m = build_mesh_2d(((0.0, TWO_PI), (0.0, TWO_PI)), 4, 4)
    op = build_operator(OperatorSpec(a1=-1.0), m, 1)
    u = l2_project(lambda x, y: np.sin(x) * np.sin(y), m, 1)
    outs = []
    for solver in ("direct", "minres", "schur"):
        st_ = ThetaStepper(op, SchemeConfig(dt=0.01, solver=solver))
        outs.append(st_.step(u, st_.initial_q(u))[0].vector)
    np.testing.assert_allclose(outs[1], outs[0], atol=1e-9)
    np.testing.assert_allclose(outs[2], outs[0], atol=1e-11)


def test_block_residual_small():
    op, u = _ex51(10, 2)
    st_ = ThetaStepper(op, SchemeConfig(dt=0.01))
    q = st_.initial_q(u)
    u1, q1 = st_.step(u, q)
    assert st_.block_residual(u.vector, q.vector, u1.vector, q1.vector, 0.0, 0.01) < 1e-12


def test_zero_stays_zero():
    op, u = _ex51(8, 2)
    z = DGField.zeros(op.mesh, 2)
    traj = evolve(z, op, SchemeConfig(dt=0.1, T=1.0))
    assert not np.any(traj.u.vector)


def test_recover_q():
    op, u = _ex51(10, 2)
    q = recover_q(u, op.form)
    np.testing.assert_allclose(q.vector, op.form.dense() @ u.vector / (op.mesh.h / 2), atol=1e-13)


def test_explicit_matches_implicit_limit():
    op, u = _ex51(10, 1)
    dt = 0.5 * cfl_max_dt(1, op.mesh.h, 0.0)
    st_ = ThetaStepper(op, SchemeConfig(theta=0.0, dt=dt))
    q = st_.initial_q(u)
    u1, _ = st_.step(u, q)
    expected = u.vector - dt * (op.form.dense().T @ q.vector) / (op.mesh.h / 2)
    np.testing.assert_allclose(u1.vector, expected, atol=1e-14)


def test_growth_bound():
    m = build_mesh_1d(0.0, TWO_PI, 12)
    spec = OperatorSpec(a0=0.2, a1=-1.0, a2=-1.0)
    op = build_operator(spec, m, 2)
    u0 = l2_project(lambda x: np.sin(x) + np.cos(3 * x), m, 2)
    log = NormLogger()
    evolve(u0, op, SchemeConfig(dt=0.01, T=1.0), [log])
    for _, t, un, _ in log.rows:
        assert un <= math.exp(spec.growth * t) * u0.norm() * (1 + 1e-10)


def test_ex53_mode_decays_at_exact_rate():
    a = 0.5
    m = build_mesh_2d(((0.0, TWO_PI / a), (0.0, TWO_PI / a)), 8, 8)
    op = build_operator(OperatorSpec(a1=-1.0), m, 2)
    ex = lambda x, y, t: np.exp(-(4 * a**4 - 2 * a**2) * t) * np.sin(a * x) * np.sin(a * y)
    u0 = l2_project(lambda x, y: ex(x, y, 0.0), m, 2)
    traj = evolve(u0, op, SchemeConfig(dt=1e-3, T=0.1))
    assert error_l2(traj.u, ex, 0.1, npoints=6) == pytest.approx(0.090608, rel=0.05)


def test_time_levels():
    assert time_levels(1.0, 0.25) == [0.25] * 4
    sizes = time_levels(1.0, 0.3)
    assert len(sizes) == 4 and sum(sizes) == pytest.approx(1.0)


def test_norm_logger_csv(tmp_path):
    op, u = _ex51(6, 1)
    log = NormLogger(tmp_path / "n.csv")
    evolve(u, op, SchemeConfig(dt=0.1, T=0.3), [log])
    lines = log.write().read_text().splitlines()
    assert lines[0] == "step,t,u_norm,q_norm" and len(lines) == 5


def test_ex51_accuracy():
    op, u = _ex51(20, 2)
    traj = evolve(u, op, SchemeConfig(dt=5e-4, T=1.0))
    ex = lambda x, t: np.exp(-t) * np.sin(x)
    assert error_l2(traj.u, ex, 1.0, npoints=6) == pytest.approx(0.000559636, rel=0.05)
