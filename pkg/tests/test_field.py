import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import sample_quadrature
from pfdg.field import (DGField, cell_values, convergence_order, error_l2, error_linf, eval, eval_derivative,
                        l2_project, read_snapshot, write_snapshot)
from pfdg.mesh import build_mesh_1d, build_mesh_2d


@pytest.mark.parametrize("k", [1, 2, 3])
def test_projection_matches_fine_oracle(k):
    m = build_mesh_1d(0.0, 2 * math.pi, 7)
    f = lambda x: np.exp(np.sin(x))
    u = l2_project(f, m, k, npoints=30)
    np.testing.assert_allclose(u.coeffs * math.sqrt(m.h / 2), sample_quadrature(f, 0, 2 * math.pi, 7, k) * math.sqrt(m.h / 2),
                               atol=1e-13)


def test_parseval():
    m = build_mesh_1d(0.0, 1.0, 6)
    rng = np.random.default_rng(0)
    u = DGField(m, 3, rng.standard_normal((6, 4)))
    direct = error_l2(u, lambda x: 0.0 * x, npoints=8)
    assert u.norm() == pytest.approx(direct, rel=1e-13)


@given(seed=st.integers(0, 2**31 - 1), k=st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_projection_is_idempotent(seed, k):
    m = build_mesh_1d(0.0, 3.0, 5)
    u = DGField(m, k, np.random.default_rng(seed).standard_normal((5, k + 1)))
    v = l2_project(lambda x: eval(u, x), m, k)
    np.testing.assert_allclose(v.coeffs, u.coeffs, atol=1e-12)


def test_polynomial_reproduced():
    m = build_mesh_1d(-1.0, 2.0, 4, "bounded")
    u = l2_project(lambda x: x**2, m, 2)
    x = np.linspace(-1.0, 2.0, 37)
    np.testing.assert_allclose(eval(u, x), x**2, atol=1e-13)
    np.testing.assert_allclose(eval_derivative(u, x), 2 * x, atol=1e-12)
    assert error_l2(u, lambda x: x**2) < 1e-13


def test_traces_at_edges():
    m = build_mesh_1d(0.0, 2.0, 2)
    u = DGField(m, 0, np.array([[1.0], [3.0]]))
    assert eval(u, 1.0, side="left") == pytest.approx(1 / math.sqrt(2))
    assert eval(u, 1.0, side="right") == pytest.approx(3 / math.sqrt(2))
    assert eval(u, 0.0, side="left") == pytest.approx(3 / math.sqrt(2))


def test_linear_algebra_helpers():
    m = build_mesh_1d(0.0, 1.0, 3)
    a = DGField(m, 1, np.ones((3, 2)))
    b = a * 2.0
    assert (b - a).inner(a) == pytest.approx(a.norm() ** 2)
    with pytest.raises(ValueError):
        DGField(m, 1, np.ones((3, 3)))


def test_linf_sampling_modes():
    m = build_mesh_1d(0.0, 2 * math.pi, 10)
    u = l2_project(np.sin, m, 1)
    g = error_linf(u, np.sin)
    uni = error_linf(u, np.sin, sample="uniform")
    assert uni > g > 0
    with pytest.raises(ValueError):
        error_linf(u, np.sin, sample="random")


@pytest.mark.parametrize("k", [1, 2, 3])
def test_projection_order(k):
    errs = []
    for n in (10, 20):
        m = build_mesh_1d(0.0, 2 * math.pi, n)
        errs.append(error_l2(l2_project(np.sin, m, k), np.sin, npoints=k + 4))
    assert convergence_order(*errs) == pytest.approx(k + 1, abs=0.15)


def test_snapshot_round_trip_1d(tmp_path):
    m = build_mesh_1d(0.0, 3 * math.pi, 5, "bounded")
    u = DGField(m, 2, np.random.default_rng(1).standard_normal((5, 3)))
    v, t = read_snapshot(write_snapshot(u, tmp_path / "s.csv", 0.25))
    assert t == 0.25 and v.mesh == m
    np.testing.assert_array_equal(v.coeffs, u.coeffs)


def test_snapshot_round_trip_2d(tmp_path):
    m = build_mesh_2d(((0.0, 1.0), (0.0, 2.0)), 3, 2)
    u = DGField(m, 1, np.random.default_rng(2).standard_normal((3, 2, 2, 2)))
    v, _ = read_snapshot(write_snapshot(u, tmp_path / "s2.csv"))
    np.testing.assert_array_equal(v.coeffs, u.coeffs)


def test_2d_projection_of_product():
    m = build_mesh_2d(((0.0, 2 * math.pi), (0.0, 2 * math.pi)), 4, 4)
    u = l2_project(lambda x, y: x * y, m, 1)
    assert u(1.0, 2.0) == pytest.approx(2.0, abs=1e-12)
    vals = cell_values(u, np.array([0.0]))
    assert vals.shape == (4, 4, 1, 1)
