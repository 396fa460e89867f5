import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfdg.quadrature import eval_basis, gauss_legendre, reference_basis


def test_one_point_rule():
    r = gauss_legendre(1)
    assert r.nodes.tolist() == [0.0] and r.weights.tolist() == [2.0]


def test_two_point_rule():
    r = gauss_legendre(2)
    np.testing.assert_allclose(r.nodes, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(r.weights, [1.0, 1.0], atol=1e-15)


def test_xi8_with_five_points():
    r = gauss_legendre(5)
    assert abs(r.integrate(r.nodes**8) - 2 / 9) < 1e-14


def test_matches_numpy_rule():
    for n in range(1, 12):
        x, w = np.polynomial.legendre.leggauss(n)
        r = gauss_legendre(n)
        np.testing.assert_allclose(r.nodes, x, atol=1e-14)
        np.testing.assert_allclose(r.weights, w, atol=1e-14)


@given(n=st.integers(1, 10), data=st.data())
@settings(max_examples=60, deadline=None)
def test_exact_to_degree_2n_minus_1(n, data):
    p = data.draw(st.integers(0, 2 * n - 1))
    r = gauss_legendre(n)
    exact = 0.0 if p % 2 else 2.0 / (p + 1)
    assert abs(r.integrate(r.nodes**p) - exact) < 1e-13


@pytest.mark.parametrize("bad", [0, -1, 2.5])
def test_invalid_point_count(bad):
    with pytest.raises(ValueError):
        gauss_legendre(bad)


@pytest.mark.parametrize("k", range(0, 7))
def test_orthonormal(k):
    r = gauss_legendre(k + 2)
    v, _ = eval_basis(k, r.nodes)
    np.testing.assert_allclose((v * r.weights) @ v.T, np.eye(k + 1), atol=1e-13)


def test_known_values():
    v, d = eval_basis(1, np.array([0.0, 1.0]))
    assert abs(v[0, 0] - 1 / math.sqrt(2)) < 1e-15
    assert abs(v[1, 1] - math.sqrt(1.5)) < 1e-15
    assert abs(d[1, 0] - math.sqrt(1.5)) < 1e-15


@given(k=st.integers(0, 6), xi=st.floats(-0.99, 0.99))
@settings(max_examples=60, deadline=None)
def test_derivative_finite_difference(k, xi):
    eps = 1e-6
    _, d = eval_basis(k, np.array([xi]))
    vp, _ = eval_basis(k, np.array([xi + eps]))
    vm, _ = eval_basis(k, np.array([xi - eps]))
    np.testing.assert_allclose(d[:, 0], (vp - vm)[:, 0] / (2 * eps), atol=1e-5 * (k + 1) ** 2)


def test_out_of_range_point_rejected():
    with pytest.raises(ValueError):
        eval_basis(2, np.array([1.5]))


def test_reference_traces_and_stiffness():
    ref = reference_basis(3)
    i = np.arange(4)
    np.testing.assert_allclose(ref.right, np.sqrt((2 * i + 1) / 2), atol=1e-14)
    np.testing.assert_allclose(ref.left, (-1.0) ** i * np.sqrt((2 * i + 1) / 2), atol=1e-14)
    assert np.allclose(ref.stiffness, ref.stiffness.T)
    assert abs(ref.stiffness[0, 0]) < 1e-15
