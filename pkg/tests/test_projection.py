import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfdg.field import DGField, convergence_order, error_l2
from pfdg.mesh import build_mesh_1d, build_mesh_2d
from pfdg.projection import (check_galerkin_orthogonality, galerkin_residual_2d, project_P, project_Pi_2d,
                             projection_system, ProjectionError)

TWO_PI = 2 * math.pi


def _n_for(k, n):
    return n + 1 if k == 1 and n % 2 == 0 else n


@given(seed=st.integers(0, 2**31 - 1), k=st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_P_reproduces_discrete_fields(seed, k):
    m = build_mesh_1d(0.0, TWO_PI, _n_for(k, 6))
    v = DGField(m, k, np.random.default_rng(seed).standard_normal((m.n, k + 1)))
    np.testing.assert_allclose(project_P(v, m, k).coeffs, v.coeffs, atol=1e-10)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_P_order(k):
    errs = []
    for n in (9, 19, 39) if k == 1 else (10, 20, 40):
        m = build_mesh_1d(0.0, TWO_PI, n)
        errs.append(error_l2(project_P(np.sin, m, k, dw=np.cos), np.sin, npoints=k + 4))
    if k == 1:
        # odd N ladder is not dyadic; use the h ratio
        order = math.log(errs[1] / errs[2]) / math.log(39 / 19)
    else:
        order = convergence_order(errs[1], errs[2])
    assert order == pytest.approx(k + 1, abs=0.15)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_galerkin_orthogonality(k):
    m = build_mesh_1d(0.0, TWO_PI, _n_for(k, 12))
    w = lambda x: np.sin(x) + 0.3 * np.cos(2 * x)
    dw = lambda x: np.cos(x) - 0.6 * np.sin(2 * x)
    assert check_galerkin_orthogonality(w, m, k, dw=dw) < 1e-9


def test_galerkin_needs_derivative():
    m = build_mesh_1d(0.0, TWO_PI, 5)
    with pytest.raises(TypeError):
        check_galerkin_orthogonality(np.sin, m, 1)
    with pytest.raises(TypeError):
        project_P(np.sin, m, 1)


def test_k1_even_system_is_rejected():
    with pytest.raises(ProjectionError):
        projection_system(build_mesh_1d(0.0, TWO_PI, 6), 1)


def _w2():
    w = lambda x, y: np.sin(x) * np.cos(y)
    derivs = {"x": lambda x, y: np.cos(x) * np.cos(y), "y": lambda x, y: -np.sin(x) * np.sin(y),
              "xy": lambda x, y: -np.cos(x) * np.sin(y)}
    return w, derivs


@pytest.mark.parametrize("k", [2, 3])
def test_Pi_reproduces_discrete_fields(k):
    m = build_mesh_2d(((0.0, TWO_PI), (0.0, TWO_PI)), 4, 5)
    v = DGField(m, k, np.random.default_rng(k).standard_normal((4, 5, k + 1, k + 1)))
    np.testing.assert_allclose(project_Pi_2d(v, m, k).coeffs, v.coeffs, atol=1e-10)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_2d_residual_order(k):
    w, derivs = _w2()
    ns = {1: (17, 33), 2: (16, 32), 3: (8, 16)}[k]
    res = [galerkin_residual_2d(w, derivs, build_mesh_2d(((0.0, TWO_PI), (0.0, TWO_PI)), n, n), k) for n in ns]
    order = math.log(res[0] / res[1]) / math.log(ns[1] / ns[0])
    assert order == pytest.approx(k + 2, abs=0.25)


def test_2d_residual_norm_choice():
    w, derivs = _w2()
    m = build_mesh_2d(((0.0, TWO_PI), (0.0, TWO_PI)), 6, 6)
    assert galerkin_residual_2d(w, derivs, m, 2, "dual") >= galerkin_residual_2d(w, derivs, m, 2, "basis")
    with pytest.raises(ValueError):
        galerkin_residual_2d(w, derivs, m, 2, "sup")
