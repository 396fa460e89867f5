"""Gauss-Legendre rules and the orthonormal Legendre basis on [-1, 1].

Everything here lives on the reference cell.  Physical cells map through
``x = x_c + (h/2) * xi``, so a physical derivative is ``(2/h) * d/dxi``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_DEGREE = 8


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def npoints(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate samples taken at ``nodes`` (last axis) over [-1, 1]."""
        return np.asarray(values) @ self.weights


def _legendre_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for m in range(1, n):
        p_prev, p = p, ((2 * m + 1) * x * p - m * p_prev) / (m + 1)
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadratureRule:
    """Return the ``n``-point Gauss-Legendre rule on [-1, 1].

    Nodes are the roots of P_n found by Newton iteration from the
    Chebyshev-like initial guess; the rule is exact for degree ``2n - 1``.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"number of quadrature points must be a positive integer, got {n!r}")
    n = int(n)
    if n == 1:
        nodes, weights = np.array([0.0]), np.array([2.0])
    else:
        i = np.arange(1, n + 1)
        x = -np.cos(np.pi * (i - 0.25) / (n + 0.5))
        for _ in range(100):
            p, dp = _legendre_and_derivative(n, x)
            dx = p / dp
            x = x - dx
            if np.max(np.abs(dx)) < 1e-15:
                break
        _, dp = _legendre_and_derivative(n, x)
        weights = 2.0 / ((1.0 - x * x) * dp * dp)
        # exact symmetry about 0
        x = 0.5 * (x - x[::-1])
        weights = 0.5 * (weights + weights[::-1])
        nodes = x
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights)


def eval_basis(k: int, xi) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal Legendre values and xi-derivatives.

    Returns ``(values, derivatives)``, each of shape ``(k + 1,) + shape(xi)``,
    with ``phi_i = sqrt((2i + 1) / 2) * P_i``.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(np.abs(xi) > 1.0 + 1e-12):
        raise ValueError("reference coordinate outside [-1, 1]")
    vals = np.empty((k + 1,) + xi.shape)
    ders = np.empty_like(vals)
    vals[0] = 1.0
    ders[0] = 0.0
    if k >= 1:
        vals[1] = xi
        ders[1] = 1.0
    for i in range(1, k):
        vals[i + 1] = ((2 * i + 1) * xi * vals[i] - i * vals[i - 1]) / (i + 1)
        ders[i + 1] = ders[i - 1] + (2 * i + 1) * vals[i]
    scale = np.sqrt((2 * np.arange(k + 1) + 1) / 2.0).reshape((k + 1,) + (1,) * xi.ndim)
    return vals * scale, ders * scale


@dataclass(frozen=True)
class ReferenceBasis:
    """Tabulated basis of degree ``k`` on the reference cell.

    ``values[i, q]`` and ``derivs[i, q]`` sample mode ``i`` at quadrature node
    ``q``; ``left``/``right`` hold traces at xi = -1 / +1.
    """

    k: int
    rule: QuadratureRule
    values: np.ndarray
    derivs: np.ndarray
    left: np.ndarray
    right: np.ndarray
    dleft: np.ndarray
    dright: np.ndarray
    stiffness: np.ndarray  # int_{-1}^{1} phi_i' phi_j' dxi

    @property
    def nmodes(self) -> int:
        return self.k + 1


@lru_cache(maxsize=None)
def reference_basis(k: int, npoints: int | None = None) -> ReferenceBasis:
    if k < 0 or k > MAX_DEGREE:
        raise ValueError(f"degree must lie in [0, {MAX_DEGREE}], got {k}")
    rule = gauss_legendre(k + 2 if npoints is None else npoints)
    values, derivs = eval_basis(k, rule.nodes)
    ends, dends = eval_basis(k, np.array([-1.0, 1.0]))
    stiffness = (derivs * rule.weights) @ derivs.T
    stiffness = 0.5 * (stiffness + stiffness.T)  # exact symmetry despite BLAS rounding
    return ReferenceBasis(
        k=k,
        rule=rule,
        values=values,
        derivs=derivs,
        left=ends[:, 0].copy(),
        right=ends[:, 1].copy(),
        dleft=dends[:, 0].copy(),
        dright=dends[:, 1].copy(),
        stiffness=stiffness,
    )
