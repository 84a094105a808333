"""Quadrature rules on the reference triangle and on line segments."""

from functools import lru_cache

import numpy as np

# Edge-midpoint rule: exact for quadratics.
MIDPOINT_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
MIDPOINT_WEIGHTS = np.full(3, 1.0 / 3.0)


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def triangle_rule(degree=2):
    """Barycentric points and weights (summing to 1) exact to ``degree``.

    Degree <= 2 returns the three-point edge-midpoint rule; higher degrees
    use a collapsed Gauss product rule, which has positive weights.
    """
    if degree <= 2:
        return MIDPOINT_BARY, MIDPOINT_WEIGHTS
    n = (degree + 3) // 2
    s, ws = gauss_legendre(n)
    u, v = np.meshgrid(s, s, indexing="ij")
    wu, wv = np.meshgrid(ws, ws, indexing="ij")
    xi = u.ravel()
    eta = (v * (1.0 - u)).ravel()
    w = (wu * wv * (1.0 - u)).ravel() * 2.0
    bary = np.column_stack([1.0 - xi - eta, xi, eta])
    return bary, w


def segment_rule(degree=3):
    """Points in [0, 1] and weights for 1D integrals exact to ``degree``."""
    return gauss_legendre(max(1, (degree + 2) // 2))
