"""Special functions and quadrature kernels.

The exponential integral and the order -1 upper incomplete gamma function are
evaluated in *scaled* form (multiplied by ``exp(x)``) so that products such as
``exp(2x) * |Gamma(-1, x0) - Gamma(-1, x1)|**2`` never overflow.
"""
from __future__ import annotations

import functools
import math

import numpy as np
from scipy import linalg

EULER_GAMMA = 0.57721566490153286061

_SERIES_MAX_TERMS = 200
_CF_MAX_ITER = 500
_TINY = 1e-300


class QuadratureError(RuntimeError):
    """Raised when an integration rule fails to reach its tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved relative change {achieved:.3e})")
        self.achieved = achieved


def _exp1_series(x: float) -> float:
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    total = 0.0
    term = 1.0
    for k in range(1, _SERIES_MAX_TERMS):
        term *= -x / k
        contrib = term / k
        total += contrib
        if abs(contrib) < 1e-17 * abs(total):
            break
    return -EULER_GAMMA - math.log(x) - total


def _exp1_scaled_cf(x: float) -> float:
    # modified Lentz evaluation of exp(x) E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
    b = x + 1.0
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAX_ITER):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise QuadratureError("continued fraction for E1 did not converge", abs(delta - 1.0))


def exp1(x: float) -> float:
    """Exponential integral E1(x) for x > 0."""
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"exp1 requires x > 0, got {x}")
    if x < 1.0:
        return _exp1_series(x)
    return math.exp(-x) * _exp1_scaled_cf(x)


def exp1_scaled(x: float) -> float:
    """Return ``exp(x) * E1(x)`` without overflow for large x."""
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"exp1_scaled requires x > 0, got {x}")
    if x < 1.0:
        return math.exp(x) * _exp1_series(x)
    return _exp1_scaled_cf(x)


def gamma_m1_scaled(x: float) -> float:
    """Return ``exp(x) * Gamma(-1, x)`` using Gamma(-1, x) = exp(-x)/x - E1(x)."""
    return 1.0 / x - exp1_scaled(x)


def gamma_m1(x: float) -> float:
    """Upper incomplete gamma function of order -1."""
    return math.exp(-x) * gamma_m1_scaled(x)


@functools.lru_cache(maxsize=16)
def laguerre_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Laguerre nodes and weights by Golub-Welsch.

    The Jacobi matrix has diagonal 2k+1 and off-diagonal k; weights are the
    squared first eigenvector components. Stays accurate at orders where the
    recurrence-based rules overflow. Far-tail weights underflow to 0.
    """
    k = np.arange(1, n, dtype=float)
    nodes, vecs = linalg.eigh_tridiagonal(2.0 * np.arange(n) + 1.0, k)
    weights = vecs[0] ** 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_laguerre_integrate(func, rtol=1e-8, start_nodes=16, max_nodes=4096):
    """Integrate ``exp(-t) * func(t)`` over [0, inf) with Gauss-Laguerre rules.

    The node count doubles until two successive estimates agree to ``rtol``.
    ``func`` must accept a numpy array of nodes.

    Returns:
        (value, n_nodes) of the converged rule.

    Raises:
        QuadratureError: if ``max_nodes`` is reached first.
    """
    n = start_nodes
    nodes, weights = laguerre_rule(n)
    prev = float(np.dot(weights, func(nodes)))
    change = math.inf
    while n < max_nodes:
        n *= 2
        nodes, weights = laguerre_rule(n)
        cur = float(np.dot(weights, func(nodes)))
        change = abs(cur - prev) / max(abs(cur), _TINY)
        if change < rtol:
            return cur, n
        prev = cur
    raise QuadratureError(f"Gauss-Laguerre did not converge with {max_nodes} nodes", change)
