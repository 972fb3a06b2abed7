"""Exponential integral E1(x) = int_x^inf exp(-q)/q dq for real x > 0."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["exp_integral_e1", "exp_scaled_e1"]

EULER_GAMMA = 0.57721566490153286061
_EPS = 1e-16
_FPMIN = 1e-300
_MAXIT = 500


def _series(x: float) -> float:
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k * k!)
    total = 0.0
    term = 1.0
    for k in range(1, _MAXIT):
        term *= -x / k
        contrib = term / k
        total += contrib
        if abs(contrib) < _EPS * abs(total):
            break
    return -EULER_GAMMA - math.log(x) - total


def _scaled_cf(x: float) -> float:
    """exp(x) * E1(x) by the modified Lentz continued fraction."""
    b = x + 1.0
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAXIT):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"E1 continued fraction failed to converge at x={x}")


def _check(x: float) -> float:
    x = float(x)
    if not x > 0 or math.isnan(x):
        raise ValueError(f"E1 is defined here for x > 0, got {x}")
    return x


def _e1(x: float) -> float:
    x = _check(x)
    if x <= 1.0:
        return _series(x)
    if x > 745.0:
        return 0.0
    return math.exp(-x) * _scaled_cf(x)


def _scaled(x: float) -> float:
    x = _check(x)
    if x <= 1.0:
        return math.exp(x) * _series(x)
    return _scaled_cf(x)


def exp_integral_e1(x):
    """E1(x) for x > 0 (scalar or array).

    Power series for ``x <= 1``, continued fraction above.

    Raises
    ------
    ValueError
        If any ``x <= 0``.
    """
    if np.ndim(x) == 0:
        return _e1(x)
    return np.vectorize(_e1, otypes=[float])(x)


def exp_scaled_e1(x):
    """``exp(x) * E1(x)``, finite for large x where E1 underflows.

    ``exp_scaled_e1(1/s) / ln 2`` is E[log2(1 + s|U|^2)] for a unit-mean
    exponential ``|U|^2``.
    """
    if np.ndim(x) == 0:
        return _scaled(x)
    return np.vectorize(_scaled, otypes=[float])(x)
