"""Zeroth-order Bessel function of the first kind.

Implemented directly so it can serve as an independent oracle for the
oscillatory k-space quadrature. Three regimes, each accurate to ~1e-14:

* |x| <= 8        ascending power series
* 8 < |x| <= 25   Miller backward recurrence normalised by 1 = J0 + 2 sum J_2k
* |x| > 25        Hankel asymptotic expansion
"""
import math

import numpy as np

_SERIES_MAX = 8.0
_MILLER_MAX = 25.0
_MILLER_START = 90
_ASYMPTOTIC_TERMS = 18


def _series(x):
    q = -(x * x) / 4.0
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 40):
        term = term * q / (k * k)
        total = total + term
    return total


def _miller(x):
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    for n in range(_MILLER_START, 0, -1):
        j_prev = (2.0 * n / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds J_{n-1}
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm = norm + 2.0 * j_cur
        big = np.abs(j_cur) > 1e250
        if np.any(big):
            s = np.where(big, 1e-250, 1.0)
            j_cur, j_next, norm = j_cur * s, j_next * s, norm * s
    norm = norm + j_cur
    return j_cur / norm


def _asymptotic(x):
    # J0 ~ sqrt(2/(pi x)) (P cos chi + Q sin chi) with
    # P = sum (-1)^k a_2k / x^2k, Q = sum (-1)^k a_{2k+1} / x^{2k+1},
    # a_j = prod_{i=1..j} (2i-1)^2 / (j! 8^j)
    coeffs = [1.0]
    for j in range(1, 2 * _ASYMPTOTIC_TERMS + 2):
        coeffs.append(coeffs[-1] * (2 * j - 1) ** 2 / (8.0 * j))
    P = np.zeros_like(x)
    Q = np.zeros_like(x)
    inv = 1.0 / x
    for k in range(_ASYMPTOTIC_TERMS):
        sign = -1.0 if k % 2 else 1.0
        P = P + sign * coeffs[2 * k] * inv ** (2 * k)
        Q = Q + sign * coeffs[2 * k + 1] * inv ** (2 * k + 1)
    chi = x - math.pi / 4
    return np.sqrt(2.0 / (math.pi * x)) * (P * np.cos(chi) + Q * np.sin(chi))


def j0(x):
    """J0(x) for scalar or array ``x``."""
    scalar = np.ndim(x) == 0
    x = np.abs(np.atleast_1d(np.asarray(x, dtype=float)))
    out = np.empty_like(x)
    small = x <= _SERIES_MAX
    mid = (x > _SERIES_MAX) & (x <= _MILLER_MAX)
    large = x > _MILLER_MAX
    if np.any(small):
        out[small] = _series(x[small])
    if np.any(mid):
        out[mid] = _miller(x[mid])
    if np.any(large):
        out[large] = _asymptotic(x[large])
    return float(out[0]) if scalar else out
