"""Special functions and exact combinatorial numbers.

``log_gamma`` and ``digamma`` are thin wrappers around :func:`math.lgamma`
and :func:`scipy.special.digamma`; the exact helpers return Python integers
or :class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special as _sp

EULER_GAMMA = float(np.euler_gamma)
SQRT_PI = math.sqrt(math.pi)


def log_gamma(x: float) -> float:
    if x <= 0:
        raise ValueError(f"log_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def digamma(x: float) -> float:
    if x <= 0:
        raise ValueError(f"digamma needs x > 0, got {x}")
    return float(_sp.digamma(x))


def log_factorial(m: int) -> float:
    return math.lgamma(m + 1.0)


@lru_cache(maxsize=None)
def _harmonic_cached(n: int) -> Fraction:
    # iterative fill keeps recursion depth flat
    h = Fraction(0)
    for j in range(1, n + 1):
        h += Fraction(1, j)
    return h


def harmonic(n: int) -> Fraction:
    """Exact harmonic number ``H_n`` (``H_0 = 0``)."""
    if n < 0:
        raise ValueError("harmonic needs n >= 0")
    return _harmonic_cached(n)


def harmonic_sequence(n_max: int) -> list[Fraction]:
    """``[H_0, H_1, ..., H_{n_max}]`` in one pass."""
    out = [Fraction(0)]
    for j in range(1, n_max + 1):
        out.append(out[-1] + Fraction(1, j))
    return out


def catalan(n: int) -> int:
    """Shifted Catalan number: C_1 = C_2 = 1, C_3 = 2, C_4 = 5."""
    if n < 1:
        raise ValueError("shifted Catalan numbers start at n = 1")
    return math.comb(2 * n - 2, n - 1) // n


def double_factorial_odd(m: int) -> int:
    """``m!!`` for odd ``m >= -1`` (``(-1)!! = 1``)."""
    out = 1
    for j in range(m, 0, -2):
        out *= j
    return out


def log_sum_exp(values) -> float:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return -math.inf
    top = float(arr.max())
    if top == -math.inf:
        return top
    return top + math.log(float(np.exp(arr - top).sum()))
