"""Marchenko-Pastur moments in exact rational arithmetic.

``M_r`` is the r-th moment of the limiting spectral law of ``c_N S S*``
(Narayana polynomial in ``c``), ``h_u = c**-u * M_u`` are the moments of the
same law rescaled to ``S S*`` and ``a_m`` are the moments of ``S S* + sigma2``.
All three are evaluated with :class:`fractions.Fraction` and only converted
to float on return, so binomial cancellations cost nothing.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, sqrt

__all__ = [
    "MAX_DEGREE",
    "MomentTable",
    "mp_moment",
    "scaled_h",
    "shifted_a",
    "mp_support",
    "moment_table",
]

MAX_DEGREE = 24


def _q(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@lru_cache(maxsize=4096)
def _mp_moment_exact(r: int, c: Fraction) -> Fraction:
    if r == 0:
        return Fraction(1)
    return sum((c**k * comb(r, k) * comb(r - 1, k) / (k + 1) for k in range(r)), Fraction(0))


def _check_degree(r):
    if r < 0:
        raise ValueError("degree must be nonnegative")
    if r > MAX_DEGREE:
        raise ValueError(f"degree {r} exceeds supported maximum {MAX_DEGREE}")


def mp_moment(r: int, c, exact: bool = False):
    """Raw moment ``M_r = sum_k c^k/(k+1) C(r,k) C(r-1,k)``; ``M_0 = 1``."""
    _check_degree(r)
    if not c > 0:
        raise ValueError("ratio c must be positive")
    val = _mp_moment_exact(r, _q(c))
    return val if exact else float(val)


def scaled_h(u: int, c, exact: bool = False):
    _check_degree(u)
    cq = _q(c)
    val = _mp_moment_exact(u, cq) / cq**u
    return val if exact else float(val)


def shifted_a(m: int, c, sigma2, exact: bool = False):
    """``a_m = sum_u C(m,u) sigma2^(m-u) h_u``, the m-th moment of ``S S* + sigma2``."""
    _check_degree(m)
    cq, sq = _q(c), _q(sigma2)
    val = sum((comb(m, u) * sq ** (m - u) * scaled_h(u, cq, exact=True) for u in range(m + 1)),
              Fraction(0))
    return val if exact else float(val)


def mp_support(c) -> tuple[float, float, float]:
    """Edges of the continuous part and mass of the atom at zero."""
    if not c > 0:
        raise ValueError("ratio c must be positive")
    c = float(c)
    rc = sqrt(c)
    return (1.0 - rc) ** 2, (1.0 + rc) ** 2, max(0.0, 1.0 - 1.0 / c)


@dataclass(frozen=True)
class MomentTable:
    c: float
    sigma2: float
    max_degree: int
    M: tuple
    h: tuple
    a: tuple


def moment_table(c, sigma2, max_degree: int, exact: bool = False) -> MomentTable:
    _check_degree(max_degree)
    rng = range(max_degree + 1)
    return MomentTable(
        c=c,
        sigma2=sigma2,
        max_degree=max_degree,
        M=tuple(mp_moment(r, c, exact) for r in rng),
        h=tuple(scaled_h(u, c, exact) for u in rng),
        a=tuple(shifted_a(m, c, sigma2, exact) for m in rng),
    )
