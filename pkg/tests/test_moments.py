from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sirclt.contour import mp_stieltjes
from sirclt.formulas import hankel_system
from sirclt.model import sample_ensemble
from sirclt.moments import (MAX_DEGREE, moment_table, mp_moment, mp_support, scaled_h,
                            shifted_a)

ratios = st.fractions(min_value=Fraction(1, 10), max_value=10, max_denominator=50)
noise = st.fractions(min_value=0, max_value=5, max_denominator=50)


def test_catalan():
    assert [mp_moment(r, 1, exact=True) for r in range(9)] == \
        [comb(2 * r, r) // (r + 1) for r in range(9)]
    assert (mp_moment(2, 1), mp_moment(3, 1), mp_moment(4, 1)) == (2, 5, 14)


@given(ratios)
def test_low_moments(c):
    assert mp_moment(0, c, exact=True) == 1
    assert mp_moment(1, c, exact=True) == 1
    assert mp_moment(2, c, exact=True) == 1 + c
    assert scaled_h(0, c, exact=True) == 1
    assert scaled_h(1, c, exact=True) == 1 / c


@given(ratios, noise)
def test_shifted_identities(c, s2):
    assert shifted_a(0, c, s2, exact=True) == 1
    assert shifted_a(1, c, s2, exact=True) == s2 + 1 / c
    assert shifted_a(2, c, s2, exact=True) == (1 + 1 / c) / c + s2**2 + 2 * s2 / c


def test_shifted_examples():
    assert shifted_a(2, 1, 1) == 5
    assert shifted_a(3, 1, 1) == 15
    assert scaled_h(2, 1) == 2


def test_support():
    assert mp_support(1) == (0.0, 4.0, 0.0)
    assert mp_support(4) == (1.0, 9.0, 0.75)
    assert mp_support(0.25) == (0.25, 2.25, 0.0)


def test_degree_limits():
    mp_moment(MAX_DEGREE, 2)
    with pytest.raises(ValueError):
        mp_moment(MAX_DEGREE + 1, 1)
    with pytest.raises(ValueError):
        mp_moment(-1, 1)
    with pytest.raises(ValueError):
        mp_moment(2, 0)


def test_table_positive():
    t = moment_table(0.5, 0.5, 10)
    assert all(x > 0 for x in t.M + t.h + t.a)
    assert t.a[0] == t.M[0] == t.h[0] == 1


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_moments_from_stieltjes_expansion(c):
    # companion transform: mbar(z) = -(1 - c)/z + c m(z), m(z) = -sum M_r z^-(r+1)
    R = 1.5 * (1 + np.sqrt(c)) ** 2
    n = 256
    z = R * np.exp(2j * np.pi * np.arange(n) / n)
    mbar = np.asarray(mp_stieltjes(z, c))
    m = (mbar + (1 - c) / z) / c
    for r in range(9):
        coef = -np.mean(m * z ** (r + 1))
        assert coef.real == pytest.approx(mp_moment(r, c), rel=1e-8)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("s2", [0.5, 1.0])
def test_hankel_positive_definite(c, s2):
    for m in range(1, 6):
        assert np.linalg.eigvalsh(hankel_system(m, c, s2).B).min() > 0


def test_trace_moments_simulation():
    N = 1024
    vals = {r: [] for r in (2, 3)}
    for t in range(20):
        E = sample_ensemble(N, N, seed=1, trial=t)
        A = E.S @ E.S.conj().T
        A2 = A @ A
        vals[2].append(np.trace(A2).real / N)
        vals[3].append(np.sum(A2 * A.T).real / N)
    for r, v in vals.items():
        v = np.asarray(v)
        se = v.std(ddof=1) / np.sqrt(v.size)
        # finite-N bias of N^-1 Tr A^r is O(1/N)
        assert abs(v.mean() - mp_moment(r, 1)) < 3 * se + r**2 / N


@settings(max_examples=30)
@given(st.integers(min_value=1, max_value=6), ratios, noise)
def test_shifted_matches_binomial_of_h(m, c, s2):
    expect = sum(comb(m, u) * s2 ** (m - u) * mp_moment(u, c, exact=True) / c**u
                 for u in range(m + 1))
    assert shifted_a(m, c, s2, exact=True) == expect
