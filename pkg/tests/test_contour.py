import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sirclt.contour import (ContourSpec, contour_integrate, default_contours,
                            double_contour_integrate, mp_stieltjes, mp_stieltjes_derivative)
from sirclt.errors import BranchFailure, NonConvergent
from sirclt.moments import mp_support

TWO_PI_I = 2j * np.pi


def test_defining_identity():
    z, c = 5 + 1j, 1.0
    m = mp_stieltjes(z, c)
    assert abs(z + 1 / m - c / (1 + m)) < 1e-12


def test_real_asymptote():
    assert abs(mp_stieltjes(1e6, 1.0) + 1e-6) < 1e-11


def test_fixed_point_oracle():
    z, c = 2j, 1.0
    m = -1 / z
    for _ in range(10000):
        new = 1 / (-z + c / (1 + m))
        if abs(new - m) < 1e-15:
            break
        m = new
    assert abs(mp_stieltjes(z, c) - m) < 1e-13


def test_derivative_finite_difference():
    z, c, h = 3 + 2j, 0.5, 1e-5
    fd = (mp_stieltjes(z + h, c) - mp_stieltjes(z - h, c)) / (2 * h)
    d = mp_stieltjes_derivative(z, c)
    assert abs(fd - d) < 1e-6 * abs(d)


def test_derivative_asymptote():
    z = 1e4
    assert abs(mp_stieltjes_derivative(z, 1.0) * z**2 - 1) < 1e-3


def test_derivative_implicit():
    # real point to the right of the support (0.17, 5.83) for c = 2
    z, c = 7.0, 2.0
    m = mp_stieltjes(z, c)
    # differentiate z m^2 + (z + 1 - c) m + 1 = 0
    implicit = -(m**2 + m) / (2 * z * m + z + 1 - c)
    assert abs(mp_stieltjes_derivative(z, c) - implicit) < 1e-10 * abs(implicit)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_upper_half_plane_and_conjugation(c):
    rng = np.random.default_rng(0)
    z = rng.uniform(-5, 10, 1000) + 1j * rng.uniform(1e-3, 5, 1000)
    m = mp_stieltjes(z, c)
    assert np.all(m.imag > 0)
    assert np.allclose(mp_stieltjes(z.conj(), c), m.conj(), rtol=1e-14, atol=0)


@given(st.floats(min_value=0.05, max_value=20), st.floats(min_value=0.0, max_value=1.0))
def test_cut_raises(c, t):
    a, b, _ = mp_support(c)
    with pytest.raises(BranchFailure):
        mp_stieltjes(a + t * (b - a), c)


def test_simple_integrals():
    unit = ContourSpec(0.0, 1.0)
    v, _ = contour_integrate(lambda z: 1 / z, unit)
    assert abs(v - TWO_PI_I) < 1e-12
    v, _ = contour_integrate(lambda z: z, ContourSpec(2 + 1j, 3.0))
    assert abs(v) < 1e-12
    v, _ = contour_integrate(lambda z: 1 / (z - 0.5), unit)
    assert abs(v - TWO_PI_I) < 1e-12


def test_double_integrals():
    inner, outer = ContourSpec(0.0, 1.0), ContourSpec(0.0, 2.0)
    v, _ = double_contour_integrate(lambda z1, z2: 1 / (z1 * z2), inner, outer)
    assert abs(v - TWO_PI_I**2) < 1e-10
    # z2 outside the inner circle: the z1 integral of 1/(z2 - z1) vanishes
    v, _ = double_contour_integrate(lambda z1, z2: 1 / (z2 - z1), inner, outer)
    assert abs(v) < 1e-10
    v2, _ = double_contour_integrate(lambda z1, z2: 1 / (z2 - z1), inner.scaled(1.2), outer)
    assert abs(v2 - v) < 1e-8


def test_derivative_on_cut_raises():
    with pytest.raises(BranchFailure):
        mp_stieltjes_derivative(5.0, 2.0)


def test_nonconvergence_reported():
    spec = ContourSpec(0.0, 1.0, nodes=16)
    with pytest.raises(NonConvergent) as exc:
        contour_integrate(lambda z: 1 / (z - 0.999), spec)
    assert exc.value.error > 0


@pytest.mark.parametrize("c", [0.1, 0.5, 1.0, 2.0, 4.0, 10.0])
def test_default_contours_enclose(c):
    a, b, _ = mp_support(c)
    inner, outer = default_contours(c)
    for spec in (inner, outer):
        assert spec.encloses(min(a, 0.0), b)
        assert abs(0 - spec.center) < spec.radius
    assert outer.radius > inner.radius


def test_contour_spec_validation():
    with pytest.raises(ValueError):
        ContourSpec(0.0, -1.0)
    with pytest.raises(ValueError):
        double_contour_integrate(lambda a, b: a, ContourSpec(0, 2.0), ContourSpec(0, 1.0))
