import itertools
import math

import numpy as np
import pytest

from sirclt.contour import default_contours
from sirclt.errors import NegativeVariance, NoConvergence
from sirclt.formulas import (CltPrediction, cor11_params, hankel_system, lss_vec_prediction,
                             mf_mi_params, mf_sum_mean, mf_sum_prediction, mmse_limit,
                             thm11_variance, thm12_mean, thm12_variance, thm13_cov_numeric,
                             thm13_cov_reference, thm14_cov_base_numeric,
                             thm14_cov_correction_closed, thm14_cov_correction_numeric,
                             thm14_mean_base_numeric, thm14_mean_correction_closed,
                             thm14_mean_correction_numeric, thm14_prediction, zeta_covariance)
from sirclt.moments import mp_moment

GOLDEN = (math.sqrt(5) - 1) / 2
RATIOS = (0.5, 1.0, 2.0)


class TestHankel:
    def test_scalar(self):
        assert hankel_system(1, 1, 1).sir_limit == pytest.approx(0.5, abs=1e-15)

    def test_two_stage(self):
        hs = hankel_system(2, 1, 1)
        assert np.allclose(hs.b, [1, 2])
        assert np.allclose(hs.B, [[2, 5], [5, 15]])
        assert np.allclose(hs.d, [1, -0.2])
        assert hs.sir_limit == pytest.approx(0.6, abs=1e-12)

    def test_three_stage(self):
        assert hankel_system(3, 1, 1).sir_limit == pytest.approx(8 / 13, abs=1e-12)

    @pytest.mark.parametrize("c,s2", [(1, 1), (2, 0.5), (0.5, 1)])
    def test_monotone_below_mmse(self, c, s2):
        lim = [hankel_system(m, c, s2).sir_limit for m in range(1, 7)]
        assert all(b > a for a, b in zip(lim, lim[1:]))
        assert lim[-1] < mmse_limit(c, s2)

    def test_gap_at_six(self):
        assert mmse_limit(1, 1) - hankel_system(6, 1, 1).sir_limit < 1e-3


class TestMmse:
    def test_golden(self):
        assert mmse_limit(1, 1) == pytest.approx(GOLDEN, abs=1e-12)

    def test_large_ratio(self):
        assert abs(mmse_limit(1e6, 1) - 1) < 1e-5

    @pytest.mark.parametrize("c,s2", [(2, 0.5), (0.3, 2.0), (1, 0.1)])
    def test_fixed_point_residual(self, c, s2):
        b = mmse_limit(c, s2)
        assert abs(b - 1 / (s2 + (1 / c) / (1 + b))) < 1e-12

    def test_noiseless(self):
        assert mmse_limit(0.5, 0) == pytest.approx(1.0, abs=1e-12)
        with pytest.raises((NoConvergence, ValueError)):
            mmse_limit(2, 0)


class TestZeta:
    def test_norm_variance(self):
        assert zeta_covariance(1, 1, 1, 2).cov[0, 0] == pytest.approx(1.0)
        assert zeta_covariance(1, 1, 1, 1).cov[0, 0] == 0.0

    def test_xi_entries(self):
        # with sigma2 = 0 the zeta and xi forms coincide
        assert zeta_covariance(1, 1, 0, 2).cov[1, 1] == pytest.approx(2.0)
        assert zeta_covariance(1, 1, 0, 2, real=True).cov[1, 1] == pytest.approx(3.0)

    @pytest.mark.parametrize("c", RATIOS)
    def test_psd(self, c):
        for f4 in (1.0, 2.0, 3.0):
            assert np.linalg.eigvalsh(zeta_covariance(2, c, 1, f4).cov).min() > -1e-10


class TestMswVariance:
    def test_complex_gaussian(self):
        p = thm11_variance(1, 1, 1, 2)
        assert p.mean == 0
        assert p.variance == pytest.approx(0.3125, abs=1e-12)

    def test_qpsk(self):
        assert thm11_variance(1, 1, 1, 1).variance == pytest.approx(0.0625, abs=1e-12)

    def test_real_bridge_weight(self):
        assert thm11_variance(1, 1, 1, 2, real=True).variance == pytest.approx(0.375, abs=1e-12)

    @pytest.mark.parametrize("c,s2,f4", [(1, 1, 2), (2, 0.5, 1), (0.5, 2, 2)])
    def test_single_stage_closed_form(self, c, s2, f4):
        a1 = s2 + 1 / c
        assert thm11_variance(1, c, s2, f4).variance == pytest.approx(
            (f4 - 1) / a1**2 + 1 / (c * a1**4), rel=1e-12)

    def test_two_stage(self):
        assert thm11_variance(2, 1, 1, 2).variance == pytest.approx(0.4256, abs=1e-10)


class TestMatchedFilterSums:
    def test_reference_mean(self):
        assert thm12_mean(1, 1, 2) == pytest.approx(0.375)
        assert thm12_mean(1, 1, 1) == pytest.approx(-0.125)

    def test_engine_mean(self):
        assert mf_sum_mean(1, 1, 2) == pytest.approx(0.375)
        assert mf_sum_mean(1, 1, 1) == pytest.approx(0.375)
        assert mf_sum_mean(2, 0.5, 2) == pytest.approx(1 / 2 + 1 / 4)

    def test_mean_vanishes_with_noise(self):
        assert abs(mf_sum_mean(1, 1e6, 2)) < 1e-10
        assert abs(thm12_mean(1, 1e6, 2)) < 1e-10

    def test_variance(self):
        assert thm12_variance(1, 1, 2) == pytest.approx(0.1875)
        assert thm12_variance(1, 1, 1) == pytest.approx(0.125)

    def test_variance_nonnegative_grid(self):
        for c, s2, f4 in itertools.product(np.linspace(0.25, 4, 9), np.linspace(0.1, 4, 9), (1, 2)):
            assert thm12_variance(c, s2, f4) >= 0

    def test_reference_mutual_information(self):
        p = cor11_params(1, 1, 2)
        assert p.mean == pytest.approx(1 / 18)
        assert p.variance == pytest.approx(1 / 12)

    def test_engine_mutual_information(self):
        p = mf_mi_params(1, 1, 2)
        # mu/g - ((E|v|^4 - 1) a1^2 + 1/c)/(2 c a1^4 g^2) = 1/4 - 5/72
        assert p.mean == pytest.approx(0.25 - 5 / 72)
        assert p.variance == pytest.approx(1 / 12)
        assert mf_mi_params(1, 1, 1).mean == pytest.approx(0.25 - 1 / 72)

    def test_mi_variance_smaller(self):
        for c, s2 in itertools.product((0.5, 1, 2), (0.5, 1, 3)):
            assert mf_mi_params(c, s2, 2).variance < mf_sum_prediction(c, s2, 2).variance

    def test_continuity(self):
        h = 1e-6
        for c, s2, f4 in itertools.product((0.5, 1.0, 2.0), (0.5, 1.0), (1.0, 2.0)):
            for f in (mf_sum_mean, thm12_variance, thm12_mean):
                base = f(c, s2, f4)
                assert abs(f(c + h, s2, f4) - base) < 1e-4
                assert abs(f(c, s2 + h, f4) - base) < 1e-4


class TestEigenvalueStatistics:
    def test_mean_correction_closed(self):
        for c in RATIOS:
            assert thm14_mean_correction_closed(1, c) == 0.0
            assert thm14_mean_correction_closed(2, c) == pytest.approx(-c)

    def test_mean_correction_numeric(self):
        assert abs(thm14_mean_correction_numeric(1, 1.0)) < 1e-10
        assert thm14_mean_correction_numeric(2, 1.0) == pytest.approx(-1, abs=1e-8)
        assert thm14_mean_correction_numeric(3, 0.5) == pytest.approx(
            thm14_mean_correction_closed(3, 0.5), abs=1e-8)

    @pytest.mark.parametrize("c", RATIOS)
    def test_closed_vs_contour(self, c):
        for r in range(1, 6):
            assert thm14_mean_correction_numeric(r, c) == pytest.approx(
                thm14_mean_correction_closed(r, c), rel=1e-8, abs=1e-8)
        for r1, r2 in itertools.combinations_with_replacement(range(1, 6), 2):
            assert thm14_cov_correction_numeric(r1, r2, c) == pytest.approx(
                thm14_cov_correction_closed(r1, r2, c), rel=1e-8, abs=1e-8)

    def test_cov_correction_values(self):
        for c in RATIOS:
            assert thm14_cov_correction_closed(1, 1, c) == pytest.approx(c)
        assert thm14_cov_correction_closed(1, 2, 1) == pytest.approx(4)
        for r1, r2 in itertools.combinations(range(1, 6), 2):
            assert thm14_cov_correction_closed(r1, r2, 0.5) == thm14_cov_correction_closed(r2, r1, 0.5)

    @pytest.mark.parametrize("c", RATIOS)
    def test_base_terms(self, c):
        assert abs(thm14_mean_base_numeric(1, c)) < 1e-8
        assert thm14_cov_base_numeric(1, 1, c) == pytest.approx(c, rel=1e-8)
        assert thm14_cov_base_numeric(2, 3, c) == pytest.approx(thm14_cov_base_numeric(3, 2, c), rel=1e-8)
        assert thm14_cov_base_numeric(2, 2, c, real=True) == pytest.approx(
            2 * thm14_cov_base_numeric(2, 2, c), rel=1e-12)

    def test_complex_trace_square_variance(self):
        # Var Tr A^2 for complex Gaussian entries, c_N = c: 4c^3 + 10c^2 + 4c
        for c in RATIOS:
            assert thm14_cov_base_numeric(2, 2, c) == pytest.approx(4 * c**3 + 10 * c**2 + 4 * c, rel=1e-8)

    def test_radius_invariance(self):
        c = 2.0
        inner, outer = default_contours(c)
        a = thm14_cov_base_numeric(2, 3, c)
        b = thm14_cov_base_numeric(2, 3, c, contours=(inner.scaled(1.15), outer.scaled(1.15)))
        assert abs(a - b) < 1e-8 * max(1, abs(a))

    def test_predictions(self):
        for c in RATIOS:
            p = thm14_prediction([1], c, 2.0)
            assert p.mean == pytest.approx(0, abs=1e-12) and p.variance == pytest.approx(c)
            q = thm14_prediction([1], c, 1.0)
            assert q.variance == 0.0
        p = thm14_prediction([1, 2], 1.0, 2.0)
        assert p.mean == pytest.approx(0, abs=1e-10)
        expect = sum(thm14_cov_base_numeric(a, b, 1.0) for a in (1, 2) for b in (1, 2))
        assert p.variance == pytest.approx(expect)

    def test_real_prediction_r1(self):
        # Var Tr A = c (E v^4 - 1) exactly for real entries too
        p = thm14_prediction([1], 1.0, 3.0, real=True)
        assert p.mean == pytest.approx(0, abs=1e-8)
        assert p.variance == pytest.approx(2.0)


class TestEigenvectorStatistics:
    @pytest.mark.parametrize("c", RATIOS)
    def test_direct_moment(self, c):
        assert thm13_cov_numeric(1, 1, c) == pytest.approx(c, abs=1e-8)
        for r1, r2 in itertools.combinations_with_replacement(range(1, 4), 2):
            expect = mp_moment(r1 + r2, c) - mp_moment(r1, c) * mp_moment(r2, c)
            assert thm13_cov_numeric(r1, r2, c) == pytest.approx(expect, rel=1e-8)

    def test_real_doubles(self):
        assert thm13_cov_numeric(2, 2, 1.0, real=True) == pytest.approx(
            2 * thm13_cov_numeric(2, 2, 1.0), rel=1e-12)

    def test_reference_scale(self):
        assert thm13_cov_numeric(2, 1, 2.0) == pytest.approx(2.0 * thm13_cov_reference(2, 1, 2.0))

    def test_radius_invariance(self):
        inner, outer = default_contours(1.0)
        a = thm13_cov_numeric(2, 2, 1.0)
        b = thm13_cov_numeric(2, 2, 1.0, contours=(inner.scaled(1.15), outer.scaled(1.15)))
        assert abs(a - b) < 1e-8

    def test_prediction(self):
        p = lss_vec_prediction([1, 2], 1.0)
        assert p.mean == 0.0
        assert p.variance == pytest.approx(sum(
            mp_moment(a + b, 1.0) - mp_moment(a, 1.0) * mp_moment(b, 1.0)
            for a in (1, 2) for b in (1, 2)))


def test_negative_variance_rejected():
    with pytest.raises(NegativeVariance):
        CltPrediction("mf-sum", 0.0, -1.0)


def test_prediction_as_dict():
    d = mf_sum_prediction(1, 1, 2).as_dict()
    assert d["statistic"] == "mf-sum" and d["variance"] == pytest.approx(0.1875)
