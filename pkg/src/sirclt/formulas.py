"""Asymptotic predictions: deterministic MSW limits and CLT means/variances.

Everything here assumes equal unit powers (T = I).  Two families of
functions coexist for the matched-filter statistics:

* ``thm12_mean`` / ``cor11_params`` evaluate the reference closed forms
  verbatim;
* ``mf_sum_mean`` / ``mf_mi_params`` give the means implied by the
  second-order expansion of the matched-filter SIR, which is what the
  simulations actually follow when ``E|v|^4 != 2`` or ``c != 1``.

The two agree for complex Gaussian entries only where noted in the tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, pi

import numpy as np
import scipy.linalg

from .contour import (
    ContourSpec,
    contour_integrate,
    default_contours,
    double_contour_integrate,
    mp_stieltjes,
    mp_stieltjes_derivative,
)
from .errors import IllConditioned, NegativeVariance, NoConvergence
from .moments import mp_moment, scaled_h, shifted_a

__all__ = [
    "STATISTICS",
    "HankelSystem",
    "CltPrediction",
    "ZetaCovariance",
    "hankel_system",
    "mmse_limit",
    "zeta_covariance",
    "thm11_variance",
    "thm12_mean",
    "thm12_variance",
    "mf_sum_mean",
    "cor11_params",
    "mf_mi_params",
    "thm14_mean_correction_closed",
    "thm14_cov_correction_closed",
    "thm14_mean_base_numeric",
    "thm14_mean_correction_numeric",
    "thm14_cov_base_numeric",
    "thm14_cov_correction_numeric",
    "thm14_prediction",
    "thm13_cov_numeric",
    "thm13_cov_reference",
    "lss_vec_prediction",
]

STATISTICS = ("msw-sir", "mf-sum", "mf-mi", "lss-eig", "lss-vec")

_PIVOT_TOL = 1e-12
_ZERO_TOL = 1e-10


@dataclass(frozen=True)
class HankelSystem:
    m: int
    b: np.ndarray
    B: np.ndarray
    d: np.ndarray
    sir_limit: float


@dataclass(frozen=True)
class CltPrediction:
    statistic: str
    mean: float
    variance: float
    params: dict = field(default_factory=dict)
    provenance: str = ""

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise ValueError(f"unknown statistic {self.statistic!r}")
        if not self.variance >= 0:
            raise NegativeVariance(f"{self.statistic}: variance {self.variance!r} < 0")

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "mean": self.mean,
            "variance": self.variance,
            "params": dict(self.params),
            "provenance": self.provenance,
        }


@dataclass(frozen=True)
class ZetaCovariance:
    degree: int
    var_X: float
    cov: np.ndarray


def _checked_variance(v: float, scale: float = 1.0, what: str = "variance") -> float:
    """Reject negative variances; snap rounding noise around 0 to exactly 0."""
    tol = _ZERO_TOL * max(1.0, abs(scale))
    if v < -tol:
        raise NegativeVariance(f"{what} evaluates to {v!r}")
    return 0.0 if abs(v) <= tol else float(v)


# --------------------------------------------------------------------------
# deterministic limits

def hankel_system(m: int, c, sigma2) -> HankelSystem:
    """Moment system ``B d = b`` of the m-stage Wiener filter and ``b.d``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    a = [shifted_a(i, c, sigma2) for i in range(2 * m)]
    b = np.array(a[:m])
    B = np.array([[a[i + j + 1] for j in range(m)] for i in range(m)])
    try:
        L = np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise IllConditioned(f"Hankel matrix for m={m} is not numerically positive definite") from exc
    piv = np.diag(L) ** 2
    if piv.min() < _PIVOT_TOL * np.max(np.diag(B)):
        raise IllConditioned(f"relative pivot {piv.min() / np.max(np.diag(B)):.3g} for m={m}")
    d = scipy.linalg.cho_solve((L, True), b)
    return HankelSystem(m=m, b=b, B=B, d=d, sir_limit=float(b @ d))


def mmse_limit(c, sigma2, tol: float = 1e-14) -> float:
    """Positive root of ``beta = 1/(sigma2 + 1/(c (1 + beta)))`` by bisection."""
    c, sigma2 = float(c), float(sigma2)
    if not c > 0 or sigma2 < 0:
        raise ValueError("need c > 0 and sigma2 >= 0")
    if sigma2 == 0.0:
        if c >= 1.0:
            raise NoConvergence("noiseless MMSE SIR is unbounded for c >= 1")
        hi = c / (1.0 - c) + 1.0
    else:
        hi = 1.0 / sigma2

    def g(beta):
        return beta - 1.0 / (sigma2 + 1.0 / (c * (1.0 + beta)))

    lo = 0.0
    if not (g(lo) < 0.0 < g(hi) or g(hi) == 0.0):
        raise NoConvergence("bisection bracket does not straddle the root")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    else:
        raise NoConvergence("bisection did not reach tolerance")
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# MSW fluctuations

def zeta_covariance(m: int, c, sigma2, fourth_moment, real: bool = False) -> ZetaCovariance:
    """Covariance of the limiting centred quadratic forms ``zeta_0..zeta_{2m-1}``.

    ``xi_u`` (powers of the unscaled ``S S*``) has

        Cov(xi_u, xi_v) = h_u h_v (E|v|^4 - 1) + k c^-(u+v) (M_{u+v} - M_u M_v)

    with bridge weight ``k = 1`` for complex entries (``E v^2 = 0``) and
    ``k = 2`` for real ones; ``zeta_i`` mixes the ``xi_u`` binomially with
    powers of ``sigma2``.
    """
    if fourth_moment < 1:
        raise ValueError("fourth moment must be >= 1")
    n = 2 * m
    kappa = 2.0 if real else 1.0
    v4 = float(fourth_moment) - 1.0
    c = float(c)
    h = [scaled_h(u, c) for u in range(n)]
    M = [mp_moment(u, c) for u in range(2 * n)]
    xi = np.empty((n, n))
    for u in range(n):
        for v in range(n):
            xi[u, v] = h[u] * h[v] * v4 + kappa * c ** -(u + v) * (M[u + v] - M[u] * M[v])
    T = np.zeros((n, n))
    for i in range(n):
        for u in range(i + 1):
            T[i, u] = comb(i, u) * sigma2 ** (i - u)
    cov = T @ xi @ T.T
    cov = 0.5 * (cov + cov.T)
    return ZetaCovariance(degree=n - 1, var_X=v4, cov=cov)


def _thm11_weights(hs: HankelSystem) -> np.ndarray:
    m = hs.m
    w = np.zeros(2 * m)
    for i in range(m):
        w[i] += 2.0 * hs.d[i]
        for j in range(m):
            w[i + j + 1] -= hs.d[i] * hs.d[j]
    return w


def thm11_variance(m: int, c, sigma2, fourth_moment, real: bool = False) -> CltPrediction:
    """Limit law of ``sqrt(N) (beta_1m - b.B^-1 b)``: centred, variance ``w' C w``."""
    hs = hankel_system(m, c, sigma2)
    w = _thm11_weights(hs)
    zc = zeta_covariance(m, c, sigma2, fourth_moment, real=real)
    var = float(w @ zc.cov @ w)
    scale = float(np.abs(w) @ np.abs(zc.cov) @ np.abs(w))
    return CltPrediction(
        statistic="msw-sir",
        mean=0.0,
        variance=_checked_variance(var, scale),
        params={"m": m, "c": float(c), "sigma2": float(sigma2),
                "fourth_moment": float(fourth_moment), "real": real},
        provenance="quadratic-form reduction; zeta covariance with bridge weight "
                   + ("2 (real)" if real else "1 (complex)"),
    )


# --------------------------------------------------------------------------
# matched filter sums

def _a1(c, sigma2):
    return sigma2 + 1.0 / c


def thm12_mean(c, sigma2, fourth_moment) -> float:
    """Closed-form mean ``(2E|v|^4-3)/(c a1^2) + 1/(c^2 a1^3)``, ``a1 = sigma2 + 1/c``.

    Agrees with simulation only for ``E|v|^4 = 2``; see :func:`mf_sum_mean`.
    """
    a1 = _a1(c, sigma2)
    return (2.0 * fourth_moment - 3.0) / (c * a1**2) + 1.0 / (c**2 * a1**3)


def mf_sum_mean(c, sigma2, fourth_moment) -> float:
    """Mean of the centred MF SIR sum implied by its second-order expansion.

    The fourth-moment contributions of ``sum ||s_k||^2`` and
    ``E Tr C^2`` cancel, leaving ``1/(c a1^2) + 1/(c^2 a1^3)`` for every
    entry law.  ``fourth_moment`` is accepted for interface symmetry.
    """
    del fourth_moment
    a1 = _a1(c, sigma2)
    return 1.0 / (c * a1**2) + 1.0 / (c**2 * a1**3)


def thm12_variance(c, sigma2, fourth_moment) -> float:
    a1 = _a1(c, sigma2)
    v4 = fourth_moment - 1.0
    t = 2.0 + 2.0 / c + sigma2
    first = t**2 * v4 / (c * a1**4)
    second = -2.0 * t * (2.0 * c + 2.0) * v4 / (c**2 * a1**4)
    third = (4 * c**3 + 10 * c**2 + 4 * c + (4 * c**3 + 8 * c**2 + 4 * c) * (fourth_moment - 2.0)) \
        / (c**4 * a1**4)
    return _checked_variance(first + second + third, abs(first) + abs(second) + abs(third),
                             "tau^2")


def _mf_params(c, sigma2, fourth_moment):
    return {"c": float(c), "sigma2": float(sigma2), "fourth_moment": float(fourth_moment)}


def cor11_params(c, sigma2, fourth_moment) -> CltPrediction:
    """Reference closed form of ``(mu_1, tau_1^2)`` for the MF sum mutual information.

    The variance is sound; the mean is not (see :func:`mf_mi_params`).
    """
    a1 = _a1(c, sigma2)
    g = 1.0 + 1.0 / a1
    mu = thm12_mean(c, sigma2, fourth_moment)
    num = 2.0 * (fourth_moment - 2.0) * a1**2 + 2.0 / c * (1.0 + 1.0 / c) + sigma2**2 + 2.0 * sigma2 / c
    mu1 = mu / g - num / (c * a1**4 * g**2)
    return CltPrediction("mf-mi", mu1, thm12_variance(c, sigma2, fourth_moment) / g**2,
                         _mf_params(c, sigma2, fourth_moment), "reference closed form")


def mf_mi_params(c, sigma2, fourth_moment) -> CltPrediction:
    """``(mu_1, tau_1^2)`` from the second-order Taylor expansion of ``log(1+beta)``.

    ``mu_1 = mu/g - K E(beta - 1/a1)^2 / (2 g^2)`` with ``g = 1 + 1/a1`` and
    ``K E(beta - 1/a1)^2 -> ((E|v|^4 - 1) a1^2 + 1/c) / (c a1^4)``.
    """
    a1 = _a1(c, sigma2)
    g = 1.0 + 1.0 / a1
    mu = mf_sum_mean(c, sigma2, fourth_moment)
    second = ((fourth_moment - 1.0) * a1**2 + 1.0 / c) / (c * a1**4)
    return CltPrediction("mf-mi", mu / g - second / (2.0 * g**2),
                         thm12_variance(c, sigma2, fourth_moment) / g**2,
                         _mf_params(c, sigma2, fourth_moment), "second-order expansion")


def mf_sum_prediction(c, sigma2, fourth_moment) -> CltPrediction:
    return CltPrediction("mf-sum", mf_sum_mean(c, sigma2, fourth_moment),
                         thm12_variance(c, sigma2, fourth_moment),
                         _mf_params(c, sigma2, fourth_moment), "second-order expansion")


# --------------------------------------------------------------------------
# eigenvalue linear spectral statistics (T = I)

def _binsum(r: int, t: Fraction, shift: int) -> Fraction:
    return sum((comb(r, j) * t**j * comb(2 * r + shift - j, r - 1) for j in range(r + 1)),
               Fraction(0))


def thm14_mean_correction_closed(r: int, c) -> float:
    """Fourth-moment mean kernel for ``g(x) = x^r`` (combinatorial form)."""
    if r < 1:
        raise ValueError("r must be >= 1")
    cq = Fraction(c)
    t = (1 - cq) / cq
    return float(cq ** (1 + r) * (_binsum(r, t, 0) - _binsum(r, t, 1)))


def thm14_cov_correction_closed(r1: int, r2: int, c) -> float:
    """Fourth-moment covariance kernel for ``x^r1, x^r2`` (combinatorial form)."""
    if r1 < 1 or r2 < 1:
        raise ValueError("degrees must be >= 1")
    cq = Fraction(c)
    t = (1 - cq) / cq
    return float(cq ** (r1 + r2 + 1) * _binsum(r1, t, 0) * _binsum(r2, t, 0))


def _contours(c, contours):
    return default_contours(c) if contours is None else contours


def _mean_kernel(r, c):
    def f(z):
        m = mp_stieltjes(z, c)
        return z**r * c * m**3 / (1.0 + m) ** 3 / (1.0 - c * m**2 / (1.0 + m) ** 2)
    return f


def thm14_mean_correction_numeric(r: int, c, contour: ContourSpec | None = None) -> float:
    """Contour evaluation of the kernel in :func:`thm14_mean_correction_closed`."""
    spec = _contours(c, None)[0] if contour is None else contour
    val, _ = contour_integrate(_mean_kernel(r, float(c)), spec)
    return (val / (2j * pi)).real


def thm14_mean_base_numeric(r: int, c, contour: ContourSpec | None = None) -> float:
    """Gaussian (real-entry) mean term ``-(1/2 pi i) \\oint z^r c m^3/(1+m)^3 / (1 - c m^2/(1+m)^2)``."""
    spec = _contours(c, None)[0] if contour is None else contour
    c = float(c)

    def f(z):
        m = mp_stieltjes(z, c)
        w = m / (1.0 + m)
        return z**r * c * w**3 / (1.0 - c * w**2)

    val, _ = contour_integrate(f, spec)
    return (-val / (2j * pi)).real


def thm14_cov_base_numeric(r1: int, r2: int, c, real: bool = False, contours=None) -> float:
    """Gaussian covariance term ``-(k/4 pi^2) \\oint\\oint z1^r1 z2^r2 m1' m2' / (m1 - m2)^2``.

    ``k = 1`` for complex entries and ``k = 2`` for real entries.
    """
    inner, outer = _contours(c, contours)
    c = float(c)

    def f(z1, z2):
        m1, m2 = mp_stieltjes(z1, c), mp_stieltjes(z2, c)
        d1, d2 = mp_stieltjes_derivative(z1, c), mp_stieltjes_derivative(z2, c)
        return z1**r1 * z2**r2 * d1 * d2 / (m1 - m2) ** 2

    val, _ = double_contour_integrate(f, inner, outer)
    coef = 2.0 if real else 1.0
    return (-coef * val / (4.0 * pi**2)).real


def thm14_cov_correction_numeric(r1: int, r2: int, c, contours=None) -> float:
    """Contour evaluation of :func:`thm14_cov_correction_closed`.

    With T = I the kernel ``m1 m2 h1(z1, z2)`` is ``m1/(1+m1) * m2/(1+m2)`` and
    its mixed derivative is ``m1'/(1+m1)^2 * m2'/(1+m2)^2``.
    """
    inner, outer = _contours(c, contours)
    c = float(c)

    def f(z1, z2):
        m1, m2 = mp_stieltjes(z1, c), mp_stieltjes(z2, c)
        d1, d2 = mp_stieltjes_derivative(z1, c), mp_stieltjes_derivative(z2, c)
        return z1**r1 * z2**r2 * d1 / (1.0 + m1) ** 2 * d2 / (1.0 + m2) ** 2

    val, _ = double_contour_integrate(f, inner, outer)
    return (-c * val / (4.0 * pi**2)).real


def thm14_prediction(g_degrees, c, fourth_moment, real: bool = False) -> CltPrediction:
    """Mean and variance of ``sum_r (sum_i lambda_i^r - N M_r(c))`` over ``g_degrees``."""
    degrees = [int(r) for r in g_degrees]
    if not degrees or min(degrees) < 1:
        raise ValueError("need at least one degree >= 1")
    kappa = fourth_moment - (3.0 if real else 2.0)
    mean = 0.0
    for r in degrees:
        if real:
            mean += thm14_mean_base_numeric(r, c)
        mean -= kappa * thm14_mean_correction_closed(r, c)
    var = 0.0
    scale = 0.0
    for r1 in degrees:
        for r2 in degrees:
            base = thm14_cov_base_numeric(r1, r2, c, real=real)
            corr = kappa * thm14_cov_correction_closed(r1, r2, c)
            var += base + corr
            scale += abs(base) + abs(corr)
    return CltPrediction(
        "lss-eig", float(mean), _checked_variance(var, scale),
        {"degrees": degrees, "c": float(c), "fourth_moment": float(fourth_moment), "real": real},
        "contour base terms + closed-form fourth-moment corrections",
    )


# --------------------------------------------------------------------------
# eigenvector-weighted statistics

def thm13_cov_reference(r1: int, r2: int, c, real: bool = False, contours=None) -> float:
    """Reference double-contour covariance kernel (halved for complex entries).

    Its normalisation corresponds to fluctuations scaled by ``sqrt(K)``.
    """
    inner, outer = _contours(c, contours)
    c = float(c)

    def f(z1, z2):
        m1, m2 = mp_stieltjes(z1, c), mp_stieltjes(z2, c)
        num = (z2 * m2 - z1 * m1) ** 2
        return z1**r1 * z2**r2 * num / (c**2 * z1 * z2 * (z2 - z1) * (m2 - m1))

    val, _ = double_contour_integrate(f, inner, outer)
    out = (-val / (2.0 * pi**2)).real
    return out if real else 0.5 * out


def thm13_cov_numeric(r1: int, r2: int, c, real: bool = False, contours=None) -> float:
    """Covariance of ``sqrt(N)(x* A^r x - M_r)`` for degrees ``r1, r2``.

    Equals ``c`` times :func:`thm13_cov_reference`; for complex entries this
    is ``M_{r1+r2} - M_r1 M_r2``.
    """
    return float(c) * thm13_cov_reference(r1, r2, c, real=real, contours=contours)


def lss_vec_prediction(g_degrees, c, real: bool = False) -> CltPrediction:
    degrees = [int(r) for r in g_degrees]
    if not degrees or min(degrees) < 1:
        raise ValueError("need at least one degree >= 1")
    var = sum(thm13_cov_numeric(r1, r2, c, real=real) for r1 in degrees for r2 in degrees)
    return CltPrediction("lss-vec", 0.0, _checked_variance(var),
                         {"degrees": degrees, "c": float(c), "real": real},
                         "double-contour covariance, sqrt(N) scaling")
