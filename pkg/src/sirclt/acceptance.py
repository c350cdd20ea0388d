"""Acceptance suite shared by ``sirclt verify`` and the test suite.

Each criterion declares the Monte Carlo experiments it needs and then
turns their summaries into one or more named checks.  Experiments from
all selected criteria that share an ensemble sequence are evaluated in a
single pass (:func:`sirclt.harness.run_batch`), which gives exactly the
values a standalone run would.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

import numpy as np

from . import moments
from .contour import default_contours
from .errors import XNotSpread
from .formulas import (hankel_system, mmse_limit, thm11_variance, thm13_cov_numeric,
                       thm14_cov_correction_closed, thm14_cov_correction_numeric,
                       thm14_mean_correction_closed, thm14_mean_correction_numeric,
                       thm14_prediction)
from .harness import ExperimentConfig, run_batch
from .model import sample_ensemble
from .records import dumps_records
from .spectral import lss_eigenvector

__all__ = ["Check", "Criterion", "CRITERIA", "run_acceptance", "format_check"]

SEED = 20240
_N400 = dict(N=400, K=400, trials=5000, seed=SEED)


@dataclass
class Check:
    criterion: str
    label: str
    passed: bool
    detail: str = ""


@dataclass
class Criterion:
    key: str
    number: int
    title: str
    configs: Callable[[], list] = field(default=lambda: [])
    evaluate: Callable = None


def _chk(crit, label, ok, detail=""):
    return Check(crit, label, bool(ok), detail)


# --------------------------------------------------------------------------
# 1. moment engine

def _c1_eval(res, fault=None):
    mp = moments.mp_moment
    sa = moments.shifted_a
    if fault == "moments":
        def mp(r, c, exact=False):
            return moments.mp_moment(r, c, exact) + Fraction(1, 1000)

        def sa(m, c, s2, exact=False):
            return moments.shifted_a(m, c, s2, exact) + Fraction(1, 1000)

    ok1 = True
    bad = []
    for c in (Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(4)):
        for s2 in (Fraction(1, 2), Fraction(1), Fraction(2)):
            a1 = sa(1, c, s2, exact=True)
            a2 = sa(2, c, s2, exact=True)
            if a1 != s2 + 1 / c or a2 != (1 + 1 / c) / c + s2**2 + 2 * s2 / c:
                ok1 = False
                bad.append((str(c), str(s2)))
    catalan = [math.comb(2 * r, r) // (r + 1) for r in range(9)]
    got = [mp(r, 1, exact=True) for r in range(9)]
    return [
        _chk("moments", "a1, a2 exact on 15 (c, sigma2) pairs", ok1,
             "all exact" if ok1 else f"mismatch at {bad[:3]}"),
        _chk("moments", "M_r(1) = Catalan(r), r <= 8", got == catalan,
             f"M = {[str(g) for g in got]}"),
    ]


# --------------------------------------------------------------------------
# 2. deterministic MSW chain

def _c2_eval(res, fault=None):
    lim = [hankel_system(m, 1, 1).sir_limit for m in range(1, 7)]
    target = [0.5, 0.6, 8 / 13]
    err = max(abs(a - b) for a, b in zip(lim, target))
    mm = mmse_limit(1, 1)
    golden = (math.sqrt(5) - 1) / 2
    inc = all(b > a for a, b in zip(lim, lim[1:])) and lim[-1] < mm
    return [
        _chk("msw-chain", "sir_limit(1..3) = 1/2, 3/5, 8/13", err < 1e-12, f"max err {err:.2e}"),
        _chk("msw-chain", "strictly increasing, mmse gap < 1e-3 at m=6",
             inc and abs(mm - golden) < 1e-12 and mm - lim[-1] < 1e-3,
             f"mmse={mm:.12f} gap={mm - lim[-1]:.2e}"),
    ]


# --------------------------------------------------------------------------
# 3. finite-N MSW convergence

def _c3_cfgs():
    return [ExperimentConfig("msw-beta", 512, 512, 2000, sigma2=1.0, m_stages=m, seed=SEED)
            for m in (1, 2, 3)]


def _c3_eval(res, fault=None):
    out = []
    for cfg in _c3_cfgs():
        s = res[cfg].summary
        gap = abs(s.mean - s.theory_mean)
        tol = 3 * s.se_mean + 0.01
        out.append(_chk("msw-finite", f"m={cfg.m_stages} mean of beta vs sir_limit(c_N)", gap < tol,
                        f"mean={s.mean:.6f} limit={s.theory_mean:.6f} |diff|={gap:.2e} tol={tol:.2e}"))
    return out


# --------------------------------------------------------------------------
# 4. MSW fluctuation

def _c4_cfgs():
    return [ExperimentConfig("msw-sir", m_stages=1, dist="complex-gaussian", **_N400),
            ExperimentConfig("msw-sir", m_stages=1, dist="qpsk", **_N400),
            ExperimentConfig("msw-sir", m_stages=2, dist="complex-gaussian", **_N400)]


def _var_check(crit, label, s, target, tol, engine=None):
    ratio = s.variance / target
    detail = f"var={s.variance:.5f} target={target:.5f} ratio={ratio:.4f} (±{tol:.0%})"
    if engine is not None:
        detail += f"; engine prediction {engine:.5f}, ratio {s.variance / engine:.4f}"
    return _chk(crit, label, abs(ratio - 1) <= tol, detail)


def _ks_check(crit, label, s, const=1.95):
    lim = const / math.sqrt(s.n)
    return _chk(crit, label, s.ks_distance < lim, f"D={s.ks_distance:.4f} < {lim:.4f}")


def _c4_eval(res, fault=None):
    cg, qp, m2 = (res[c].summary for c in _c4_cfgs())
    return [
        _var_check("msw-fluct", "complex m=1 variance vs 0.375", cg, 0.375, 0.10, cg.theory_var),
        _var_check("msw-fluct", "qpsk m=1 variance vs 0.125", qp, 0.125, 0.10, qp.theory_var),
        _ks_check("msw-fluct", "complex m=1 KS", cg),
        _ks_check("msw-fluct", "qpsk m=1 KS", qp),
        _var_check("msw-fluct", "complex m=2 variance vs thm11_variance(2,1,1,2)", m2,
                   thm11_variance(2, 1, 1, 2).variance, 0.10),
        _ks_check("msw-fluct", "complex m=2 KS", m2),
    ]


# --------------------------------------------------------------------------
# 5, 6. matched-filter sums

def _mean_var_checks(crit, label, s, mu, tau2):
    z = (s.mean - mu) / s.se_mean
    ratio = s.variance / tau2
    detail = f"mean={s.mean:.5f} se={s.se_mean:.5f} z={z:.2f}"
    if abs(s.theory_mean - mu) > 1e-12:
        detail += f"; engine prediction {s.theory_mean:.5f}, z={s.z_mean:.2f}"
    return [
        _chk(crit, f"{label} |z_mean| < 4 vs {mu:.6g}", abs(z) < 4, detail),
        _chk(crit, f"{label} var_ratio in [0.85, 1.15] vs {tau2:.6g}", 0.85 <= ratio <= 1.15,
             f"var={s.variance:.5f} ratio={ratio:.4f}"),
    ]


def _c5_cfgs():
    return [ExperimentConfig("mf-sum", dist="complex-gaussian", **_N400),
            ExperimentConfig("mf-sum", dist="qpsk", **_N400)]


def _c5_eval(res, fault=None):
    cg, qp = (res[c].summary for c in _c5_cfgs())
    return (_mean_var_checks("mf-sum", "complex", cg, 0.375, 0.1875)
            + _mean_var_checks("mf-sum", "qpsk", qp, -0.125, 0.125))


def _c6_cfgs():
    return [ExperimentConfig("mf-mi", dist="complex-gaussian", **_N400)]


def _c6_eval(res, fault=None):
    s = res[_c6_cfgs()[0]].summary
    return _mean_var_checks("mf-mi", "complex", s, 1 / 18, 1 / 12)


# --------------------------------------------------------------------------
# 7. exact eigenvalue-statistic oracles

def _c7_cfgs():
    base = dict(N=400, K=400, seed=SEED)
    return [ExperimentConfig("lss-eig", dist="complex-gaussian", trials=5000, **base),
            ExperimentConfig("lss-eig", dist="qpsk", trials=5000, **base),
            ExperimentConfig("lss-eig", dist="qpsk", trials=5000, degrees=(2,), **base),
            ExperimentConfig("lss-eig", dist="real-gaussian", trials=2000, **base),
            ExperimentConfig("lss-eig", dist="rademacher", trials=2000, **base)]


def _c7_eval(res, fault=None):
    cg, q1, q2, rg, rd = (res[c] for c in _c7_cfgs())
    out = [
        _chk("lss-eig", "qpsk r=1 identically 0", np.all(q1.values == 0.0),
             f"max|value|={np.abs(q1.values).max():.3g}"),
        _chk("lss-eig", "rademacher r=1 identically 0", np.all(rd.values == 0.0),
             f"max|value|={np.abs(rd.values).max():.3g}"),
    ]
    for r, f4 in ((cg, 2.0), (rg, 3.0)):
        s = r.summary
        z = s.mean / s.se_mean
        out.append(_chk("lss-eig", f"{r.config.dist} r=1 |z_mean| < 4 vs 0", abs(z) < 4,
                        f"mean={s.mean:.4f} z={z:.2f}"))
        out.append(_var_check("lss-eig", f"{r.config.dist} r=1 variance vs c_N(E|v|^4-1)", s,
                              r.config.c_N * (f4 - 1), 0.10))
    s = q2.summary
    pred = thm14_prediction([2], 1, 1.0).mean
    z = (s.mean + 1) / s.se_mean
    out.append(_chk("lss-eig", "qpsk r=2 mean within 4 SE of -1, matching prediction",
                    abs(z) < 4 and abs(pred + 1) < 1e-10,
                    f"mean={s.mean:.5f} se={s.se_mean:.5f} z={z:.2f} prediction={pred:.10f}"))
    return out


# --------------------------------------------------------------------------
# 8. closed form vs contour

def _c8_eval(res, fault=None):
    worst_mean = worst_cov = worst_rad = 0.0
    for c in (0.5, 1.0, 2.0):
        inner, outer = default_contours(c)
        for r in range(1, 6):
            cl = thm14_mean_correction_closed(r, c)
            nu = thm14_mean_correction_numeric(r, c)
            worst_mean = max(worst_mean, abs(cl - nu) / max(1.0, abs(cl)))
            nu2 = thm14_mean_correction_numeric(r, c, inner.scaled(1.1))
            worst_rad = max(worst_rad, abs(nu2 - nu) / max(1.0, abs(nu)))
        for r1 in range(1, 6):
            for r2 in range(r1, 6):
                cl = thm14_cov_correction_closed(r1, r2, c)
                nu = thm14_cov_correction_numeric(r1, r2, c)
                worst_cov = max(worst_cov, abs(cl - nu) / max(1.0, abs(cl)))
                nu2 = thm14_cov_correction_numeric(r1, r2, c, (inner.scaled(1.1), outer.scaled(1.1)))
                worst_rad = max(worst_rad, abs(nu2 - nu) / max(1.0, abs(nu)))
    r1_zero = all(thm14_mean_correction_closed(1, c) == 0.0 for c in (0.5, 1.0, 2.0))
    cov11 = max(abs(thm14_cov_correction_closed(1, 1, c) - c) for c in (0.5, 1.0, 2.0))
    return [
        _chk("contour", "mean correction closed vs contour, r <= 5", worst_mean < 1e-8,
             f"max rel err {worst_mean:.2e}"),
        _chk("contour", "covariance correction closed vs contour, r1, r2 <= 5", worst_cov < 1e-8,
             f"max rel err {worst_cov:.2e}"),
        _chk("contour", "r=1 mean correction exactly 0", r1_zero),
        _chk("contour", "covariance correction (1,1) equals c", cov11 < 1e-12, f"max err {cov11:.2e}"),
        _chk("contour", "radius perturbation x1.1 invariance", worst_rad < 1e-8,
             f"max rel change {worst_rad:.2e}"),
    ]


# --------------------------------------------------------------------------
# 9. eigenvector statistic

def _c9_cfgs():
    return [ExperimentConfig("lss-vec", dist="complex-gaussian", **_N400)]


def _c9_eval(res, fault=None):
    s = res[_c9_cfgs()[0]].summary
    cov = thm13_cov_numeric(1, 1, 1.0)
    E = sample_ensemble(400, 400, seed=SEED)
    e1 = np.zeros(400, dtype=complex)
    e1[0] = 1.0
    try:
        lss_eigenvector(E, e1, 1)
        raised = False
    except XNotSpread:
        raised = True
    return [
        _chk("lss-vec", "thm13_cov_numeric(1,1,c_N) equals c_N", abs(cov - 1.0) < 1e-6,
             f"value={cov:.12f}"),
        _var_check("lss-vec", "uniform x, r=1 variance vs thm13_cov_numeric", s, cov, 0.15),
        _chk("lss-vec", "x = e1 raises spread violation", raised),
    ]


# --------------------------------------------------------------------------
# 10. determinism

def _c10_eval(res, fault=None):
    cfg = ExperimentConfig("mf-sum", 64, 64, 200, seed=SEED)
    blobs = []
    for workers in (1, 8):
        (r,) = run_batch([cfg], workers=workers)
        blobs.append(dumps_records(r))
    cfg2 = replace(cfg, statistic="lss-vec", x_choice="random")
    blobs2 = [dumps_records(run_batch([cfg2], workers=w)[0]) for w in (1, 8)]
    return [
        _chk("determinism", "mf-sum records identical at 1 and 8 workers", blobs[0] == blobs[1],
             f"{len(blobs[0])} bytes"),
        _chk("determinism", "lss-vec (random x) records identical at 1 and 8 workers",
             blobs2[0] == blobs2[1], f"{len(blobs2[0])} bytes"),
    ]


CRITERIA = [
    Criterion("moments", 1, "moment engine", evaluate=_c1_eval),
    Criterion("msw-chain", 2, "deterministic MSW chain", evaluate=_c2_eval),
    Criterion("msw-finite", 3, "finite-N MSW convergence", _c3_cfgs, _c3_eval),
    Criterion("msw-fluct", 4, "MSW fluctuation", _c4_cfgs, _c4_eval),
    Criterion("mf-sum", 5, "matched-filter SIR sum", _c5_cfgs, _c5_eval),
    Criterion("mf-mi", 6, "matched-filter mutual information", _c6_cfgs, _c6_eval),
    Criterion("lss-eig", 7, "eigenvalue statistic oracles", _c7_cfgs, _c7_eval),
    Criterion("contour", 8, "closed form vs contour", evaluate=_c8_eval),
    Criterion("lss-vec", 9, "eigenvector statistic", _c9_cfgs, _c9_eval),
    Criterion("determinism", 10, "determinism", evaluate=_c10_eval),
]


def select(only=None) -> list[Criterion]:
    if not only:
        return list(CRITERIA)
    wanted = {o.strip() for o in only}
    out = [c for c in CRITERIA if c.key in wanted or str(c.number) in wanted]
    unknown = wanted - {c.key for c in out} - {str(c.number) for c in out}
    if unknown:
        raise ValueError(f"unknown criteria {sorted(unknown)}; known: {[c.key for c in CRITERIA]}")
    return out


def run_experiments(criteria, workers: int = 1) -> dict:
    """Run every experiment the criteria need, one pass per shared ensemble."""
    groups: dict = {}
    for crit in criteria:
        for cfg in crit.configs():
            groups.setdefault(cfg.ensemble_key(), [])
            if cfg not in groups[cfg.ensemble_key()]:
                groups[cfg.ensemble_key()].append(cfg)
    results = {}
    for cfgs in groups.values():
        for r in run_batch(cfgs, workers=workers):
            results[r.config] = r
    return results


def run_acceptance(only=None, workers: int = 1, fault: str | None = None,
                   results: dict | None = None) -> list[Check]:
    criteria = select(only)
    if results is None:
        results = run_experiments(criteria, workers)
    checks = []
    for crit in criteria:
        for chk in crit.evaluate(results, fault):
            chk.criterion = f"{crit.number}:{crit.key}"
            checks.append(chk)
    return checks


def format_check(chk: Check) -> str:
    tag = "PASS" if chk.passed else "FAIL"
    tail = f"  [{chk.detail}]" if chk.detail else ""
    return f"{tag}  {chk.criterion:<14} {chk.label}{tail}"
