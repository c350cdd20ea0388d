"""Seeded Monte Carlo experiments compared against the CLT predictions.

Trial ``t`` of an experiment draws its ensemble from the stream keyed by
``(seed, t)``, so every per-trial value is fixed by the configuration
alone.  Values are stored by trial index and reduced with a fixed pairwise
tree of ``(count, mean, M2)`` partials; neither the worker count nor the
completion order can change a summary.

Several statistics that share an ensemble (same N, K, law, seed and trial
count) can be evaluated in one pass with :func:`run_batch`; each result is
identical to running the configuration on its own.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateVariance, PredictionUnavailable, SirCltError, TrialFailure
from .formulas import (hankel_system, lss_vec_prediction, mf_mi_params, mf_sum_prediction,
                       thm11_variance, thm14_prediction)
from .model import DIST_KINDS, EntryDist, sample_ensemble
from .receivers import mf_mi_statistic, mf_sum_statistic, mf_sir, msw_sir, msw_fluctuation
from .spectral import lss_eigenvalue, lss_eigenvector, random_x, uniform_x

__all__ = [
    "HARNESS_STATISTICS",
    "ExperimentConfig",
    "Partial",
    "TrialSummary",
    "ExperimentResult",
    "ks_distance",
    "merge",
    "tree_reduce",
    "summarize",
    "predict",
    "trial_value",
    "run_experiment",
    "run_batch",
]

# "msw-beta" is the raw SIR beta_1m (mean compared with its deterministic limit)
HARNESS_STATISTICS = ("msw-sir", "msw-beta", "mf-sum", "mf-mi", "lss-eig", "lss-vec")


@dataclass(frozen=True)
class ExperimentConfig:
    statistic: str
    N: int
    K: int
    trials: int
    sigma2: float = 1.0
    m_stages: int = 1
    dist: str = "complex-gaussian"
    seed: int = 0
    x_choice: str = "uniform"
    degrees: tuple = (1,)
    z_tol: float = 4.0
    var_tol: float = 0.15
    ks_const: float = 1.95

    def __post_init__(self):
        if self.statistic not in HARNESS_STATISTICS:
            raise ValueError(f"unknown statistic {self.statistic!r}; expected one of {HARNESS_STATISTICS}")
        if self.dist not in DIST_KINDS:
            raise ValueError(f"unknown dist {self.dist!r}; expected one of {DIST_KINDS}")
        if self.N < 1 or self.K < 1:
            raise ValueError("N and K must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if self.m_stages < 1:
            raise ValueError("m_stages must be >= 1")
        if self.x_choice not in ("uniform", "random"):
            raise ValueError("x_choice must be 'uniform' or 'random'")
        object.__setattr__(self, "degrees", tuple(int(r) for r in self.degrees))
        if not self.degrees or min(self.degrees) < 1:
            raise ValueError("degrees must be a nonempty list of integers >= 1")

    @property
    def c_N(self) -> float:
        return self.N / self.K

    def ensemble_key(self):
        return (self.N, self.K, self.dist, self.seed, self.trials)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["degrees"] = list(self.degrees)
        return d


# --------------------------------------------------------------------------
# streaming moments

@dataclass(frozen=True)
class Partial:
    n: int = 0
    mean: float = 0.0
    M2: float = 0.0


def merge(a: Partial, b: Partial) -> Partial:
    """Chan et al. pairwise combination of two ``(count, mean, M2)`` partials."""
    if a.n == 0:
        return b
    if b.n == 0:
        return a
    n = a.n + b.n
    delta = b.mean - a.mean
    mean = a.mean + delta * b.n / n
    M2 = a.M2 + b.M2 + delta * delta * a.n * b.n / n
    return Partial(n, mean, M2)


def tree_reduce(values) -> Partial:
    """Balanced pairwise reduction over values in index order."""
    vals = np.asarray(values, dtype=float)

    def rec(lo, hi):
        if hi - lo == 1:
            return Partial(1, float(vals[lo]), 0.0)
        mid = (lo + hi) // 2
        return merge(rec(lo, mid), rec(mid, hi))

    return rec(0, vals.size) if vals.size else Partial()


# --------------------------------------------------------------------------
# diagnostics

def ks_distance(samples, mean: float, variance: float) -> float:
    """Kolmogorov distance between standardised samples and N(0, 1).

    The normal CDF is :func:`scipy.special.ndtr` (double precision).
    """
    if not variance > 0:
        raise DegenerateVariance(f"variance {variance!r} is not positive")
    z = np.sort((np.asarray(samples, dtype=float) - mean) / math.sqrt(variance))
    n = z.size
    if n == 0:
        raise ValueError("no samples")
    F = ndtr(z)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


@dataclass(frozen=True)
class TrialSummary:
    n: int
    mean: float
    variance: float | None
    se_mean: float | None
    se_var: float | None
    theory_mean: float | None
    theory_var: float | None
    z_mean: float | None
    var_ratio: float | None
    ks_distance: float | None
    ks_theory: float | None
    verdicts: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v in ("pass", "n/a") for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(values, theory_mean=None, theory_var=None, z_tol: float = 4.0,
              var_tol: float = 0.15, ks_const: float = 1.95) -> TrialSummary:
    """Reduce per-trial values and compare them with a (mean, variance) prediction.

    ``ks_distance`` standardises by the sample mean and variance (a shape
    check); ``ks_theory`` uses the predicted ones.  Variance fields are
    ``None`` for a single trial.
    """
    values = np.asarray(values, dtype=float)
    p = tree_reduce(values)
    n = p.n
    verdicts = {}
    if n < 2:
        return TrialSummary(n, p.mean, None, None, None, theory_mean, theory_var,
                            None, None, None, None, {"mean": "n/a", "variance": "n/a", "ks": "n/a"})
    var = max(p.M2 / (n - 1), 0.0)
    se_mean = math.sqrt(var / n)
    se_var = var * math.sqrt(2.0 / (n - 1))
    z = ratio = None
    if theory_mean is not None:
        if se_mean > 0:
            z = (p.mean - theory_mean) / se_mean
            verdicts["mean"] = "pass" if abs(z) < z_tol else "fail"
        else:
            verdicts["mean"] = "pass" if p.mean == theory_mean else "fail"
    if theory_var is not None:
        if theory_var > 0:
            ratio = var / theory_var
            verdicts["variance"] = "pass" if abs(ratio - 1.0) <= var_tol else "fail"
        else:
            verdicts["variance"] = "pass" if var == 0.0 else "fail"
    ks = ks_th = None
    try:
        ks = ks_distance(values, p.mean, var)
        verdicts["ks"] = "pass" if ks < ks_const / math.sqrt(n) else "fail"
    except DegenerateVariance:
        verdicts["ks"] = "n/a"
    if theory_mean is not None and theory_var:
        ks_th = ks_distance(values, theory_mean, theory_var)
    return TrialSummary(n, p.mean, var, se_mean, se_var, theory_mean, theory_var,
                        z, ratio, ks, ks_th, verdicts)


# --------------------------------------------------------------------------
# statistics and predictions

def predict(cfg: ExperimentConfig) -> tuple[float, float]:
    """Predicted (mean, variance) of the per-trial statistic at ratio ``c_N``."""
    d = EntryDist(cfg.dist)
    c = cfg.c_N
    f4 = d.fourth_moment
    real = not d.is_complex
    if cfg.statistic in ("msw-sir", "msw-beta", "mf-sum", "mf-mi") and real:
        raise PredictionUnavailable(
            f"{cfg.statistic} predictions assume complex entries with E v^2 = 0; got {cfg.dist}")
    if cfg.statistic == "msw-sir":
        return 0.0, thm11_variance(cfg.m_stages, c, cfg.sigma2, f4).variance
    if cfg.statistic == "msw-beta":
        var = thm11_variance(cfg.m_stages, c, cfg.sigma2, f4).variance / cfg.N
        return hankel_system(cfg.m_stages, c, cfg.sigma2).sir_limit, var
    if cfg.statistic == "mf-sum":
        p = mf_sum_prediction(c, cfg.sigma2, f4)
    elif cfg.statistic == "mf-mi":
        p = mf_mi_params(c, cfg.sigma2, f4)
    elif cfg.statistic == "lss-eig":
        p = thm14_prediction(cfg.degrees, c, f4, real=real)
    else:
        p = lss_vec_prediction(cfg.degrees, c, real=real)
    return p.mean, p.variance


def trial_value(cfg: ExperimentConfig, E) -> float:
    """The scalar statistic of ``cfg`` on one ensemble."""
    s = cfg.statistic
    if s == "msw-sir":
        return msw_fluctuation(E, 0, cfg.m_stages, cfg.sigma2)
    if s == "msw-beta":
        m = cfg.m_stages
        return mf_sir(E, 0, cfg.sigma2).value if m == 1 else msw_sir(E, 0, m, cfg.sigma2).value
    if s == "mf-sum":
        return mf_sum_statistic(E, cfg.sigma2)
    if s == "mf-mi":
        return mf_mi_statistic(E, cfg.sigma2)
    if s == "lss-eig":
        return float(sum(lss_eigenvalue(E, r) for r in cfg.degrees))
    x = uniform_x(E.N) if cfg.x_choice == "uniform" else random_x(E)
    return float(sum(lss_eigenvector(E, x, r) for r in cfg.degrees))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    values: np.ndarray
    summary: TrialSummary

    def records(self):
        return [{"trial": int(t), "statistic_value": float(v)} for t, v in enumerate(self.values)]


def _run_trial(cfgs, t):
    c0 = cfgs[0]
    try:
        E = sample_ensemble(c0.N, c0.K, dist=c0.dist, seed=c0.seed, trial=t)
        out = [trial_value(cfg, E) for cfg in cfgs]
    except (SirCltError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise TrialFailure(c0.seed, t, exc) from exc
    if not all(math.isfinite(v) for v in out):
        raise TrialFailure(c0.seed, t, FloatingPointError("non-finite statistic"))
    return out


def run_batch(cfgs, workers: int = 1, progress=None) -> list[ExperimentResult]:
    """Run configurations sharing one ensemble sequence in a single pass.

    Raises :class:`PredictionUnavailable` before any trial runs if some
    configuration has no prediction, and :class:`TrialFailure` (naming the
    trial) if a trial fails.
    """
    cfgs = list(cfgs)
    if not cfgs:
        return []
    key = cfgs[0].ensemble_key()
    if any(c.ensemble_key() != key for c in cfgs):
        raise ValueError("batched configs must share N, K, dist, seed and trials")
    theory = [predict(c) for c in cfgs]
    n = cfgs[0].trials
    vals = np.empty((len(cfgs), n))
    workers = max(1, int(workers))

    def store(t, row):
        vals[:, t] = row
        if progress is not None:
            progress(t)

    if workers == 1:
        for t in range(n):
            store(t, _run_trial(cfgs, t))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_trial, cfgs, t): t for t in range(n)}
            for fut, t in futures.items():
                store(t, fut.result())
    results = []
    for i, cfg in enumerate(cfgs):
        mean, var = theory[i]
        s = summarize(vals[i], mean, var, cfg.z_tol, cfg.var_tol, cfg.ks_const)
        results.append(ExperimentResult(cfg, vals[i].copy(), s))
    return results


def run_experiment(cfg: ExperimentConfig, workers: int = 1, progress=None) -> ExperimentResult:
    return run_batch([cfg], workers=workers, progress=progress)[0]

