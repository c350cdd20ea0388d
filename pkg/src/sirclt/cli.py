"""Command-line entry point ``sirclt``.

Subcommands: ``limits``, ``predict``, ``simulate``, ``contour``, ``verify``.
Exit codes: 0 success, 1 usage or configuration error, 2 numerical
failure, 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields

import yaml

from .errors import (ConfigError, IllConditioned, PredictionUnavailable, SirCltError,
                     TrialFailure)
from .harness import HARNESS_STATISTICS, ExperimentConfig, predict, run_experiment
from .model import DIST_KINDS, EntryDist
from .moments import shifted_a
from .records import RunRecord, write_histogram

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3
THREADS_ENV = "SIRCLT_THREADS"

_EXPERIMENT_KEYS = {f.name for f in fields(ExperimentConfig)}
_OUTPUT_KEYS = {"path", "histogram", "bins"}
_RUN_KEYS = {"threads"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)


def resolve_threads(arg) -> int:
    if arg is not None:
        return max(1, int(arg))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}={env!r} is not an integer") from None
    return 1


# --------------------------------------------------------------------------
# limits

def cmd_limits(args) -> int:
    from .formulas import hankel_system, mmse_limit

    if args.m_max < 1:
        raise ConfigError("--m-max must be >= 1")
    c, s2 = args.c, args.sigma2
    moments = {f"a{j}": shifted_a(j, c, s2) for j in range(1, 2 * args.m_max)}
    try:
        bound = mmse_limit(c, s2)
    except (SirCltError, ValueError) as exc:
        bound = None
        print(f"# mmse_limit unavailable: {exc}", file=sys.stderr)
    rows = []
    prev = None
    for m in range(1, args.m_max + 1):
        try:
            val = hankel_system(m, c, s2).sir_limit
        except IllConditioned as exc:
            rows.append({"m": m, "sir_limit": None, "note": f"ill-conditioned: {exc}"})
            continue
        note = []
        if prev is not None:
            note.append("increasing" if val > prev else "NOT increasing")
        if bound is not None:
            note.append("below mmse" if val <= bound + 1e-12 else "ABOVE mmse")
        rows.append({"m": m, "sir_limit": val, "note": ", ".join(note)})
        prev = val
    _emit({"c": c, "sigma2": s2, "moments": moments, "rows": rows, "mmse_limit": bound}, args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# predict

_EQUATIONS = {
    "msw-sir": "w' C_zeta w, w from the Hankel solve d = B^-1 b",
    "mf-sum": "mu = 1/(c a1^2) + 1/(c^2 a1^3); tau^2 from the second-order expansion",
    "mf-mi": "mu1 = mu/g - ((E|v|^4-1) a1^2 + 1/c)/(2 c a1^4 g^2); tau1^2 = tau^2/g^2, g = 1 + 1/a1",
    "lss-eig": "contour base terms + fourth-moment closed forms",
    "lss-vec": "c x double-contour kernel; M_{r1+r2} - M_r1 M_r2 for complex entries",
}


def cmd_predict(args) -> int:
    from .formulas import (cor11_params, lss_vec_prediction, mf_mi_params, mf_sum_prediction,
                           thm11_variance, thm12_mean, thm14_prediction)

    d = EntryDist(args.dist)
    real = not d.is_complex
    f4 = d.fourth_moment
    st = args.statistic
    if st in ("msw-sir", "mf-sum", "mf-mi") and real:
        raise PredictionUnavailable(f"{st}: the limit theory needs complex entries with E v^2 = 0; "
                                    f"{args.dist} is real")
    degrees = args.degrees or [1]
    out = {}
    if st == "msw-sir":
        p = thm11_variance(args.m_max, args.c, args.sigma2, f4)
    elif st == "mf-sum":
        p = mf_sum_prediction(args.c, args.sigma2, f4)
        out["reference_mean"] = thm12_mean(args.c, args.sigma2, f4)
    elif st == "mf-mi":
        p = mf_mi_params(args.c, args.sigma2, f4)
        out["reference_mean"] = cor11_params(args.c, args.sigma2, f4).mean
    elif st == "lss-eig":
        p = thm14_prediction(degrees, args.c, f4, real=real)
    elif st == "lss-vec":
        p = lss_vec_prediction(degrees, args.c, real=real)
    else:
        raise ConfigError(f"no prediction for statistic {st!r}")
    out = {**p.as_dict(), **out, "equation": _EQUATIONS[st]}
    if p.variance == 0.0:
        out["note"] = "degenerate: the statistic is deterministic (zero limiting variance)"
    _emit(out, args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate

def _check_keys(section, allowed, where):
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}; allowed: {sorted(allowed)}")


def load_config(path):
    """Parse a YAML experiment file into (ExperimentConfig, output, run) sections."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping with an 'experiment' section")
    _check_keys(doc, {"experiment", "output", "run"}, "top level")
    if "experiment" not in doc:
        raise ConfigError("missing 'experiment' section")
    exp = doc["experiment"]
    _check_keys(exp, _EXPERIMENT_KEYS, "experiment")
    out = doc.get("output") or {}
    _check_keys(out, _OUTPUT_KEYS, "output")
    run = doc.get("run") or {}
    _check_keys(run, _RUN_KEYS, "run")
    try:
        cfg = ExperimentConfig(**exp)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"experiment: {exc}") from exc
    return cfg, out, run


def _config_from_flags(args):
    missing = [n for n in ("statistic", "N", "K", "trials") if getattr(args, n) is None]
    if missing:
        raise ConfigError("simulate needs --config or all of --statistic --N --K --trials "
                          f"(missing {', '.join('--' + m for m in missing)})")
    try:
        return ExperimentConfig(statistic=args.statistic, N=args.N, K=args.K, trials=args.trials,
                                sigma2=args.sigma2, m_stages=args.m_max, dist=args.dist,
                                seed=args.seed, degrees=tuple(args.degrees or (1,)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_simulate(args) -> int:
    if args.config:
        cfg, out, run = load_config(args.config)
    else:
        cfg, out, run = _config_from_flags(args), {}, {}
    threads = resolve_threads(args.threads if args.threads is not None else run.get("threads"))
    path = args.out or out.get("path")
    if not path:
        raise ConfigError("no output path: pass --out or set output.path")
    result = run_experiment(cfg, workers=threads)
    rec = RunRecord.from_result(result)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rec.dumps())
    hist = args.histogram or out.get("histogram")
    if hist:
        s = result.summary
        write_histogram(hist, result.values, int(out.get("bins", 50)), s.theory_mean, s.theory_var)
    s = result.summary
    print(json.dumps({"out": path, "n": s.n, "mean": s.mean, "variance": s.variance,
                      "theory_mean": s.theory_mean, "theory_var": s.theory_var,
                      "verdicts": s.verdicts}))
    return EXIT_OK


# --------------------------------------------------------------------------
# contour

def cmd_contour(args) -> int:
    from .contour import default_contours
    from .formulas import (thm14_cov_correction_closed, thm14_cov_correction_numeric,
                           thm14_mean_correction_closed, thm14_mean_correction_numeric)

    inner, outer = default_contours(args.c)
    rows = []
    for r in range(1, args.m_max + 1):
        mc, mn = thm14_mean_correction_closed(r, args.c), thm14_mean_correction_numeric(r, args.c)
        cc, cn = thm14_cov_correction_closed(r, r, args.c), thm14_cov_correction_numeric(r, r, args.c)
        rows.append({"r": r, "mean_closed": mc, "mean_contour": mn, "mean_diff": abs(mc - mn),
                     "cov_closed": cc, "cov_contour": cn, "cov_diff": abs(cc - cn)})
    _emit({"c": args.c,
           "inner": {"center": inner.center, "radius": inner.radius, "nodes": inner.nodes},
           "outer": {"center": outer.center, "radius": outer.radius, "nodes": outer.nodes},
           "rows": rows}, args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# verify

def cmd_verify(args) -> int:
    from .acceptance import format_check, run_acceptance

    only = [s for item in (args.only or []) for s in item.split(",") if s]
    try:
        checks = run_acceptance(only=only or None, workers=resolve_threads(args.threads),
                                fault=args.inject_fault)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    lines = [format_check(c) for c in checks]
    for line in lines:
        print(line, flush=True)
    failed = sorted({c.criterion for c in checks if not c.passed})
    summary = f"{sum(c.passed for c in checks)}/{len(checks)} checks passed"
    if failed:
        summary += f"; failing criteria: {', '.join(failed)}"
    print(summary)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines + [summary]) + "\n")
    return EXIT_OK if not failed else EXIT_VERIFY


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sirclt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, *names):
        if "c" in names:
            sp.add_argument("--c", type=float, default=1.0, help="ratio N/K (default 1)")
        if "sigma2" in names:
            sp.add_argument("--sigma2", type=float, default=1.0, help="noise variance (default 1)")
        if "m" in names:
            sp.add_argument("--m-max", type=int, default=1, dest="m_max",
                            help="number of stages / largest degree")
        if "dist" in names:
            sp.add_argument("--dist", choices=DIST_KINDS, default="complex-gaussian")
        if "statistic" in names:
            sp.add_argument("--statistic", choices=HARNESS_STATISTICS)
            sp.add_argument("--degrees", type=int, nargs="+", help="monomial degrees for lss-*")
        sp.add_argument("--out", help="write the result to this file")

    sp = sub.add_parser("limits", help="deterministic SIR limits and moments")
    common(sp, "c", "sigma2", "m")
    sp.set_defaults(func=cmd_limits, m_max=3)

    sp = sub.add_parser("predict", help="limiting mean and variance of a statistic")
    common(sp, "c", "sigma2", "m", "dist", "statistic")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    common(sp, "sigma2", "m", "dist", "statistic")
    sp.add_argument("--config", help="YAML experiment file")
    sp.add_argument("--N", type=int)
    sp.add_argument("--K", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int)
    sp.add_argument("--histogram", help="histogram CSV path")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("contour", help="closed forms vs contour quadrature")
    common(sp, "c", "m")
    sp.set_defaults(func=cmd_contour, m_max=5)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    sp.add_argument("--only", action="append", help="criterion keys or numbers (comma separated)")
    sp.add_argument("--threads", type=int)
    sp.add_argument("--out", help="also write the report here")
    sp.add_argument("--inject-fault", choices=["moments"], help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "predict" and args.statistic is None:
        print("sirclt predict: error: --statistic is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, PredictionUnavailable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrialFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SirCltError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
