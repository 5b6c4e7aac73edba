"""Command-line interface: ``bsdist {fit,gof,sample,mc,censor-fit}``.

Reports are JSON documents (schema ``bsdist.report/1``) with numbers rounded
to six significant digits; ``--table`` prints an aligned text view instead.
Exit codes: 0 success, 1 estimator failure, 2 input error.

Environment overrides: ``BSDIST_TOL`` (iterative fit tolerance) and
``BSDIST_MAX_ITER`` (iteration cap).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from . import complete as cp
from .censored import censor_type2, progressive_censor, progressive_ci, progressive_fit
from .censored import Type2Sample, type2_bias_factor, type2_ci, type2_mle
from .core import BsParams, sample as bs_sample
from .datasets import DATASETS, data_hash, load
from .multivariate import MvBsParams, mv_ci, mv_mle, mv_mm, mv_sample
from .numerics import ConvergenceError, DomainError, NonexistenceError
from .simulation import bias_experiment, coverage_experiment, robust_experiment

SCHEMA = "bsdist.report/1"


class InputError(Exception):
    """Bad user input; exit code 2."""


def _env_float(name, default):
    v = os.environ.get(name)
    if v is None:
        return default
    try:
        return float(v)
    except ValueError:
        raise InputError(f"{name} must be a number, got {v!r}") from None


def _round(x):
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, np.ndarray):
        return _round(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.6g}")
    return x


# ---------------------------------------------------------------------------
# input

def read_csv(path: str, positive: bool = True) -> np.ndarray:
    """Numeric CSV with an optional header row; one or more columns.

    Raises
    ------
    InputError
        Naming the offending row for unreadable, non-numeric, ragged or
        (when `positive`) non-positive entries.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    rows = []
    width = None
    with fh:
        for i, rec in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in rec if c.strip() != ""]
            if not cells:
                continue
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                if i == 1 and not rows:
                    continue  # header
                raise InputError(f"{path}: row {i}: non-numeric value in {rec}") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise InputError(f"{path}: row {i}: expected {width} columns, got {len(vals)}")
            for v in vals:
                if not math.isfinite(v):
                    raise InputError(f"{path}: row {i}: non-finite value {v}")
                if positive and v <= 0:
                    raise InputError(f"{path}: row {i}: value {v:g} is not positive")
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no data rows")
    arr = np.array(rows)
    return arr[:, 0] if arr.shape[1] == 1 else arr


def _load(args):
    if bool(args.data) == bool(args.file):
        raise InputError("give exactly one of --data or --file")
    if args.data:
        try:
            values = load(args.data)
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from None
        name = args.data
    else:
        values = read_csv(args.file)
        name = os.path.basename(args.file)
    if args.scale is not None:
        if not args.scale > 0:
            raise InputError("--scale must be positive")
        values = values * args.scale
    return name, values


# ---------------------------------------------------------------------------
# fitting

_UNIVARIATE = {
    "ml": lambda t: cp.mle(t),
    "mm": lambda t: cp.mm_est(t),
    "uml": lambda t: cp.bias_correct(cp.mle(t)),
    "umm": lambda t: cp.bias_correct(cp.mm_est(t)),
    "moment": lambda t: cp.moment_est(t),
    "new": lambda t: cp.new_est(t),
    "fl1": lambda t: cp.from_li(t, 1),
    "fl2": lambda t: cp.from_li(t, 2),
    "fl3": lambda t: cp.from_li(t, 3),
    "fl4": lambda t: cp.from_li(t, 4),
    "jackknife": lambda t: cp.jackknife_correct(t),
    "obre": None,
}


def fit_univariate(values, method: str, level: float) -> dict:
    method = method.lower()
    if method not in _UNIVARIATE:
        raise InputError(f"unknown method {method!r}; choose from {sorted(_UNIVARIATE)}")
    if method == "obre":
        from .robust import obre

        fit = obre(values)
    else:
        fit = _UNIVARIATE[method](values)
    out = fit.as_dict()
    out.pop("ci", None)
    if fit.method in ("ML", "MM", "UML", "UMM"):
        (alo, ahi), (blo, bhi) = cp.asymp_ci(fit, level)
        out["ci"] = {"level": level, "alpha": [alo, ahi], "beta": [blo, bhi]}
    return out


def fit_multivariate(values, method: str, level: float) -> dict:
    method = method.lower()
    if method == "mm":
        mp = mv_mm(values)
        return {"method": "MM", "n": int(values.shape[0]), "alpha": mp.alpha, "beta": mp.beta,
                "gamma": mp.gamma}
    if method != "ml":
        raise InputError("multivariate data support --method ml or mm")
    fit = mv_mle(values)
    out = fit.as_dict()
    out["ci"] = {"level": level, **{k: list(v) for k, v in mv_ci(fit, values, level).items()}}
    out["se"] = dict(fit.se)
    return out


def cmd_fit(args) -> dict:
    name, values = _load(args)
    if values.ndim == 2:
        fit = fit_multivariate(values, args.method, args.level)
    else:
        fit = fit_univariate(values, args.method, args.level)
    return {"dataset": name, "data_hash": data_hash(values), "fit": fit}


def cmd_gof(args) -> dict:
    name, values = _load(args)
    if values.ndim != 1:
        raise InputError("goodness of fit needs univariate data")
    fit = fit_univariate(values, args.method, args.level)
    d, p = cp.ks_test(values, BsParams(fit["alpha"], fit["beta"]))
    return {"dataset": name, "data_hash": data_hash(values), "fit": fit,
            "gof": {"ks_distance": d, "p_value": p}}


# ---------------------------------------------------------------------------
# sampling

def parse_spec(spec: str):
    """``kind:key=value,...``, e.g. ``bs:alpha=0.5,beta=2``."""
    kind, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise InputError(f"bad parameter {item!r} in {spec!r}")
        try:
            params[key.strip()] = float(val)
        except ValueError:
            raise InputError(f"parameter {key!r} must be numeric") from None
    return kind.strip().lower(), params


def _need(params, keys, kind):
    missing = [k for k in keys if k not in params]
    extra = sorted(set(params) - set(keys))
    if missing or extra:
        raise InputError(f"{kind} needs parameters {keys}; missing {missing}, unexpected {extra}")
    return [params[k] for k in keys]


def draw(spec: str, n: int, seed) -> np.ndarray:
    kind, params = parse_spec(spec)
    if kind == "bs":
        a, b = _need(params, ["alpha", "beta"], kind)
        return bs_sample(BsParams(a, b), n, seed)
    if kind == "bvbs":
        vals = _need(params, ["alpha1", "beta1", "alpha2", "beta2", "rho"], kind)
        return mv_sample(MvBsParams.bivariate(*vals), n, seed)
    if kind == "mixture":
        from .mixture import MixtureParams, mixture_sample

        vals = _need(params, ["alpha1", "beta1", "alpha2", "beta2", "p"], kind)
        return mixture_sample(MixtureParams(*vals), n, seed)
    if kind == "lbs":
        from .related import LbsParams, lbs_sample

        return lbs_sample(LbsParams(*_need(params, ["alpha", "beta"], kind)), n, seed)
    if kind == "sn":
        from .related import SnParams, sn_sample

        return sn_sample(SnParams(*_need(params, ["alpha", "gamma", "sigma"], kind)), n, seed)
    raise InputError(f"unknown distribution {kind!r}; choose from bs, bvbs, mixture, lbs, sn")


def cmd_sample(args) -> dict:
    if args.n < 1:
        raise InputError("--n must be positive")
    x = draw(args.dist, args.n, args.seed)
    x2 = x[:, None] if x.ndim == 1 else x
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for row in x2:
                w.writerow([repr(float(v)) for v in row])
    return {"dist": args.dist, "n": args.n, "out": args.out, "data_hash": data_hash(x),
            "mean": x2.mean(axis=0)}


# ---------------------------------------------------------------------------
# Monte Carlo

def cmd_mc(args) -> dict:
    kw = dict(alpha=args.alpha, beta=args.beta, n=args.n, reps=args.reps, seed=args.seed,
              workers=args.workers)
    if args.experiment == "bias":
        tab = bias_experiment(**kw)
    elif args.experiment == "coverage":
        tab = coverage_experiment(level=args.level, method=args.method.upper(), **kw)
    else:
        tab = robust_experiment(frac=args.contamination, **kw)
    return {"mc": tab.as_dict()}


# ---------------------------------------------------------------------------
# censored fits

def _kv(text: str, key: str) -> str:
    k, eq, v = text.partition("=")
    if not eq:
        return text
    if k.strip() != key:
        raise InputError(f"expected {key}=..., got {text!r}")
    return v


def cmd_censor_fit(args) -> dict:
    name, values = _load(args)
    if values.ndim != 1:
        raise InputError("censored fits need univariate data")
    if (args.type2 is None) == (args.progressive is None):
        raise InputError("give exactly one of --type2 or --progressive")
    tol = _env_float("BSDIST_TOL", 1e-10)
    max_iter = int(_env_float("BSDIST_MAX_ITER", 5000))
    out = {"dataset": name, "data_hash": data_hash(values)}
    if args.type2 is not None:
        try:
            r = int(_kv(args.type2, "r"))
        except ValueError:
            raise InputError(f"--type2 needs an integer rank, got {args.type2!r}") from None
        if not 2 <= r <= values.size:
            raise InputError(f"--type2 rank must lie in [2, {values.size}]")
        s = censor_type2(values, r, jitter=True)
        fit = type2_mle(s, strategy=args.strategy if args.strategy in ("direct", "root") else "direct")
        ci = type2_ci(fit, s, args.level)
        cci = type2_ci(fit, s, args.level, corrected=True)
        out["scheme"] = {"type": "type2", "n": s.n, "r": s.r}
        out["fit"] = {"alpha": fit.alpha, "beta": fit.beta, "se_alpha": fit.se_alpha, "se_beta": fit.se_beta,
                      "loglik": fit.loglik, "alpha_corrected": fit.alpha * _alpha_factor(s),
                      "ci": {"level": args.level, "alpha": ci[0], "beta": ci[1]},
                      "ci_corrected": {"level": args.level, "alpha": cci[0], "beta": cci[1]}}
        return out
    try:
        R = [int(v) for v in _kv(args.progressive, "R").split(",")]
    except ValueError:
        raise InputError(f"--progressive needs comma-separated integers, got {args.progressive!r}") from None
    try:
        s = progressive_censor(values, R, rule=args.rule, seed=args.seed)
    except DomainError as exc:
        raise InputError(f"infeasible scheme: {exc}") from None
    strategy = args.strategy if args.strategy in ("direct", "em") else "direct"
    fit = progressive_fit(s, strategy=strategy, se_method=args.se, tol=tol, max_iter=max_iter)
    ci = progressive_ci(fit, args.level)
    out["scheme"] = {"type": "progressive", "n": s.n, "m": s.m, "R": R, "rule": args.rule,
                     "times": s.t}
    out["fit"] = {"alpha": fit.alpha, "beta": fit.beta, "se_alpha": fit.se_alpha, "se_beta": fit.se_beta,
                  "loglik": fit.loglik, "iterations": fit.iterations, "strategy": strategy,
                  "se_method": args.se, "ci": {"level": args.level, "alpha": ci[0], "beta": ci[1]}}
    return out


def _alpha_factor(s: Type2Sample) -> float:
    return 1.0 / type2_bias_factor(s.n, s.r)


# ---------------------------------------------------------------------------
# output

def _table(report: dict) -> str:
    lines = []

    def walk(prefix, v):
        if isinstance(v, dict):
            for k, x in v.items():
                walk(f"{prefix}.{k}" if prefix else str(k), x)
        elif isinstance(v, list) and v and all(isinstance(x, dict) for x in v):
            for i, x in enumerate(v):
                walk(f"{prefix}[{i}]", x)
        else:
            lines.append((prefix, json.dumps(v) if isinstance(v, list) else str(v)))

    walk("", report)
    width = max(len(k) for k, _ in lines)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bsdist", description="Birnbaum-Saunders fitting and simulation.")
    ap.add_argument("--version", action="version", version=f"bsdist {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        if data:
            p.add_argument("--data", choices=sorted(DATASETS) + ["bearings", "bone"], help="embedded dataset")
            p.add_argument("--file", help="CSV file, one column per coordinate, optional header")
            p.add_argument("--scale", type=float, help="multiply the data by this factor")
        p.add_argument("--level", type=float, default=0.95)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="write the report (or samples) to this path")
        p.add_argument("--table", action="store_true", help="aligned text instead of JSON")

    p = sub.add_parser("fit", help="point estimates and intervals")
    common(p)
    p.add_argument("--method", default="ml", help="ml, mm, uml, umm, moment, new, fl1-fl4, jackknife, obre")

    p = sub.add_parser("gof", help="Kolmogorov-Smirnov goodness of fit")
    common(p)
    p.add_argument("--method", default="ml")

    p = sub.add_parser("sample", help="draw variates to CSV")
    common(p, data=False)
    p.add_argument("--dist", required=True, help="e.g. bs:alpha=0.5,beta=2 or bvbs:alpha1=..,rho=..")
    p.add_argument("--n", type=int, default=100)

    p = sub.add_parser("mc", help="Monte Carlo experiments")
    common(p, data=False)
    p.add_argument("experiment", choices=["bias", "coverage", "robust"])
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--method", default="uml", help="interval method for coverage")
    p.add_argument("--contamination", type=float, default=0.05)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("censor-fit", help="Type-II or progressively censored ML")
    common(p)
    p.add_argument("--type2", help="r=K: observe the K smallest lifetimes")
    p.add_argument("--progressive", help="R=R1,R2,...: removals at each failure")
    p.add_argument("--rule", choices=["largest", "random"], default="largest",
                   help="which survivors are withdrawn")
    p.add_argument("--strategy", default="direct", help="direct, root (Type-II) or em (progressive)")
    p.add_argument("--se", choices=["observed", "complete"], default="observed")
    return ap


_COMMANDS = {"fit": cmd_fit, "gof": cmd_gof, "sample": cmd_sample, "mc": cmd_mc, "censor-fit": cmd_censor_fit}


def run(argv=None) -> tuple[int, dict]:
    """Execute a command; returns the exit code and the report."""
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    report = {"schema": SCHEMA, "version": __version__, "command": argv, "seed": args.seed}
    try:
        if not 0 < args.level < 1:
            raise InputError("--level must lie in (0, 1)")
        report.update(_COMMANDS[args.command](args))
        code = 0
    except InputError as exc:
        report["error"] = {"kind": "input", "message": str(exc)}
        code = 2
    except (NonexistenceError, ConvergenceError) as exc:
        report["error"] = {"kind": "estimator", "message": str(exc)}
        code = 1
    except DomainError as exc:
        report["error"] = {"kind": "input", "message": str(exc)}
        code = 2
    report["wall_time_s"] = time.perf_counter() - start
    return code, _round(report)


def main(argv=None) -> int:
    code, report = run(argv)
    argv = list(sys.argv[1:] if argv is None else argv)
    args, _ = build_parser().parse_known_args(argv)
    text = _table(report) if args.table else json.dumps(report, indent=2, sort_keys=True)
    dest = getattr(args, "out", None)
    if dest and args.command != "sample" and code == 0:
        with open(dest, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if code:
        print(f"bsdist: {report['error']['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
