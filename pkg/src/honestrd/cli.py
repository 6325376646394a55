"""Command line interface.

Subcommands: ``analyze``, ``lower-bound``, ``efficiency`` and ``simulate``.
Input CSV files have a header with columns ``x``, ``y`` and optionally
``sigma2``. Floats are written in shortest round-trip form.

Exit status: 0 success, 2 usage error, 3 malformed input, 4 argument
outside the domain of an operation, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .bias import nn_residual_variance
from .ci import analyze, parse_variance_mode
from .design import Design, PerformanceCriterion, SmoothnessClass, validate_design
from .exceptions import DomainError, HonestRDError, NumericError, ParseError
from .lower_bound import curvature_stat, default_scheme, lower_ci_C
from .modulus import (asymptotic_efficiencies, flci_adaptation_efficiency,
                      onesided_adaptation_efficiency)
from .simulation import McDesign, McMethod, default_workers, run_mc

EXIT_OK, EXIT_PARSE, EXIT_DOMAIN, EXIT_NUMERIC = 0, 3, 4, 5


def read_csv(path, cutoff=0.0):
    """Read ``x,y[,sigma2]`` from ``path`` (``-`` for stdin) into a Design."""
    try:
        fh = sys.stdin if path == "-" else open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot open {path}: {e.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        for col in ("x", "y"):
            if col not in header:
                raise ParseError(f"{path}: missing column {col!r} in header")
        idx = {c: header.index(c) for c in ("x", "y", "sigma2") if c in header}
        cols = {c: [] for c in idx}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not v.strip() for v in row):
                continue
            for c, i in idx.items():
                try:
                    cols[c].append(float(row[i]))
                except (ValueError, IndexError):
                    raise ParseError(
                        f"{path}, line {lineno}: bad value for column {c!r}") from None
    x = np.asarray(cols["x"]) - cutoff
    s2 = np.asarray(cols["sigma2"]) if "sigma2" in cols else None
    return validate_design(Design.from_arrays(x, cols["y"], s2))


def parse_grid(spec, name="grid"):
    """``lo:hi:k`` -> ``k`` linearly spaced points."""
    try:
        lo, hi, k = spec.split(":")
        lo, hi, k = float(lo), float(hi), int(k)
    except ValueError:
        raise ParseError(f"{name} must look like lo:hi:k, got {spec!r}") from None
    if k < 2 or lo > hi:
        raise DomainError(f"{name} needs lo <= hi and k >= 2, got {spec!r}")
    return np.linspace(lo, hi, k)


def _num(v):
    """JSON-safe float: infinities become strings."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return None
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _num(obj)


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def emit(rows, fmt, out):
    """Write a list of dicts as JSON (single object if one row) or CSV."""
    if fmt == "json":
        payload = rows[0] if len(rows) == 1 else rows
        text = json.dumps(_clean(payload), indent=2) + "\n"
    else:
        flat = [_flatten(_clean(r)) for r in rows]
        buf = io.StringIO()
        fields = list(dict.fromkeys(k for r in flat for k in r))
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in flat:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        text = buf.getvalue()
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _echo(args, keys):
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def cmd_analyze(args):
    d = read_csv(args.input, args.cutoff)
    if args.variance == "known" and d.sigma2_kind == "assumed":
        raise DomainError("--variance known needs a sigma2 column in the input")
    crit = PerformanceCriterion(args.criterion, args.alpha, args.beta)
    Cs = parse_grid(args.C_grid, "--C-grid") if args.C_grid else [args.C]
    fixed = None
    if args.h is not None:
        fixed = (args.h, args.h)
    rows = []
    echo = _echo(args, ["input", "cls", "p", "C", "C_grid", "alpha", "beta",
                        "criterion", "weights", "variance", "cutoff", "h"])
    for C in Cs:
        cls = SmoothnessClass(args.cls, args.p, float(C))
        rep = analyze(d, cls, crit, family=args.weights, variance_mode=args.variance,
                      fixed_h=fixed)
        row = rep.to_dict(dict(echo, C=float(C)))
        rows.append(row)
    emit(rows, args.format, args.out)
    return rows


def cmd_lower_bound(args):
    d = read_csv(args.input, args.cutoff)
    kind, J = parse_variance_mode(args.variance)
    if kind == "known":
        if d.sigma2_kind == "assumed":
            raise DomainError("--variance known needs a sigma2 column in the input")
        s2 = d.sigma2
    elif kind == "nn":
        s2 = nn_residual_variance(d, J)
    else:
        raise DomainError("lower-bound supports --variance known or nn:J")
    rows = []
    for side in ("+", "-"):
        scheme = default_scheme(d, side, args.obs_per_interval)
        st = curvature_stat(d, scheme, s2)
        rows.append({
            "side": side, "Z": st.Z, "tau": st.tau, "lambda": st.lam,
            "counts": list(st.counts),
            "mu_hat_0.5": lower_ci_C(st, 0.5),
            f"mu_hat_{args.alpha:g}": lower_ci_C(st, args.alpha),
        })
    emit(rows, args.format, args.out)
    return rows


def cmd_efficiency(args):
    rows = []
    for r in parse_grid(args.r_grid, "--r-grid"):
        one, two = asymptotic_efficiencies(float(r), args.alpha)
        rows.append({"r": float(r), "onesided_eff": one, "flci_eff": two})
    if args.input:
        d = read_csv(args.input, args.cutoff)
        cls = SmoothnessClass("taylor", args.p, args.C)
        rows.append({"r": "finite_sample",
                     "onesided_eff": onesided_adaptation_efficiency(
                         d, cls, args.alpha, args.beta),
                     "flci_eff": flci_adaptation_efficiency(d, cls, args.alpha)})
    emit(rows, args.format, args.out)
    return rows


def cmd_simulate(args):
    design = McDesign(design_id=args.design, C=args.C, sigma2=args.sigma2, n=args.n,
                      reps=args.reps, seed=args.seed)
    method = McMethod(family=args.cls, C=args.method_C if args.method_C else args.C,
                      p=args.p, weights=args.weights, criterion=args.criterion,
                      alpha=args.alpha, variance=args.variance)
    workers = args.workers if args.workers else default_workers()
    res = run_mc(design, method, workers=workers)
    row = {"design": args.design, "C": args.C, "method_C": method.C,
           "sigma2": args.sigma2, "n": args.n, "seed": args.seed}
    row.update(res.row())
    emit([row], args.format, args.out)
    return [row]


def _common(p, data=True):
    if data:
        p.add_argument("--input", "-i", required=True, help="CSV with x,y[,sigma2]")
        p.add_argument("--cutoff", type=float, default=0.0,
                       help="subtracted from x before analysis")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", "-o", default=None)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="honestrd",
        description="Honest confidence intervals for regression discontinuity")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="estimate and confidence intervals")
    _common(a)
    a.add_argument("--class", dest="cls", choices=("taylor", "holder"), default="taylor")
    a.add_argument("--p", type=int, default=2)
    a.add_argument("--C", type=float, default=1.0)
    a.add_argument("--C-grid", dest="C_grid", default=None, metavar="LO:HI:K")
    a.add_argument("--beta", type=float, default=0.8)
    a.add_argument("--criterion", choices=("flci", "excess", "mse"), default="flci")
    a.add_argument("--weights", default="lp:triangular",
                   help="lp:triangular | lp:uniform | lp:epanechnikov | optimal")
    a.add_argument("--variance", default="nn:3", help="known | nn:J | ehw")
    a.add_argument("--h", type=float, default=None,
                   help="fixed bandwidth on both sides instead of optimizing")
    a.set_defaults(func=cmd_analyze)

    lb = sub.add_parser("lower-bound", help="data-driven lower bound on C")
    _common(lb)
    lb.add_argument("--obs-per-interval", type=int, default=100)
    lb.add_argument("--variance", default="nn:3", help="known | nn:J")
    lb.set_defaults(func=cmd_lower_bound)

    e = sub.add_parser("efficiency", help="efficiency bounds")
    _common(e, data=False)
    e.add_argument("--input", "-i", default=None,
                   help="optional design CSV for finite-sample bounds")
    e.add_argument("--cutoff", type=float, default=0.0)
    e.add_argument("--r-grid", default="0.5:1.0:26", metavar="LO:HI:K")
    e.add_argument("--beta", type=float, default=0.8)
    e.add_argument("--p", type=int, default=2)
    e.add_argument("--C", type=float, default=1.0)
    e.set_defaults(func=cmd_efficiency)

    s = sub.add_parser("simulate", help="Monte Carlo coverage of fixed-length CIs")
    _common(s, data=False)
    s.add_argument("--design", type=int, choices=(1, 2, 3, 4), default=1)
    s.add_argument("--C", type=float, default=1.0, help="scale of the true function")
    s.add_argument("--method-C", dest="method_C", type=float, default=None,
                   help="C the CI is calibrated to (default: --C)")
    s.add_argument("--class", dest="cls", choices=("taylor", "holder"), default="holder")
    s.add_argument("--p", type=int, default=2)
    s.add_argument("--weights", default="lp:triangular")
    s.add_argument("--criterion", choices=("flci", "excess", "mse"), default="flci")
    s.add_argument("--variance", default="nn:3")
    s.add_argument("--sigma2", type=float, default=0.1295)
    s.add_argument("--n", type=int, default=500)
    s.add_argument("--reps", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_simulate)
    return ap


def _provenance(e):
    """Module of the innermost library frame that raised ``e``."""
    tb, mod = e.__traceback__, "honestrd"
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("honestrd"):
            mod = name
        tb = tb.tb_next
    return mod


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args.func(args)
    except ParseError as e:
        print(f"honestrd: parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except DomainError as e:
        print(f"honestrd: {type(e).__name__} in {_provenance(e)}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericError as e:
        print(f"honestrd: {type(e).__name__} in {_provenance(e)}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except HonestRDError as e:  # pragma: no cover - all errors derive from the above
        print(f"honestrd: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
