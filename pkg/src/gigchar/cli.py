"""Command-line entry point ``gig``.

Every command prints one JSON document on stdout.  Exit codes: 0 success,
2 invalid input or domain error, 3 a characterization probe failed, 64
unknown command.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__, core, lab, special, stein
from .errors import ConvergenceError, GigError, SampleSizeError
from .estimation import fit_gig
from .sampling import SampleBatch, SeedPlan, chain_iterates, sample_gig

SCHEMA_VERSION = 1
DEFAULT_SEED = 20160517
EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_DOMAIN = 2
EXIT_CHARACTERIZATION = 3
EXIT_USAGE = 64

PROBES = ("matsumoto-yor", "regression", "chou-huang", "pusz", "entropy",
          "mudholkar-tian", "khatri", "martingale", "chain")


# --------------------------------------------------------------------------
# serialization


def fmt_float(x):
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def fmt_csv(x):
    return fmt_float(x).strip('"')


def dumps(obj, indent=0, compact=False):
    """JSON with 17 significant digits and non-finite numbers as strings."""
    pad = "" if compact else "  " * (indent + 1)
    end = "" if compact else "  " * indent
    nl = "" if compact else "\n"
    colon = ":" if compact else ": "
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}{colon}{dumps(v, indent + 1, compact)}"
                 for k, v in obj.items()]
        return "{" + nl + ("," + nl).join(items) + nl + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in seq):
            return "[" + ("," if compact else ", ").join(dumps(v) for v in seq) + "]"
        items = [pad + dumps(v, indent + 1, compact) for v in seq]
        return "[" + nl + ("," + nl).join(items) + nl + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def default_seed():
    raw = os.environ.get("GIG_DEFAULT_SEED")
    return DEFAULT_SEED if raw is None or raw == "" else int(raw)


def envelope(command, result, params=None, seed_plan=None):
    doc = {"schema_version": SCHEMA_VERSION, "library_version": __version__, "command": command}
    if params is not None:
        doc["params"] = params
    if seed_plan is not None:
        doc["seed_lineage"] = seed_plan.as_dict()
    doc["result"] = result
    return doc


def read_values(path):
    """One positive value per line; blank lines and a leading JSON header are skipped."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            text = line.strip()
            if not text or (i == 0 and text.startswith("{")):
                continue
            values.append(float(text))
    if not values:
        raise SampleSizeError(f"{path} contains no values")
    arr = np.array(values)
    if np.any(~(arr > 0)):
        raise core.GigDomainError("input values must be positive")
    return arr


def write_lines(path, values):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(fmt_float(v) + "\n" for v in values)


# --------------------------------------------------------------------------
# commands


def _params(args):
    return core.GigParams(args.p, args.a, args.b)


def cmd_bessel(args):
    if args.quantity == "value":
        bv = special.bessel_k(args.order, args.z)
        result = {"value": bv.value, "method": "amos", "est_error": bv.estimated_error}
    elif args.quantity == "log":
        result = {"value": special.log_bessel_k(args.order, args.z), "method": "amos-log",
                  "est_error": None}
    elif args.quantity == "ratio":
        result = {"value": special.bessel_k_ratio(args.order, args.z), "method": "amos-ratio",
                  "est_error": None}
    elif args.quantity == "dlog":
        result = {"value": special.bessel_k_dlog_dorder(args.order, args.z),
                  "method": "richardson-central-difference", "est_error": None}
    else:
        value, err = special.bessel_k_quadrature(args.order, args.z)
        result = {"value": value, "method": "quadrature", "est_error": err}
    return envelope("bessel", result, {"order": args.order, "z": args.z}), EXIT_OK


def cmd_eval(args):
    params = _params(args)
    x = args.x
    if args.what == "pdf":
        value = core.density(params, x)
        est = 8 * np.finfo(float).eps * value
        method = "closed-form"
    elif args.what == "logpdf":
        value = core.log_density(params, x)
        est = 8 * np.finfo(float).eps * max(1.0, abs(value))
        method = "closed-form"
    elif args.what == "cdf":
        value = core.cdf(params, x)
        est = core.cdf_normalization_error(params) if params.branch == core.FULL else None
        method = "log-scale-gauss-legendre" if params.branch == core.FULL else "incomplete-gamma"
    else:
        value = core.sf(params, x)
        est = core.cdf_normalization_error(params) if params.branch == core.FULL else None
        method = "log-scale-gauss-legendre" if params.branch == core.FULL else "incomplete-gamma"
    result = {"x": x, "quantity": args.what, "value": value, "method": method, "est_error": est}
    return envelope("eval", result, params.as_dict()), EXIT_OK


def cmd_quantile(args):
    params = _params(args)
    value = core.quantile(params, args.q)
    residual = abs(float(core.cdf(params, value)) - args.q)
    result = {"q": args.q, "value": value, "method": "newton-on-cdf", "est_error": residual}
    return envelope("quantile", result, params.as_dict()), EXIT_OK


def cmd_moment(args):
    params = _params(args)
    value = core.moment(params, args.r)
    result = {"r": args.r, "value": value, "method": "bessel-ratio",
              "est_error": 16 * np.finfo(float).eps * abs(value)}
    return envelope("moment", result, params.as_dict()), EXIT_OK


def cmd_entropy(args):
    params = _params(args)
    value = core.entropy(params)
    result = {"value": value, "method": "closed-form",
              "est_error": 1e-9 * max(1.0, abs(value))}
    return envelope("entropy", result, params.as_dict()), EXIT_OK


def cmd_sample(args):
    plan = SeedPlan(args.seed)
    if args.chain:
        batch = chain_iterates(args.p, args.a, args.b, args.steps, args.n, plan,
                               init=args.init, workers=args.workers)
        params = {"p": args.p, "a": args.a, "b": args.b, "steps": args.steps, "init": args.init,
                  "target": core.GigParams(-args.p, args.a, args.b).as_dict()}
    else:
        batch = sample_gig(_params(args), args.n, plan, workers=args.workers)
        params = _params(args).as_dict()
    header = envelope("sample", {"n": len(batch), "tag": batch.params_tag,
                                 "degenerate": batch.degenerate}, params, plan)
    if args.output:
        write_lines(args.output, batch.values)
        with open(args.output + ".json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps(header) + "\n")
        return header, EXIT_OK
    lines = [dumps(header, compact=True)] + [fmt_float(v) for v in batch.values]
    return "\n".join(lines), EXIT_OK


def cmd_fit(args):
    values = read_values(args.input)
    fit = fit_gig(values, mode=args.mode, p=args.p, standard_errors=args.standard_errors)
    return envelope("fit", fit.as_dict(), {"input": os.path.basename(args.input), "n": values.size}), EXIT_OK


def _law(args):
    if args.data_p is None:
        return None
    return core.GigParams(args.data_p, args.data_a, args.data_b)


def cmd_verify(args):
    plan = SeedPlan(args.seed)
    probe = args.probe
    p, a, b, n = args.p, args.a, args.b, args.n
    threshold = args.threshold
    if probe == "matsumoto-yor":
        report = lab.matsumoto_yor_probe(p, a, b, n, plan, args.permutations, args.alpha,
                                         args.workers)
    elif probe in ("regression", "chou-huang"):
        pairs = lab.matsumoto_yor_pairs(p, a, b, n, plan, workers=args.workers)
        if probe == "regression":
            target = args.target
            if target is None and args.transform == "V":
                target = 2.0 * p / b
            report = lab.regression_probe(pairs, args.transform, args.bins, target, threshold,
                                          known_p=p)
        else:
            report = lab.chou_huang_probe(pairs, args.r, args.bins, threshold)
    elif probe == "pusz":
        p_coef, q_coef, const = lab.pusz_coefficients(p, b, args.delta, n)
        samples = lab.simulate_pusz_samples(p, a, b, n, args.replicates, plan, args.delta,
                                            args.reading, args.workers)
        report = lab.pusz_probe(samples, p_coef, q_coef, args.bins, threshold, const)
    elif probe == "entropy":
        params = core.GigParams(p, a, b)
        report = lab.entropy_constraint_check(params, sample_gig(params, n, plan, args.workers),
                                              threshold)
    elif probe == "mudholkar-tian":
        law = _law(args) or core.GigParams(p, a, b)
        report = lab.mudholkar_tian_check(sample_gig(law, n, plan, args.workers), a, b,
                                          threshold, args.entropy_tolerance)
    elif probe == "khatri":
        report = lab.khatri_probe(args.n_per_sample, n, core.GigParams(p, a, b), plan,
                                  args.permutations, args.alpha, args.workers)
    elif probe == "martingale":
        report = lab.martingale_probe(b, a, args.index, n, args.bins, plan, _law(args),
                                      threshold, args.literal, args.workers)
    else:
        report = lab.chain_probe(p, a, b, args.steps, n, plan, args.init, workers=args.workers)
    body = report.as_dict()
    body.pop("seed_plan")
    if args.bin_csv and report.bin_table:
        cols = list(report.bin_table[0])
        with open(args.bin_csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(cols) + "\n")
            for row in report.bin_table:
                fh.write(",".join(fmt_csv(row[c]) for c in cols) + "\n")
    params = {"p": p, "a": a, "b": b, "n": n}
    code = EXIT_CHARACTERIZATION if report.verdict == lab.FAIL else EXIT_OK
    return envelope("verify " + probe, body, params, plan), code


def cmd_stein_gof(args):
    params = _params(args)
    values = read_values(args.input)
    plan = SeedPlan(args.seed)
    result = stein.stein_gof(values, params, n_bootstrap=args.bootstrap, plan=plan,
                             workers=args.workers)
    return envelope("stein-gof", result.as_dict(), params.as_dict(), plan), EXIT_OK


def cmd_stein_rate(args):
    plan = SeedPlan(args.seed)
    steps = [int(s) for s in args.steps.split(",") if s.strip()]
    rows = stein.chain_convergence_experiment(args.p, args.a, args.b, steps, args.n, plan,
                                              init=args.init, workers=args.workers)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("m,discrepancy\n")
            fh.writelines(f"{m},{fmt_csv(d)}\n" for m, d in rows)
    result = {"table": [{"m": m, "discrepancy": d} for m, d in rows],
              "decay_slope": stein.decay_slope(rows)}
    params = {"p": args.p, "a": args.a, "b": args.b, "n": args.n, "init": args.init,
              "target": core.GigParams(-args.p, args.a, args.b).as_dict()}
    return envelope("stein-rate", result, params, plan), EXIT_OK


# --------------------------------------------------------------------------
# parser


def _add_params(sp, required=True):
    sp.add_argument("--p", type=float, required=required)
    sp.add_argument("--a", type=float, required=required)
    sp.add_argument("--b", type=float, required=required)


def _add_run(sp):
    sp.add_argument("--seed", type=int, default=None,
                    help="master seed (default: $GIG_DEFAULT_SEED or %d)" % DEFAULT_SEED)
    sp.add_argument("--workers", type=int, default=1,
                    help="threads for replicate generation; output does not depend on it")


def build_parser():
    parser = argparse.ArgumentParser(prog="gig", description="GIG distribution workbench")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("bessel", help="K_p(z) and related quantities")
    sp.add_argument("--order", type=float, required=True)
    sp.add_argument("--z", "--arg", dest="z", type=float, required=True)
    group = sp.add_mutually_exclusive_group()
    for flag in ("log", "ratio", "dlog", "oracle"):
        group.add_argument("--" + flag, dest="quantity", action="store_const", const=flag)
    group.add_argument("--dlog-dorder", dest="quantity", action="store_const", const="dlog")
    sp.set_defaults(func=cmd_bessel, quantity="value")

    sp = sub.add_parser("eval", help="density, log-density, cdf or survival function")
    _add_params(sp)
    sp.add_argument("--x", type=float, required=True)
    group = sp.add_mutually_exclusive_group()
    for flag in ("pdf", "logpdf", "cdf", "sf"):
        group.add_argument("--" + flag, dest="what", action="store_const", const=flag)
    sp.set_defaults(func=cmd_eval, what="pdf")

    sp = sub.add_parser("quantile", help="inverse cdf")
    _add_params(sp)
    sp.add_argument("--q", type=float, required=True)
    sp.set_defaults(func=cmd_quantile)

    sp = sub.add_parser("moment", help="E[X^r]")
    _add_params(sp)
    sp.add_argument("--r", type=float, required=True)
    sp.set_defaults(func=cmd_moment)

    sp = sub.add_parser("entropy", help="differential entropy")
    _add_params(sp)
    sp.set_defaults(func=cmd_entropy)

    sp = sub.add_parser("sample", help="draw a seeded sample")
    _add_params(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--chain", action="store_true",
                    help="run the continued-fraction chain (target GIG(-p, a, b))")
    sp.add_argument("--steps", type=int, default=50)
    sp.add_argument("--init", type=float, default=None)
    sp.add_argument("--output", default=None,
                    help="write header-free values here and metadata to OUTPUT.json")
    _add_run(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("fit", help="maximum likelihood fit")
    sp.add_argument("--input", required=True)
    sp.add_argument("--mode", choices=("full", "fixed-p", "ig"), default="full")
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--standard-errors", action="store_true")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("verify", help="run a characterization probe")
    sp.add_argument("probe", choices=PROBES)
    _add_params(sp)
    sp.add_argument("--n", type=int, required=True,
                    help="pairs, sample size, columns (pusz) or replicates (khatri, martingale)")
    sp.add_argument("--permutations", type=int, default=199)
    sp.add_argument("--alpha", type=float, default=0.01)
    sp.add_argument("--bins", type=int, default=None)
    sp.add_argument("--threshold", type=float, default=4.0)
    sp.add_argument("--transform", default="V")
    sp.add_argument("--target", type=float, default=None)
    sp.add_argument("--r", type=int, default=0)
    sp.add_argument("--delta", type=float, default=1.0)
    sp.add_argument("--reading", choices=("index_mu", "index_p_coef"), default="index_mu")
    sp.add_argument("--replicates", type=int, default=100_000)
    sp.add_argument("--n-per-sample", type=int, default=10)
    sp.add_argument("--index", type=int, default=3, help="martingale index n")
    sp.add_argument("--literal", action="store_true",
                    help="martingale centring 1/(2bn) instead of 1/(bn)")
    sp.add_argument("--entropy-tolerance", type=float, default=0.01)
    sp.add_argument("--data-p", type=float, default=None)
    sp.add_argument("--data-a", type=float, default=None)
    sp.add_argument("--data-b", type=float, default=None)
    sp.add_argument("--steps", type=int, default=50)
    sp.add_argument("--init", type=float, default=None)
    sp.add_argument("--bin-csv", default=None)
    _add_run(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("stein-gof", help="Stein discrepancy goodness-of-fit test")
    sp.add_argument("--input", required=True)
    _add_params(sp)
    sp.add_argument("--bootstrap", type=int, default=199)
    _add_run(sp)
    sp.set_defaults(func=cmd_stein_gof)

    sp = sub.add_parser("stein-rate", help="Stein discrepancy of the chain after m steps")
    _add_params(sp)
    sp.add_argument("--steps", default="1,2,5,10,20,50")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--init", type=float, default=None)
    sp.add_argument("--csv", default=None, help="write the (m, discrepancy) table here")
    _add_run(sp)
    sp.set_defaults(func=cmd_stein_rate)
    return parser


def run(argv=None, stdout=None):
    """Execute one command; returns the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    out = stdout or sys.stdout
    parser = build_parser()
    commands = set(parser._subparsers._group_actions[0].choices)
    first = next((a for a in argv if not a.startswith("-")), None)
    if first is None and not any(a in ("-h", "--help", "--version") for a in argv):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if first is not None and first not in commands:
        parser.print_usage(sys.stderr)
        print(f"gig: unknown command {first!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_DOMAIN
    if getattr(args, "seed", 0) is None:
        args.seed = default_seed()
    try:
        doc, code = args.func(args)
    except ConvergenceError as exc:
        print(dumps({"error": type(exc).__name__, "message": str(exc), "trace": exc.trace}),
              file=sys.stderr)
        return EXIT_RUNTIME
    except (GigError, ValueError, OSError) as exc:
        print(dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_DOMAIN
    if isinstance(doc, str):
        out.write(doc + "\n")
    elif doc is not None:
        out.write(dumps(doc) + "\n")
    return code


def main():
    sys.exit(run())
