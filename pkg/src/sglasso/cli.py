"""Command-line interface: ``sglasso gen``, ``sglasso solve``, ``sglasso bench``.

Exit codes are 0 on success, 1 when a solver stops without reaching the
tolerance (its report is still written) and 2 on usage errors.
"""
import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .admm import AdmmParams, admm_solve
from .alm import AlmParams, alm_solve
from .data_io import (ParseError, contiguous_groups, eta_p, gen_synthetic, read_groups,
                      read_libsvm, read_report, write_groups, write_libsvm, write_report,
                      write_vector, file_digest, to_jsonable)
from .model import STRATEGIES, SglProblem, lambda_max, lambdas_from_strategy
from .protocol import (CSV_FIELDS, bench_cell, eta_p_rows, gamma_scan, performance_profile,
                       profile_to_rows, profile_value)

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_USAGE = 0, 1, 2

logger = logging.getLogger("sglasso")


class UsageError(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not math.isfinite(v) or v < 0:
        raise argparse.ArgumentTypeError(f"expected a finite nonnegative number, got {text}")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="sglasso", description="Sparse group Lasso solvers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic instance")
    g.add_argument("--m", type=_positive_int, default=300)
    g.add_argument("--n", type=_positive_int, default=3000)
    g.add_argument("--g", type=_positive_int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--noise-std", type=_nonneg_float, default=1.0)
    g.add_argument("--out-prefix", default="",
                   help="prepended to data.libsvm, groups.txt and truth.txt")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("--data", required=True, help="LIBSVM file")
    grp = s.add_mutually_exclusive_group(required=True)
    grp.add_argument("--groups", help="group file, one id per feature")
    grp.add_argument("--avg-group-size", type=_positive_int,
                     help="random contiguous groups of about this size")
    s.add_argument("--solver", choices=("ssnal", "admm"), default="ssnal")
    s.add_argument("--strategy", choices=STRATEGIES)
    s.add_argument("--gamma", type=_nonneg_float)
    s.add_argument("--lambda1", type=_nonneg_float)
    s.add_argument("--lambda2", type=_nonneg_float)
    s.add_argument("--weights", choices=("sqrt", "one"), default="sqrt")
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--max-outer", type=_positive_int,
                   help="outer iteration cap (ssnal) or iteration cap (admm)")
    s.add_argument("--seed", type=int, default=0, help="seed for auto-grouping")
    s.add_argument("--out", default="report.json")
    s.add_argument("--trace", help="write per-iteration records as JSON lines")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("scan", help="find gamma giving a target nnz")
    c.add_argument("--data", required=True)
    grp = c.add_mutually_exclusive_group(required=True)
    grp.add_argument("--groups")
    grp.add_argument("--avg-group-size", type=_positive_int)
    c.add_argument("--weights", choices=("sqrt", "one"), default="sqrt")
    c.add_argument("--strategy", choices=STRATEGIES, default="s1")
    c.add_argument("--gammas", type=float, nargs="+",
                   default=[0.3, 0.25, 0.2, 0.17, 0.15, 0.13, 0.12, 0.1, 0.08, 0.06, 0.05])
    c.add_argument("--nnz-range", type=int, nargs=2, default=(80, 150))
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_scan)

    b = sub.add_parser("bench", help="run a benchmark grid or compare two reports")
    mode = b.add_mutually_exclusive_group(required=True)
    mode.add_argument("--config", help="JSON grid description")
    mode.add_argument("--compare", nargs=2, metavar=("REFERENCE", "OTHER"),
                      help="print eta_P of OTHER against REFERENCE")
    b.add_argument("--out", default="bench.csv")
    b.add_argument("--profile", help="profile points CSV (default: <out stem>_profile.csv)")
    b.add_argument("--jobs", type=_positive_int, default=1)
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sglasso {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, FileNotFoundError) as exc:
        print(f"sglasso {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _prefixed(prefix, name):
    p = Path(f"{prefix}{name}")
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def cmd_gen(args):
    if args.g > args.n:
        raise UsageError("--g must not exceed --n")
    A, b, partition, x_true = gen_synthetic(args.m, args.n, args.g, seed=args.seed,
                                            noise_std=args.noise_std)
    write_libsvm(_prefixed(args.out_prefix, "data.libsvm"), A, b)
    write_groups(_prefixed(args.out_prefix, "groups.txt"), partition)
    write_vector(_prefixed(args.out_prefix, "truth.txt"), x_true)
    return EXIT_OK


def _load_instance(args):
    A, b = read_libsvm(args.data)
    if args.groups:
        partition = read_groups(args.groups, A.n, args.weights)
    else:
        if args.avg_group_size > A.n:
            raise UsageError("--avg-group-size exceeds the number of features")
        partition = contiguous_groups(A.n, args.avg_group_size, seed=args.seed,
                                      weights=args.weights)
    return A, b, partition


def resolve_lambdas(args, lam_max):
    """Return ``(lambda1, lambda2, strategy, gamma)`` from the solve flags."""
    explicit = args.lambda1 is not None or args.lambda2 is not None
    by_strategy = args.strategy is not None or args.gamma is not None
    if explicit and by_strategy:
        raise UsageError("--lambda1/--lambda2 conflict with --strategy/--gamma")
    if explicit:
        if args.lambda1 is None or args.lambda2 is None:
            raise UsageError("both --lambda1 and --lambda2 are required")
        l1, l2 = args.lambda1, args.lambda2
    elif by_strategy:
        if args.strategy is None or args.gamma is None:
            raise UsageError("--strategy and --gamma must be given together")
        l1, l2 = lambdas_from_strategy(args.strategy, args.gamma, lam_max)
    else:
        raise UsageError("give --strategy with --gamma, or --lambda1 with --lambda2")
    if l1 + l2 <= 0:
        raise UsageError("lambda1 + lambda2 must be positive")
    return float(l1), float(l2), args.strategy, args.gamma


def cmd_solve(args):
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    A, b, partition = _load_instance(args)
    lam_max = lambda_max(A, b)
    l1, l2, strategy, gamma = resolve_lambdas(args, lam_max)
    prob = SglProblem(A, b, l1, l2, partition)

    trace = open(args.trace, "w") if args.trace else None

    def callback(record, _point):
        trace.write(json.dumps(to_jsonable(record), sort_keys=True) + "\n")

    cb = callback if trace else None
    try:
        t0 = time.perf_counter()
        if args.solver == "ssnal":
            params = AlmParams(tol=args.tol, **({"max_outer": args.max_outer} if args.max_outer else {}))
            _, report = alm_solve(prob, params, callback=cb)
        else:
            params = AdmmParams(tol=args.tol, **({"max_iters": args.max_outer} if args.max_outer else {}))
            _, report = admm_solve(prob, params, callback=cb)
        report.wall_seconds = time.perf_counter() - t0
    finally:
        if trace:
            trace.close()

    report.config = {
        **report.config,
        # names and digests rather than paths keep reports comparable across directories
        "data": Path(args.data).name,
        "data_sha256": file_digest(args.data),
        "groups": Path(args.groups).name if args.groups else None,
        "groups_sha256": file_digest(args.groups) if args.groups else None,
        "avg_group_size": args.avg_group_size,
        "weights": args.weights,
        "strategy": strategy,
        "gamma": gamma,
        "lambda1": l1,
        "lambda2": l2,
        "lambda_max": lam_max,
        "seed": args.seed,
        "m": prob.m,
        "n": prob.n,
        "g": partition.g,
    }
    write_report(report, args.out)
    status = "converged" if report.converged else "NOT converged"
    print(f"{args.solver}: {status}; pobj={report.pobj:.10g} eta={report.eta:.2e} "
          f"nnz={report.nnz} outer={report.outer_iters} inner={report.inner_iters} "
          f"time={report.wall_seconds:.3f}s")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_scan(args):
    A, b, partition = _load_instance(args)
    res = gamma_scan(A, b, partition, args.gammas, tuple(args.nnz_range), args.strategy)
    for gamma, nnz in res.history:
        print(f"gamma={gamma:g} nnz={nnz}")
    lo, hi = args.nnz_range
    hit = lo <= res.nnz <= hi
    print(json.dumps({"gamma": res.gamma, "lambda1": res.lambda1, "lambda2": res.lambda2,
                      "nnz": res.nnz, "in_range": hit}))
    return EXIT_OK if hit else EXIT_NOT_CONVERGED


def _instance_from_spec(spec, weights):
    if "synthetic" in spec:
        syn = spec["synthetic"]
        A, b, partition, _ = gen_synthetic(syn["m"], syn["n"], syn["g"],
                                           seed=syn.get("seed", 0),
                                           noise_std=syn.get("noise_std", 1.0))
        if weights != "sqrt":
            partition = type(partition)(partition.groups, weights)
        return A, b, partition
    A, b = read_libsvm(spec["data"])
    if "groups" in spec:
        return A, b, read_groups(spec["groups"], A.n, weights)
    return A, b, contiguous_groups(A.n, spec["avg_group_size"], seed=spec.get("seed", 0),
                                   weights=weights)


def _run_instance(spec, solvers, strategies, gammas, tol, weights):
    name = spec["name"]
    try:
        A, b, partition = _instance_from_spec(spec, weights)
    except Exception as exc:  # noqa: BLE001 - record and continue
        return [{"instance": name, "solver": s, "strategy": st, "gamma": gm, "pobj": math.nan,
                 "eta_s": math.nan, "nnz": 0, "outer": 0, "inner": 0, "seconds": math.nan,
                 "converged": False, "error": str(exc)}
                for st in strategies for gm in gammas for s in solvers]
    return [bench_cell(name, A, b, partition, s, st, gm, tol)
            for st in strategies for gm in gammas for s in solvers]


def cmd_bench(args):
    if args.compare:
        ref, other = (read_report(p) for p in args.compare)
        print(json.dumps({"eta_p": eta_p(other, ref), "pobj_reference": ref.pobj,
                          "pobj_other": other.pobj}))
        return EXIT_OK

    try:
        cfg = json.loads(Path(args.config).read_text())
        instances = cfg["instances"]
        solvers = cfg.get("solvers", ["ssnal", "admm"])
        strategies = cfg.get("strategies", ["s1"])
        gammas = cfg.get("gammas", [0.1])
        tol = float(cfg.get("tol", 1e-6))
        weights = cfg.get("weights", "sqrt")
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad config: {exc}") from None
    names = [spec.get("name") for spec in instances]
    if None in names or len(set(names)) != len(names):
        raise UsageError("every instance needs a unique name")

    jobs = [(spec, solvers, strategies, gammas, tol, weights) for spec in instances]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            chunks = list(pool.map(_run_instance, *zip(*jobs)))
    else:
        chunks = [_run_instance(*job) for job in jobs]
    rows = [row for chunk in chunks for row in chunk]

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)

    profile = performance_profile(rows, solvers)
    prof_path = Path(args.profile) if args.profile else out.with_name(out.stem + "_profile.csv")
    with open(prof_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=("solver", "ratio", "fraction"))
        writer.writeheader()
        writer.writerows(profile_to_rows(profile))

    for row in rows:
        if "error" in row:
            print(f"cell {row['instance']}/{row['solver']}/{row['strategy']}/{row['gamma']} "
                  f"failed: {row['error']}", file=sys.stderr)
    for s in solvers:
        print(f"{s}: fastest on {profile_value(profile[s], 1.0):.0%} of cells, "
              f"solved {profile_value(profile[s], math.inf):.0%}")
    for r in eta_p_rows(rows):
        print(f"eta_P {r['instance']}/{r['strategy']}/{r['gamma']} {r['solver']}: {r['eta_p']:.2e}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
