"""Command-line interface: ``sepcert {solve,certify,verify-bound,bench,demo}``.

Exit codes: 0 success; 1 input error; 2 iterative solver did not converge;
3 exact joint concentration requested above the cutoff; 4 a certified row
violated the bound or a proof inequality.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .certificates import (KAPPA_CUTOFF, CutoffExceeded, SupportPair, certify,
                           select_supports)
from .frames import FRAME_SPEC_HELP, dct_frame, identity_frame, parse_frame_spec
from .harness import ConfigError, format_report, load_config, report_passes, run_experiment, row_certified
from .hilbert import (KNOWN_SPEC_HELP, make_partition, norm, parse_known_spec, read_signal,
                      signal_to_csv)
from .rng import XorShift64Star
from .solver import SolveOptions, solve_iterative, solve_lp_exact

log = logging.getLogger("sepcert")

EXIT_OK, EXIT_INPUT, EXIT_NOCONV, EXIT_CUTOFF, EXIT_VIOLATION = 0, 1, 2, 3, 4

DEFAULT_BENCH = {
    "cells": [
        {"name": "spikes_dct", "frames": {"phi1": "identity:n=7", "phi2": "dct:n=7"}, "n": 7,
         "sparsity": {"k1": 1, "k2": 1}, "mask": "all", "supports": "exact",
         "seeds": {"start": 0, "count": 10}},
        {"name": "haar_dct_block", "frames": {"phi1": "haar:n=8", "phi2": "dct:n=8"}, "n": 8,
         "sparsity": {"k1": 2, "k2": 1}, "mask": {"block": [2, 4]}, "supports": "exact",
         "seeds": {"start": 0, "count": 10}},
    ]
}


class InputError(Exception):
    pass


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _problem(args, signal_paths):
    try:
        f1 = parse_frame_spec(args.phi1)
        f2 = parse_frame_spec(args.phi2)
    except (ValueError, OSError) as exc:
        raise InputError(str(exc)) from exc
    signals = []
    for path in signal_paths:
        try:
            signals.append(read_signal(path))
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read signal {path}: {exc}") from exc
    n = signals[0].size
    if any(s.size != n for s in signals) or f1.n != n or f2.n != n:
        raise InputError(f"dimension mismatch: frames act on R^{f1.n}, R^{f2.n}; "
                         f"signals have lengths {[s.size for s in signals]}")
    try:
        p = parse_known_spec(args.known, n)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return f1, f2, p, signals


def cmd_solve(args):
    f1, f2, p, (x0,) = _problem(args, [args.signal])
    if args.method == "lp":
        res = solve_lp_exact(f1, f2, p, x0)
    else:
        opts = SolveOptions(max_iters=args.max_iters, tol=args.tol)
        res = solve_iterative(f1, f2, p, x0, opts)
        if args.trace:
            res.write_trace(args.trace)
    _emit(res.dumps() + "\n", args.out)
    if not res.converged:
        log.error("iterative solver did not converge in %d iterations", res.iterations)
        return EXIT_NOCONV
    return EXIT_OK


def _supports(args, f1, f2, x1, x2):
    if args.supports:
        try:
            with open(args.supports) as fh:
                s = SupportPair.from_json(json.load(fh))
            s.check(f1, f2)
        except (OSError, ValueError, KeyError, IndexError) as exc:
            raise InputError(f"bad supports file {args.supports}: {exc}") from exc
        return s
    try:
        k1, k2 = (int(t) for t in args.topk.split(","))
        return select_supports(f1, f2, x1, x2, k1, k2)
    except ValueError as exc:
        raise InputError(f"bad --topk {args.topk!r}: {exc}") from exc


def cmd_certify(args):
    f1, f2, p, (x1, x2) = _problem(args, [args.x1, args.x2])
    s = _supports(args, f1, f2, x1, x2)
    mode = "exact" if args.kappa == "exact" else "estimate"
    try:
        cert = certify(f1, f2, p, x1, x2, s, kappa=mode, samples=args.samples,
                       seed=args.seed, cutoff=args.cutoff)
    except CutoffExceeded as exc:
        log.error("%s", exc)
        return EXIT_CUTOFF
    out = cert.to_json()
    out["supports"] = s.to_json()
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return EXIT_OK


def _load_cells(path):
    try:
        return load_config(path)
    except (OSError, ConfigError) as exc:
        raise InputError(f"bad config {path}: {exc}") from exc


def cmd_verify_bound(args):
    cells = _load_cells(args.config)
    rows = run_experiment(cells, workers=args.workers)
    _emit(format_report(rows, args.format), args.out)
    certified = [r for r in rows if row_certified(r)]
    errors = [r for r in rows if r["status"] != "ok"]
    log.info("%d rows, %d certified, %d errored", len(rows), len(certified), len(errors))
    for r in errors:
        log.warning("%s: %s", r["instance_id"], r["message"])
    if not report_passes(rows):
        bad = [r["instance_id"] for r in certified
               if not (r["bound_holds"] and r["intermezzo_holds"] and r["part2_holds"])]
        log.error("certified rows failing checks: %s", ", ".join(bad))
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_bench(args):
    cells = _load_cells(args.config) if args.config else load_default_bench()
    rows = run_experiment(cells, workers=args.workers)
    _emit(format_report(rows, args.format), args.out)
    ok = [r for r in rows if r["status"] == "ok"]
    total_ms = sum(r["wall_ms"] for r in rows)
    sys.stderr.write(
        f"rows={len(rows)} ok={len(ok)} certified={sum(map(row_certified, rows))} "
        f"total_ms={total_ms:.1f} mean_ms={total_ms / max(len(rows), 1):.2f}\n")
    return EXIT_OK


def load_default_bench():
    from .harness import parse_config
    return parse_config(DEFAULT_BENCH)


# demo

def demo_instance(n, block, seed, n_spikes=3):
    """Three spikes on known coordinates plus one DCT atom."""
    a, b = block
    rng = XorShift64Star(seed)
    known = [i for i in range(n) if not a <= i < b]
    spikes = sorted(rng.sample(known, min(n_spikes, len(known))))
    x1 = np.zeros(n)
    for i in spikes:
        x1[i] = (1.0 if rng.uniform() < 0.5 else -1.0) * (1.0 + rng.uniform())
    freq = 1 + rng.integer(max(n // 2 - 1, 1))
    amp = 1.0 + rng.uniform()
    x2 = amp * dct_frame(n).analysis[freq]
    return x1, x2, spikes, freq, amp


def cmd_demo(args):
    n = args.n
    try:
        a, b = (int(t) for t in args.missing_block.split(","))
    except ValueError:
        raise InputError(f"bad --missing-block {args.missing_block!r}: expected A,B") from None
    if n < 2 or not 0 <= a <= b <= n:
        raise InputError(f"invalid block [{a},{b}) for n={n}")
    f1, f2 = identity_frame(n), dct_frame(n)
    p = make_partition(n, [i for i in range(n) if not a <= i < b])
    x1, x2, spikes, freq, amp = demo_instance(n, (a, b), args.seed)
    x0 = x1 + x2
    res = solve_iterative(f1, f2, p, x0, SolveOptions(max_iters=args.max_iters, tol=args.tol))
    rec = res.x1_star + res.x2_star
    missing = list(p.missing)
    supports = SupportPair(spikes, [freq])
    mode = "exact" if f1.m + f2.m <= KAPPA_CUTOFF else "estimate"
    cert = certify(f1, f2, p, x1, x2, supports, kappa=mode, samples=args.samples, seed=args.seed)

    os.makedirs(args.out, exist_ok=True)
    files = {
        "x0.csv": x0, "mask.csv": p.known_mask.astype(float), "x1_star.csv": res.x1_star,
        "x2_star.csv": res.x2_star, "recovered.csv": rec,
    }
    for name, vec in files.items():
        with open(os.path.join(args.out, name), "w") as fh:
            fh.write(signal_to_csv(vec))
    summary = {
        "n": n,
        "missing_block": [a, b],
        "seed": args.seed,
        "spikes": spikes,
        "dct_frequency": freq,
        "dct_amplitude": amp,
        "converged": res.converged,
        "iterations": res.iterations,
        "objective": res.objective,
        "feasibility_residual": res.feasibility_residual,
        "error_missing_l2": norm((rec - x0)[missing], 2),
        "error_l2": norm(rec - x0, 2),
        "component_error": norm(res.x1_star - x1, 2) + norm(res.x2_star - x2, 2),
        "certificate": cert.to_json(),
        "supports": supports.to_json(),
    }
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK if res.converged else EXIT_NOCONV


# parser

def _add_problem_flags(p):
    p.add_argument("--phi1", required=True, help=FRAME_SPEC_HELP)
    p.add_argument("--phi2", required=True, help=FRAME_SPEC_HELP)
    p.add_argument("--known", required=True, help=KNOWN_SPEC_HELP)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sepcert",
        description="Joint completion and separation by l1-analysis minimization, with certificates.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the constrained l1-analysis problem",
                       epilog="signal files: JSON array or single-column CSV")
    _add_problem_flags(p)
    p.add_argument("--signal", required=True, help="observed signal x0 (entries on missing coordinates are ignored)")
    p.add_argument("--method", choices=["iterative", "lp"], default="iterative")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=100000)
    p.add_argument("--trace", help="write the per-iteration residual trace as CSV")
    p.add_argument("--out", help="output JSON path (default: stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="compute delta, kappa and the error bound")
    _add_problem_flags(p)
    p.add_argument("--x1", required=True, help="first component signal")
    p.add_argument("--x2", required=True, help="second component signal")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--supports", help='JSON file {"lambda1": [...], "lambda2": [...]}')
    g.add_argument("--topk", help="K1,K2: keep the largest coefficients of each component")
    p.add_argument("--kappa", choices=["exact", "estimate"], default="exact")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cutoff", type=int, default=KAPPA_CUTOFF, help="max m1+m2 for exact kappa")
    p.add_argument("--out", help="output JSON path (default: stdout)")
    p.set_defaults(func=cmd_certify)

    for name, func, helptext in (
        ("verify-bound", cmd_verify_bound, "run a sweep and check the error bound on certified rows"),
        ("bench", cmd_bench, "run a sweep and report timings"),
    ):
        p = sub.add_parser(name, help=helptext,
                           epilog=f"frames in configs use the {FRAME_SPEC_HELP}")
        p.add_argument("--config", required=(name == "verify-bound"), help="sweep config JSON")
        p.add_argument("--out", help="report path (default: stdout)")
        p.add_argument("--format", choices=["csv", "jsonl"], default="csv")
        p.add_argument("--workers", type=int, default=1)
        p.set_defaults(func=func)

    p = sub.add_parser("demo", help="spikes + sinusoid inpainting demo",
                       epilog="frames: identity:n=N for spikes, dct:n=N for the sinusoid")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--missing-block", default="28,36", help="A,B: coordinates A..B-1 are missing")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=100000)
    p.add_argument("--samples", type=int, default=200, help="samples for the kappa lower estimate")
    p.add_argument("--out", default="demo_out", help="output directory")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except RuntimeError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
