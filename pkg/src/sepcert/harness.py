"""Instance generation, sweeps and numerical checks of the recovery bound.

A sweep config is a JSON document; either a single cell::

    {"frames": {"phi1": "identity:n=4", "phi2": "dct:n=4"}, "n": 4,
     "sparsity": {"k1": 1, "k2": 1}, "mask": {"block": [1, 2]},
     "supports": {"rule": "exact"}, "seeds": [0, 1, 2],
     "solver": {"method": "both", "kappa": "auto"}}

or ``{"cells": [cell, ...]}``. ``mask`` is a known-set spec string or an
object with one of the keys ``block`` ([a, b), missing), ``random``
(missing probability), ``list`` (known indices), ``all``, ``none``.
``supports`` is ``"exact"``, ``"topk:K"``, ``"topk:K1,K2"`` or the object
forms ``{"rule": "exact"}`` / ``{"rule": "topk", "k1": .., "k2": ..}``.
``seeds`` is a list or ``{"start": s, "count": c}``.
"""

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .certificates import (KAPPA_CUTOFF, KAPPA_MARGIN, Certificate, SupportPair, certify,
                           select_supports)
from .frames import ParsevalFrame, parse_frame_spec, synthesize
from .hilbert import norm, parse_known_spec
from .rng import XorShift64Star
from .solver import SolveOptions, lp_size_ok, solve_iterative, solve_lp_exact

log = logging.getLogger(__name__)

CHECK_TOL = 1e-6

COLUMNS = [
    "instance_id", "n", "n_known", "m1", "m2", "lambda1_size", "lambda2_size",
    "delta", "kappa", "kappa_kind", "bound", "objective_lp", "objective_iter",
    "error", "bound_holds", "intermezzo_holds", "part2_holds", "iterations", "wall_ms",
    "method", "feas_lp", "feas_iter", "status", "message",
]
TIMING_COLUMNS = ("wall_ms",)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InstanceSpec:
    phi1: str
    phi2: str
    n: int
    k1: int
    k2: int
    mask: str = "all"
    supports: str = "exact"


@dataclass
class Instance:
    f1: ParsevalFrame
    f2: ParsevalFrame
    partition: object
    x1_true: np.ndarray
    x2_true: np.ndarray
    x0: np.ndarray
    supports: SupportPair
    seed: int


@dataclass
class BoundCheck:
    error: float
    certificate: Certificate
    bound_holds: object  # True/False, or None when uncertified
    intermezzo_holds: object
    part2_holds: bool
    details: dict = field(default_factory=dict)


def _parse_supports(rule):
    """Return ``('exact', None)`` or ``('topk', (k1, k2))``."""
    if isinstance(rule, dict):
        kind = rule.get("rule")
        if kind == "exact":
            return "exact", None
        if kind == "topk":
            if "k" in rule:
                return "topk", (int(rule["k"]), int(rule["k"]))
            return "topk", (int(rule["k1"]), int(rule["k2"]))
        raise ConfigError(f"bad supports rule {rule!r}")
    kind, _, rest = str(rule).partition(":")
    if kind == "exact" and not rest:
        return "exact", None
    if kind == "topk":
        ks = [int(t) for t in rest.split(",")]
        if len(ks) == 1:
            ks = ks * 2
        if len(ks) == 2:
            return "topk", tuple(ks)
    raise ConfigError(f"bad supports rule {rule!r}")


def _sparse_coefficients(rng, m, k):
    support = sorted(rng.sample(range(m), k))
    c = np.zeros(m)
    for i in support:
        sign = 1.0 if rng.uniform() < 0.5 else -1.0
        c[i] = sign * (1.0 + rng.uniform())
    return c, support


def gen_instance(spec, seed, frames=None):
    """Random instance whose components are sparse syntheses in their frames.

    Each component is ``A_i.T @ c_i`` with ``c_i`` having ``k_i`` nonzeros of
    magnitude in [1, 2). With ``exact`` supports the supports are the
    supports of ``c_i``, which coincide with the analysis supports for
    orthonormal bases (so the sparsity defect is zero there).
    """
    f1, f2 = frames if frames is not None else (parse_frame_spec(spec.phi1), parse_frame_spec(spec.phi2))
    if f1.n != spec.n or f2.n != spec.n:
        raise ConfigError(f"frames act on R^{f1.n}, R^{f2.n} but n={spec.n}")
    if not (0 <= spec.k1 <= f1.m and 0 <= spec.k2 <= f2.m):
        raise ConfigError(f"sparsity ({spec.k1}, {spec.k2}) exceeds frame sizes ({f1.m}, {f2.m})")
    kind, ks = _parse_supports(spec.supports)
    rng = XorShift64Star(seed)
    c1, supp1 = _sparse_coefficients(rng, f1.m, spec.k1)
    c2, supp2 = _sparse_coefficients(rng, f2.m, spec.k2)
    x1 = synthesize(f1, c1)
    x2 = synthesize(f2, c2)
    partition = parse_known_spec(spec.mask, spec.n, rng)
    if kind == "exact":
        supports = SupportPair(supp1, supp2)
    else:
        if ks[0] > f1.m or ks[1] > f2.m:
            raise ConfigError(f"topk sizes {ks} exceed frame sizes ({f1.m}, {f2.m})")
        supports = select_supports(f1, f2, x1, x2, *ks)
    return Instance(f1, f2, partition, x1, x2, x1 + x2, supports, seed)


def _on(c, lam):
    return norm(c[list(lam)], 1)


def _off(c, lam):
    mask = np.ones(c.size, dtype=bool)
    mask[list(lam)] = False
    return norm(c[mask], 1)


def verify_theorem(inst, result, cert, tol=CHECK_TOL):
    """Check the error bound and the two intermediate inequalities of its proof.

    The bound is only asserted for an exact minimizer (``lp_exact``) with an
    exactly computed concentration below 1/2; otherwise ``bound_holds`` is
    ``None``. The first proof inequality needs an exact concentration below
    1; the second only uses minimality and is always evaluated.
    """
    f1, f2, s = inst.f1, inst.f2, inst.supports
    e1 = result.x1_star - inst.x1_true
    e2 = result.x2_star - inst.x2_true
    error = norm(e1, 2) + norm(e2, 2)
    ce1, ce2 = f1.analysis @ e1, f2.analysis @ e2
    cs1, cs2 = f1.analysis @ result.x1_star, f2.analysis @ result.x2_star
    delta, kappa = cert.delta, cert.kappa
    off_star = _off(cs1, s.lambda1) + _off(cs2, s.lambda2)
    on_err = _on(ce1, s.lambda1) + _on(ce2, s.lambda2)
    total_err = norm(ce1, 1) + norm(ce2, 1)

    details = {"off_star": off_star, "on_err": on_err, "coef_err": total_err}
    bound_holds = None
    if cert.certified and kappa < 0.5 - KAPPA_MARGIN and result.method == "lp_exact":
        bound_holds = bool(error <= cert.bound + tol)
    intermezzo = None
    if cert.certified and kappa < 1.0:
        rhs = (off_star + delta) / (1.0 - kappa)
        details["intermezzo_rhs"] = rhs
        intermezzo = bool(total_err <= rhs + tol)
    part2 = bool(off_star <= delta + on_err + tol)
    return BoundCheck(error, cert, bound_holds, intermezzo, part2, details)


# sweeps

def _mask_spec(obj):
    if isinstance(obj, str):
        return obj
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ConfigError(f"bad mask {obj!r}")
    (key, value), = obj.items()
    if key == "block":
        return f"block:{int(value[0])},{int(value[1])}"
    if key == "random":
        return f"random:{float(value)!r}"
    if key == "list":
        return "list:" + ",".join(str(int(i)) for i in value)
    if key in ("all", "none"):
        return key
    raise ConfigError(f"bad mask {obj!r}")


def _seeds(obj):
    if isinstance(obj, dict):
        return list(range(int(obj.get("start", 0)), int(obj.get("start", 0)) + int(obj["count"])))
    return [int(s) for s in obj]


@dataclass(frozen=True)
class Cell:
    name: str
    spec: InstanceSpec
    seeds: tuple
    method: str = "both"  # 'both' | 'lp' | 'iterative'
    kappa: str = "auto"  # 'auto' | 'exact' | 'estimate'
    samples: int = 1000
    kappa_cutoff: int = KAPPA_CUTOFF
    options: SolveOptions = SolveOptions()


def parse_config(obj):
    """Validate a sweep config and return its cells.

    Frame specs are built eagerly so a bad frame (including a frame file
    that fails the Parseval check) is a config error, not a per-row one.
    """
    if not obj:
        return []
    raw = obj["cells"] if "cells" in obj else [obj]
    cells = []
    for idx, c in enumerate(raw):
        try:
            frames = c["frames"]
            for key in ("phi1", "phi2"):
                parse_frame_spec(frames[key])
            sp = c.get("sparsity", {})
            spec = InstanceSpec(
                frames["phi1"], frames["phi2"], int(c["n"]),
                int(sp.get("k1", 1)), int(sp.get("k2", 1)),
                _mask_spec(c.get("mask", "all")),
                _supports_str(c.get("supports", "exact")),
            )
            parse_known_spec(spec.mask, spec.n, XorShift64Star(0))
            sol = c.get("solver", {})
            method = sol.get("method", "both")
            kappa = sol.get("kappa", "auto")
            if method not in ("both", "lp", "iterative") or kappa not in ("auto", "exact", "estimate"):
                raise ConfigError(f"bad solver section {sol!r}")
            opts = SolveOptions(
                max_iters=int(sol.get("max_iters", 100000)), tol=float(sol.get("tol", 1e-9)),
                step_primal=float(sol.get("step_primal", 0.99)), step_dual=float(sol.get("step_dual", 0.99)),
            )
            cells.append(Cell(
                c.get("name", f"cell{idx}"), spec, tuple(_seeds(c.get("seeds", []))),
                method, kappa, int(sol.get("samples", 1000)),
                int(sol.get("kappa_cutoff", KAPPA_CUTOFF)), opts,
            ))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError, OSError) as exc:
            raise ConfigError(f"cell {idx}: {exc}") from exc
    return cells


def _supports_str(obj):
    kind, ks = _parse_supports(obj)
    return "exact" if kind == "exact" else f"topk:{ks[0]},{ks[1]}"


def load_config(path):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(obj)


def _fmt_bound(cert):
    b = cert.bound
    if b is None:
        return "uncertified"
    return "inf" if math.isinf(b) else b


def run_cell(cell, seed):
    """One report row; failures are recorded in the row, never raised."""
    t0 = time.perf_counter()
    row = dict.fromkeys(COLUMNS)
    row["instance_id"] = f"{cell.name}/{seed}"
    row["status"] = "ok"
    row["message"] = ""
    try:
        inst = gen_instance(cell.spec, seed)
        f1, f2, p = inst.f1, inst.f2, inst.partition
        row.update(n=p.n, n_known=len(p.known), m1=f1.m, m2=f2.m,
                   lambda1_size=len(inst.supports.lambda1), lambda2_size=len(inst.supports.lambda2))
        lp = it = None
        if cell.method in ("both", "lp") and lp_size_ok(f1, f2):
            lp = solve_lp_exact(f1, f2, p, inst.x0)
            row["objective_lp"] = lp.objective
            row["feas_lp"] = lp.feasibility_residual
        if cell.method in ("both", "iterative") or lp is None:
            it = solve_iterative(f1, f2, p, inst.x0, cell.options)
            row["objective_iter"] = it.objective
            row["feas_iter"] = it.feasibility_residual
            row["iterations"] = it.iterations
            if not it.converged:
                row["message"] = "iterative solver did not converge"
        mode = cell.kappa
        if mode == "auto":
            mode = "exact" if f1.m + f2.m <= cell.kappa_cutoff else "estimate"
        cert = certify(f1, f2, p, inst.x1_true, inst.x2_true, inst.supports,
                       kappa=mode, samples=cell.samples, seed=seed, cutoff=cell.kappa_cutoff)
        result = lp if lp is not None else it
        check = verify_theorem(inst, result, cert)
        row.update(delta=cert.delta, kappa=cert.kappa, kappa_kind=cert.kappa_kind,
                   bound=_fmt_bound(cert), error=check.error, bound_holds=check.bound_holds,
                   intermezzo_holds=check.intermezzo_holds, part2_holds=check.part2_holds,
                   method=result.method)
    except Exception as exc:  # noqa: BLE001 - recorded per row by contract
        log.warning("%s failed: %s", row["instance_id"], exc)
        row["status"] = "error"
        row["message"] = f"{type(exc).__name__}: {exc}"
    row["wall_ms"] = round((time.perf_counter() - t0) * 1000.0, 3)
    return row


def _run_task(task):
    return run_cell(*task)


def run_experiment(config, workers=1):
    """Run every (cell, seed) pair of ``config`` and return rows in config order.

    ``config`` is a parsed cell list, a config dict, or a path.
    """
    if isinstance(config, (str, bytes)) or hasattr(config, "__fspath__"):
        cells = load_config(config)
    elif isinstance(config, dict):
        cells = parse_config(config)
    else:
        cells = list(config)
    tasks = [(cell, seed) for cell in cells for seed in cell.seeds]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_task, tasks))
    return [run_cell(*t) for t in tasks]


def row_certified(row):
    return (row["status"] == "ok" and row["kappa_kind"] == "exact"
            and row["method"] == "lp_exact" and row["kappa"] < 0.5 - KAPPA_MARGIN)


def report_passes(rows):
    """True iff every certified row satisfies the bound and both proof inequalities."""
    return all(r["bound_holds"] and r["intermezzo_holds"] and r["part2_holds"]
               for r in rows if row_certified(r))


def _cell_text(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def _json_value(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def format_report(rows, fmt="csv", drop=()):
    cols = [c for c in COLUMNS if c not in drop]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell_text(r.get(c)) for c in cols])
        return buf.getvalue()
    if fmt == "jsonl":
        return "".join(json.dumps({c: _json_value(r.get(c)) for c in cols}) + "\n" for r in rows)
    raise ValueError(f"unknown report format {fmt!r}")


def write_report(rows, path, fmt="csv", drop=()):
    """Write rows in the fixed column order; ``drop`` removes columns (e.g. timings)."""
    with open(path, "w", newline="") as fh:
        fh.write(format_report(rows, fmt, drop))
