"""Joint completion and separation by l1-analysis minimization.

Problem::

    minimize ||A1 x1||_1 + ||A2 x2||_1   subject to   (x1 + x2)[K] = x0[K]

where ``A1``, ``A2`` are Parseval analysis matrices and ``K`` are the known
coordinates. :func:`solve_iterative` runs a primal-dual hybrid gradient
iteration; :func:`solve_lp_exact` solves the equivalent linear program with
the simplex engine and serves as the ground truth at small sizes.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .hilbert import DimensionError, as_signal, norm
from .simplex import SimplexError, linprog

LP_MAX_N = 32
LP_MAX_COEFFS = 64


class OracleFailure(RuntimeError):
    """The exact LP could not be solved reliably."""


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 100000
    tol: float = 1e-9
    step_primal: float = 0.99
    step_dual: float = 0.99

    def __post_init__(self):
        if self.max_iters < 1 or self.tol <= 0:
            raise ValueError("max_iters and tol must be positive")
        if self.step_primal <= 0 or self.step_dual <= 0:
            raise ValueError("step sizes must be positive")
        if self.step_primal * self.step_dual > 1:
            raise ValueError("step_primal * step_dual must not exceed 1")


@dataclass
class SolveResult:
    x1_star: np.ndarray
    x2_star: np.ndarray
    objective: float
    feasibility_residual: float
    iterations: int
    converged: bool
    method: str  # 'iterative' | 'lp_exact'
    trace: list = field(default_factory=list, repr=False)

    def to_json(self):
        return {
            "x1_star": [float(v) for v in self.x1_star],
            "x2_star": [float(v) for v in self.x2_star],
            "objective": self.objective,
            "feasibility_residual": self.feasibility_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "method": self.method,
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)

    def write_trace(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "residual"])
            for k, r in enumerate(self.trace, 1):
                w.writerow([k, repr(float(r))])


def soft_threshold(v, t):
    """Entrywise ``sign(v) * max(|v| - t, 0)``, the prox of ``t * ||.||_1``."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _check_dims(f1, f2, p, *signals):
    if f1.n != f2.n or f1.n != p.n:
        raise DimensionError(f"frames act on R^{f1.n} and R^{f2.n}, partition has n={p.n}")
    return [as_signal(s, p.n) for s in signals]


def project_constraint(x1, x2, p, known_values):
    """Euclidean projection of ``(x1, x2)`` onto ``{(a, b): (a + b)[K] = x0[K]}``."""
    x1 = as_signal(x1, p.n).copy()
    x2 = as_signal(x2, p.n).copy()
    known_values = as_signal(known_values, p.n)
    k = list(p.known)
    r = 0.5 * (known_values[k] - x1[k] - x2[k])
    x1[k] += r
    x2[k] += r
    return x1, x2


def objective(f1, f2, x1, x2):
    if f1.n != f2.n:
        raise DimensionError("frames act on different spaces")
    x1 = as_signal(x1, f1.n)
    x2 = as_signal(x2, f2.n)
    return norm(f1.analysis @ x1, 1) + norm(f2.analysis @ x2, 1)


def feasibility_residual(x1, x2, p, x0_known):
    """Max violation of the known-coordinate constraint; 0 when nothing is known."""
    x1, x2, x0 = (as_signal(s, p.n) for s in (x1, x2, x0_known))
    if not p.known:
        return 0.0
    k = list(p.known)
    return float(np.max(np.abs(x1[k] + x2[k] - x0[k])))


def solve_iterative(f1, f2, p, x0_known, opts=None):
    """Primal-dual hybrid gradient for the constrained l1-analysis problem.

    The primal variable is ``z = (x1, x2)``, the linear map is the
    block-diagonal stack of the two analysis matrices (operator norm 1),
    the dual prox is the clamp to ``[-1, 1]`` and the primal prox is
    :func:`project_constraint`. Stops when
    ``max(feasibility, ||w_new - w|| / (1 + ||w||)) <= opts.tol`` where
    ``w = (z, y)`` is the joint primal-dual iterate.
    """
    opts = opts or SolveOptions()
    (x0,) = _check_dims(f1, f2, p, x0_known)
    n = p.n
    A = np.zeros((f1.m + f2.m, 2 * n))
    A[:f1.m, :n] = f1.analysis
    A[f1.m:, n:] = f2.analysis
    At = A.T.copy()
    k = np.array(p.known, dtype=int)
    k2 = k + n
    target = x0[k]
    tau, sigma = opts.step_primal, opts.step_dual

    z = np.zeros(2 * n)
    z[k] = 0.5 * target
    z[k2] = 0.5 * target
    zbar = z.copy()
    y = np.zeros(A.shape[0])
    trace = []
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        yn = np.clip(y + sigma * (A @ zbar), -1.0, 1.0)
        zn = z - tau * (At @ yn)
        r = 0.5 * (target - zn[k] - zn[k2])
        zn[k] += r
        zn[k2] += r
        d = zn - z
        dy = yn - y
        change = math.sqrt(d @ d + dy @ dy) / (1.0 + math.sqrt(z @ z + y @ y))
        feas = float(np.max(np.abs(zn[k] + zn[k2] - target))) if k.size else 0.0
        res = max(feas, change)
        trace.append(res)
        zbar = zn + d
        z, y = zn, yn
        if res <= opts.tol:
            converged = True
            break

    x1, x2 = z[:n].copy(), z[n:].copy()
    return SolveResult(
        x1, x2, objective(f1, f2, x1, x2), feasibility_residual(x1, x2, p, x0),
        it, converged, "iterative", trace,
    )


def lp_size_ok(f1, f2):
    return f1.n <= LP_MAX_N and f1.m + f2.m <= LP_MAX_COEFFS


def solve_lp_exact(f1, f2, p, x0_known):
    """Exact minimizer through the epigraph linear program.

    Variables ``(x1, x2, t1, t2)``; minimize ``sum(t1) + sum(t2)`` subject to
    ``-t_i <= A_i x_i <= t_i`` and ``(x1 + x2)[K] = x0[K]``.
    """
    (x0,) = _check_dims(f1, f2, p, x0_known)
    if not lp_size_ok(f1, f2):
        raise OracleFailure(
            f"instance too large for the exact LP (n={f1.n}, m1+m2={f1.m + f2.m}; "
            f"limits n<={LP_MAX_N}, m1+m2<={LP_MAX_COEFFS})")
    n, m1, m2 = p.n, f1.m, f2.m
    nv = 2 * n + m1 + m2
    c = np.concatenate([np.zeros(2 * n), np.ones(m1 + m2)])
    A_ub = np.zeros((2 * (m1 + m2), nv))
    blocks = [(f1.analysis, 0, 2 * n, m1), (f2.analysis, n, 2 * n + m1, m2)]
    row = 0
    for a, xoff, toff, m in blocks:
        eye = np.eye(m)
        A_ub[row:row + m, xoff:xoff + n] = a
        A_ub[row:row + m, toff:toff + m] = -eye
        A_ub[row + m:row + 2 * m, xoff:xoff + n] = -a
        A_ub[row + m:row + 2 * m, toff:toff + m] = -eye
        row += 2 * m
    b_ub = np.zeros(A_ub.shape[0])
    known = list(p.known)
    A_eq = np.zeros((len(known), nv))
    for r, i in enumerate(known):
        A_eq[r, i] = 1.0
        A_eq[r, n + i] = 1.0
    b_eq = x0[known]
    free = np.concatenate([np.ones(2 * n, dtype=bool), np.zeros(m1 + m2, dtype=bool)])
    try:
        res = linprog(c, A_ub, b_ub, A_eq, b_eq, free=free)
    except SimplexError as exc:
        raise OracleFailure(f"LP oracle failed: {exc}") from exc
    if res.status != "optimal":
        raise OracleFailure(f"LP oracle returned status {res.status!r}")
    x1, x2 = res.x[:n], res.x[n:2 * n]
    return SolveResult(
        x1, x2, objective(f1, f2, x1, x2), feasibility_residual(x1, x2, p, x0),
        res.pivots, True, "lp_exact",
    )
