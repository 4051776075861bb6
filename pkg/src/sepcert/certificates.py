"""Sparsity defect, joint concentration and the recovery error bound.

Notation: ``A1``, ``A2`` are the analysis matrices, ``L1``, ``L2`` the chosen
coefficient supports. The joint concentration is the supremum, over pairs
``(u, x)`` with ``u[K] = x[K]``, of::

    (||A1 u restricted to L1||_1 + ||A2 x restricted to L2||_1)
    / (||A1 u||_1 + ||A2 x||_1)

where ``u`` stands for ``y + P_K x`` with ``y`` supported on the missing
coordinates. Stacking ``w -> (A1 u, A2 x)`` over a basis of the feasible
subspace turns this into the ratio ``||R_L w||_1 / ||R w||_1`` for a single
matrix ``R``; both exact oracles work on that form.
"""

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .frames import analyze
from .hilbert import DimensionError, as_signal, norm
from .rng import XorShift64Star
from .simplex import SimplexError, linprog

KAPPA_CUTOFF = 18
FEAS_TOL = 1e-10
# kappa this close to 1/2 cannot be told apart from it in floating point
KAPPA_MARGIN = 1e-9


class CutoffExceeded(ValueError):
    """Exact joint concentration requested above the enumeration cutoff."""


class InfeasiblePairError(ValueError):
    """``(u, x)`` violates ``u[K] = x[K]``."""


class ZeroDenominatorError(ValueError):
    pass


@dataclass(frozen=True)
class SupportPair:
    lambda1: tuple
    lambda2: tuple

    def __post_init__(self):
        object.__setattr__(self, "lambda1", tuple(sorted(int(i) for i in self.lambda1)))
        object.__setattr__(self, "lambda2", tuple(sorted(int(i) for i in self.lambda2)))

    def check(self, f1, f2):
        for lam, f, name in ((self.lambda1, f1, "lambda1"), (self.lambda2, f2, "lambda2")):
            bad = [i for i in lam if not 0 <= i < f.m]
            if bad or len(set(lam)) != len(lam):
                raise IndexError(f"{name} has invalid indices for a frame with {f.m} rows: {bad or lam}")

    def to_json(self):
        return {"lambda1": list(self.lambda1), "lambda2": list(self.lambda2)}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["lambda1"], obj["lambda2"])

    @classmethod
    def full(cls, f1, f2):
        return cls(range(f1.m), range(f2.m))


@dataclass(frozen=True)
class Certificate:
    """Sparsity defect, joint concentration and the resulting error bound."""

    delta: float
    kappa: float
    kappa_kind: str  # 'exact' | 'lower_bound'
    degenerate: bool = False

    @property
    def certified(self):
        return self.kappa_kind == "exact"

    @property
    def bound(self):
        """Error bound, ``inf`` in the vacuous regime, ``None`` if uncertified."""
        if not self.certified:
            return None
        return error_bound(self.delta, self.kappa)

    def to_json(self):
        b = self.bound
        out = {
            "delta": self.delta,
            "kappa": self.kappa,
            "kappa_kind": self.kappa_kind,
            "bound": "uncertified" if b is None else ("inf" if math.isinf(b) else b),
        }
        if self.degenerate:
            out["degenerate"] = True
        return out

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)


def error_bound(delta, kappa):
    """``2 delta / (1 - 2 kappa)``, or ``inf`` once ``kappa >= 1/2 - KAPPA_MARGIN``."""
    if delta < 0 or not 0 <= kappa <= 1:
        raise ValueError("need delta >= 0 and 0 <= kappa <= 1")
    if kappa >= 0.5 - KAPPA_MARGIN:
        return math.inf
    return 2.0 * delta / (1.0 - 2.0 * kappa)


def _off_support(c, lam):
    mask = np.ones(c.size, dtype=bool)
    mask[list(lam)] = False
    return c[mask]


def compute_delta(f1, f2, x1, x2, s):
    """l1 mass of the components' coefficients outside their supports."""
    if f1.n != f2.n:
        raise DimensionError("frames act on different spaces")
    s.check(f1, f2)
    c1 = analyze(f1, x1)
    c2 = analyze(f2, x2)
    return norm(_off_support(c1, s.lambda1), 1) + norm(_off_support(c2, s.lambda2), 1)


def _top_k(c, k):
    # stable sort on -|c| keeps the lower index first among ties
    order = np.argsort(-np.abs(c), kind="stable")
    return tuple(sorted(int(i) for i in order[:k]))


def select_supports(f1, f2, x1, x2, k1, k2):
    """Indices of the ``k1``/``k2`` largest-magnitude coefficients of each component."""
    if not (0 <= k1 <= f1.m and 0 <= k2 <= f2.m):
        raise ValueError(f"support sizes ({k1}, {k2}) exceed frame sizes ({f1.m}, {f2.m})")
    return SupportPair(_top_k(analyze(f1, x1), k1), _top_k(analyze(f2, x2), k2))


def joint_ratio(f1, f2, p, s, u, x):
    """Concentration of the pair ``(u, x)`` on the supports; requires ``u[K] = x[K]``."""
    u = as_signal(u, p.n)
    x = as_signal(x, p.n)
    k = list(p.known)
    if k and np.max(np.abs(u[k] - x[k])) > FEAS_TOL:
        raise InfeasiblePairError("pair violates u[K] = x[K]")
    c1 = analyze(f1, u)
    c2 = analyze(f2, x)
    den = norm(c1, 1) + norm(c2, 1)
    if den <= 0:
        raise ZeroDenominatorError("both coefficient vectors vanish")
    num = norm(c1[list(s.lambda1)], 1) + norm(c2[list(s.lambda2)], 1)
    return num / den


# feasible-subspace parametrization

def feasible_basis(p):
    """Columns span ``{(u, x): u[K] = x[K]}`` in ``R^{2n}``.

    One column per known coordinate (shared by ``u`` and ``x``), then one
    per missing coordinate of ``u`` and one per missing coordinate of ``x``.
    """
    n = p.n
    cols = []
    for i in p.known:
        v = np.zeros(2 * n)
        v[i] = v[n + i] = 1.0
        cols.append(v)
    for off in (0, n):
        for i in p.missing:
            v = np.zeros(2 * n)
            v[off + i] = 1.0
            cols.append(v)
    return np.array(cols).T


def stacked_map(f1, f2, p):
    """Matrix ``R`` with ``R w = (A1 u, A2 x)`` for ``(u, x) = B w``."""
    if f1.n != f2.n or f1.n != p.n:
        raise DimensionError("frames and partition disagree on the dimension")
    n = p.n
    A = np.zeros((f1.m + f2.m, 2 * n))
    A[:f1.m, :n] = f1.analysis
    A[f1.m:, n:] = f2.analysis
    return A @ feasible_basis(p)


def _support_mask(f1, f2, s):
    mask = np.zeros(f1.m + f2.m, dtype=bool)
    mask[list(s.lambda1)] = True
    mask[[f1.m + i for i in s.lambda2]] = True
    return mask


def _sign_patterns(count):
    # sigma and -sigma give the same value (w -> -w), so fix the first sign
    if count == 0:
        return
    for rest in itertools.product((1.0, -1.0), repeat=count - 1):
        yield np.array((1.0,) + rest)


def _lp(*args, **kw):
    try:
        return linprog(*args, **kw)
    except SimplexError as exc:
        raise RuntimeError(f"kappa oracle LP failed: {exc}") from exc


def _kappa_support_orthants(R, mask):
    """Enumerate sign patterns on the support rows only.

    For a fixed pattern the support mass is linear, so fix it to 1 and
    minimize the off-support mass ``||R_off w||_1`` as an epigraph LP. The
    ratio is then ``1 / (1 + min)``.
    """
    R_on, R_off = R[mask], R[~mask]
    d = R.shape[1]
    q = R_off.shape[0]
    if q == 0:
        return 1.0
    best = math.inf
    c = np.concatenate([np.zeros(d), np.ones(q)])
    free = np.concatenate([np.ones(d, dtype=bool), np.zeros(q, dtype=bool)])
    eye = np.eye(q)
    epi = np.vstack([np.hstack([R_off, -eye]), np.hstack([-R_off, -eye])])
    for sigma in _sign_patterns(R_on.shape[0]):
        S = sigma[:, None] * R_on
        A_ub = np.vstack([epi, np.hstack([-S, np.zeros((S.shape[0], q))])])
        b_ub = np.zeros(A_ub.shape[0])
        A_eq = np.concatenate([S.sum(axis=0), np.zeros(q)])[None, :]
        res = _lp(c, A_ub, b_ub, A_eq, [1.0], free=free)
        if res.status == "optimal":
            best = min(best, max(res.fun, 0.0))
            if best <= 0.0:
                break
    return 0.0 if math.isinf(best) else 1.0 / (1.0 + best)


def _kappa_all_orthants(R, mask):
    """Enumerate sign patterns on every row.

    Within the orthant ``sigma_i (R w)_i >= 0`` both norms are linear, so
    maximize the support part with the total normalized to 1.
    """
    d = R.shape[1]
    best = 0.0
    free = np.ones(d, dtype=bool)
    for sigma in _sign_patterns(R.shape[0]):
        S = sigma[:, None] * R
        c = -S[mask].sum(axis=0)
        res = _lp(c, -S, np.zeros(S.shape[0]), S.sum(axis=0)[None, :], [1.0], free=free)
        if res.status == "optimal":
            best = max(best, -res.fun)
    return min(max(best, 0.0), 1.0)


def kappa_exact(f1, f2, p, s, cutoff=KAPPA_CUTOFF, method="support"):
    """Exact joint concentration by sign-pattern enumeration.

    Parameters
    ----------
    method : {'support', 'orthant'}
        ``'support'`` enumerates signs of the support rows and handles the
        off-support rows with an epigraph LP; ``'orthant'`` enumerates signs
        of all rows. Both return the same supremum; the second is the slower
        reference.
    """
    s.check(f1, f2)
    m = f1.m + f2.m
    if m > cutoff:
        raise CutoffExceeded(
            f"m1+m2={m} exceeds the exact-kappa cutoff {cutoff}; use kappa_lower_estimate")
    R = stacked_map(f1, f2, p)
    mask = _support_mask(f1, f2, s)
    if not mask.any():
        return 0.0
    if method == "support":
        return _kappa_support_orthants(R, mask)
    if method == "orthant":
        return _kappa_all_orthants(R, mask)
    raise ValueError(f"unknown method {method!r}")


def _ratios(R, mask, W):
    """Ratios for each column of ``W``; nan where the denominator vanishes."""
    C = np.abs(R @ W)
    den = C.sum(axis=0)
    num = C[mask].sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / den, np.nan)


def _line_max(R, mask, w, d):
    """Exact max of the ratio on the line ``w + t d`` (and at ``t = inf``).

    Between consecutive kinks the ratio is linear-fractional, hence
    monotone, so its maximum sits at a kink or at infinity.
    """
    a = R @ w
    b = R @ d
    nz = np.abs(b) > 1e-14
    ts = np.unique(-a[nz] / b[nz])
    cands = np.concatenate([w[:, None] + ts[None, :] * d[:, None], d[:, None]], axis=1)
    r = _ratios(R, mask, cands)
    if np.all(np.isnan(r)):
        return -1.0, w
    j = int(np.nanargmax(r))
    return float(r[j]), cands[:, j]


def kappa_lower_estimate(f1, f2, p, s, samples=1000, seed=0, sweeps=50):
    """Lower bound on the joint concentration from feasible samples.

    Draws Gaussian pairs ``(u, x)``, projects them onto ``u[K] = x[K]``,
    keeps the best ratio and then runs coordinate ascent along the feasible
    basis directions with exact line search. Every evaluated point is
    feasible, so the result never exceeds the true value.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    s.check(f1, f2)
    mask = _support_mask(f1, f2, s)
    if not mask.any():
        return 0.0
    n = p.n
    B = feasible_basis(p)
    R = stacked_map(f1, f2, p)
    rng = XorShift64Star(seed)
    Z = rng.normals((samples, 2 * n)).T
    k = list(p.known)
    avg = 0.5 * (Z[k] + Z[[n + i for i in k]])
    Z[k] = avg
    Z[[n + i for i in k]] = avg
    # B has orthonormal-up-to-scale columns; recover coordinates by least squares
    W = np.linalg.lstsq(B, Z, rcond=None)[0]
    r = _ratios(R, mask, W)
    if np.all(np.isnan(r)):
        return 0.0
    j = int(np.nanargmax(r))
    best, w = float(r[j]), W[:, j]
    dim = B.shape[1]
    for _ in range(sweeps):
        improved = False
        for i in range(dim):
            d = np.zeros(dim)
            d[i] = 1.0
            val, cand = _line_max(R, mask, w, d)
            if val > best + 1e-15:
                best, w, improved = val, cand, True
        if not improved:
            break
    return min(best, 1.0)


def certify(f1, f2, p, x1, x2, s, kappa="exact", samples=1000, seed=0, cutoff=KAPPA_CUTOFF):
    """Compute the sparsity defect and joint concentration for an instance."""
    delta = compute_delta(f1, f2, x1, x2, s)
    degenerate = stacked_map(f1, f2, p).shape[1] == 0
    if kappa == "exact":
        k = kappa_exact(f1, f2, p, s, cutoff=cutoff)
        return Certificate(delta, k, "exact", degenerate)
    if kappa == "estimate":
        k = kappa_lower_estimate(f1, f2, p, s, samples=samples, seed=seed)
        return Certificate(delta, k, "lower_bound", degenerate)
    raise ValueError(f"unknown kappa mode {kappa!r}")
