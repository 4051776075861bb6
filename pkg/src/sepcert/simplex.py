"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x[i] >= 0 unless free[i]

Free variables are split into positive and negative parts, inequality rows
get slack columns, and phase 1 starts from an all-artificial basis. The
final basic solution is recomputed from the basis matrix and checked
against the original constraints; anything that does not verify raises
:class:`SimplexError` instead of returning a wrong answer.
"""

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9


class SimplexError(RuntimeError):
    """Numerical breakdown (singular basis, pivot limit, failed verification)."""


@dataclass
class LPResult:
    status: str  # 'optimal' | 'infeasible' | 'unbounded'
    x: np.ndarray = None
    fun: float = None
    pivots: int = 0


class _Tableau:
    def __init__(self, A, b, tol, max_pivots):
        rows, cols = A.shape
        self.tol = tol
        self.max_pivots = max_pivots
        self.pivots = 0
        # body = [A | I_art | b]
        self.T = np.hstack([A, np.eye(rows), b[:, None]])
        self.basis = list(range(cols, cols + rows))
        self.ncols = cols

    def set_objective(self, cost):
        """Reduced-cost row for ``cost`` over all current columns."""
        T = self.T
        cb = cost[self.basis]
        self.obj = np.concatenate([cost, [0.0]]) - cb @ T
        # obj[-1] holds -(current objective value)

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.obj -= self.obj[j] * T[r]
        self.basis[r] = j
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise SimplexError("pivot limit exceeded")

    def run(self, allowed):
        """Bland iterations restricted to columns flagged in ``allowed``."""
        tol = self.tol
        T = self.T
        while True:
            candidates = np.nonzero((self.obj[:-1] < -tol) & allowed)[0]
            if candidates.size == 0:
                return "optimal"
            j = int(candidates[0])
            col = T[:, j]
            rows = np.nonzero(col > tol)[0]
            if rows.size == 0:
                return "unbounded"
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol * max(1.0, abs(best))]
            r = min(ties, key=lambda i: self.basis[i])
            self.pivot(int(r), j)
            T = self.T


def _standard_form(c, A_ub, b_ub, A_eq, b_eq, free):
    nvar = c.size
    free = np.zeros(nvar, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    free_idx = np.nonzero(free)[0]
    n_ub = 0 if A_ub is None else A_ub.shape[0]
    blocks = []
    rhs = []
    if n_ub:
        blocks.append(np.hstack([A_ub, -A_ub[:, free_idx], np.eye(n_ub)]))
        rhs.append(b_ub)
    if A_eq is not None and A_eq.shape[0]:
        blocks.append(np.hstack([A_eq, -A_eq[:, free_idx], np.zeros((A_eq.shape[0], n_ub))]))
        rhs.append(b_eq)
    ncols = nvar + free_idx.size + n_ub
    A = np.vstack(blocks) if blocks else np.zeros((0, ncols))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    cost = np.concatenate([c, -c[free_idx], np.zeros(n_ub)])
    return A, b, cost, free_idx


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=None,
            tol=PIVOT_TOL, max_pivots=100000, check_tol=1e-7):
    """Minimize a linear program with the two-phase simplex method.

    Parameters
    ----------
    c : array_like, shape (nvar,)
        Cost vector.
    A_ub, b_ub : array_like, optional
        Inequality constraints ``A_ub @ x <= b_ub``.
    A_eq, b_eq : array_like, optional
        Equality constraints.
    free : array_like of bool, optional
        Variables without a sign constraint; all others are ``>= 0``.
    tol : float
        Pivot and reduced-cost tolerance.

    Returns
    -------
    LPResult
    """
    c = np.asarray(c, dtype=float)
    A_ub = None if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    A_eq = None if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_ub = None if b_ub is None else np.asarray(b_ub, dtype=float)
    b_eq = None if b_eq is None else np.asarray(b_eq, dtype=float)
    A, b, cost, free_idx = _standard_form(c, A_ub, b_ub, A_eq, b_eq, free)
    rows, cols = A.shape
    if rows == 0:
        if np.any(cost < -tol):
            return LPResult("unbounded")
        return LPResult("optimal", np.zeros(c.size), 0.0)

    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1
    scale = max(1.0, float(np.max(np.abs(b))))

    tab = _Tableau(A, b, tol, max_pivots)
    art_cost = np.concatenate([np.zeros(cols), np.ones(rows)])
    tab.set_objective(art_cost)
    tab.run(np.ones(cols + rows, dtype=bool))
    if -tab.obj[-1] > 1e-9 * scale:
        return LPResult("infeasible", pivots=tab.pivots)

    # drive zero-level artificials out of the basis, dropping redundant rows
    keep = []
    for r in range(rows):
        if tab.basis[r] < cols:
            keep.append(r)
            continue
        nz = np.nonzero(np.abs(tab.T[r, :cols]) > tol)[0]
        if nz.size:
            tab.pivot(r, int(nz[0]))
            keep.append(r)
    tab.T = tab.T[keep]
    tab.basis = [tab.basis[r] for r in keep]

    allowed = np.concatenate([np.ones(cols, dtype=bool), np.zeros(rows, dtype=bool)])
    tab.set_objective(np.concatenate([cost, np.zeros(rows)]))
    status = tab.run(allowed)
    if status == "unbounded":
        return LPResult("unbounded", pivots=tab.pivots)

    basis = np.array(tab.basis)
    if np.any(basis >= cols):
        raise SimplexError("artificial variable left in final basis")
    z = np.zeros(cols)
    try:
        z[basis] = np.linalg.solve(A[keep][:, basis], b[keep])
    except np.linalg.LinAlgError:
        raise SimplexError("singular final basis") from None
    z[np.abs(z) < 1e-13] = 0.0
    x = z[:c.size].copy()
    x[free_idx] -= z[c.size:c.size + free_idx.size]

    # verify against the original problem
    if np.any(z < -check_tol * scale):
        raise SimplexError("final basic solution violates bounds")
    if A_ub is not None and A_ub.shape[0] and np.any(A_ub @ x - b_ub > check_tol * scale):
        raise SimplexError("final basic solution violates inequality rows")
    if A_eq is not None and A_eq.shape[0] and np.any(np.abs(A_eq @ x - b_eq) > check_tol * scale):
        raise SimplexError("final basic solution violates equality rows")
    return LPResult("optimal", x, float(c @ x), tab.pivots)
