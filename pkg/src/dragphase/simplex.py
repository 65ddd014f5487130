"""Dense two-phase bounded-variable primal simplex.

Solves ``min c·x  s.t.  A x <= b,  l <= x <= u`` where bounds may be infinite.
Each row gets a slack ``s >= 0``; rows whose slack would start negative get an
artificial variable instead, and phase 1 minimises the sum of artificials.
Nonbasic variables rest at a finite bound (or at zero when free), so box
bounds never become rows.

The basis inverse is kept explicitly and updated with one eta factor per
pivot; it is recomputed from scratch every ``refactor_every`` pivots. Pricing
is Dantzig (largest reduced cost, lowest index on ties) with a two-pass Harris
ratio test. After ``bland_after`` consecutive degenerate pivots the solver
switches to Bland's rule (lowest eligible index, textbook ratio test, lowest
variable index on ties) until a pivot makes progress again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dragphase.config import SolverOptions
from dragphase.lp_builder import LinearProgram

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"

_BASIC, _AT_LOWER, _AT_UPPER, _FREE = 0, 1, 2, 3
_PIVOT_TOL = 1e-9
_DEGENERATE_STEP = 1e-12


@dataclass
class LpSolution:
    status: str
    x: np.ndarray
    objective: float
    max_primal_residual: float  # equilibrated units, rows and bounds
    iterations: int
    phase1_iterations: int = 0
    infeasibility: float = 0.0  # phase-1 objective when it stopped
    bland_pivots: int = 0

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    def __init__(self, lp: LinearProgram, opts: SolverOptions):
        a = np.asarray(lp.a_matrix, dtype=float)
        b = np.asarray(lp.b, dtype=float)
        m, n = a.shape
        if b.shape != (m,) or lp.cost.shape != (n,):
            raise ValueError("LP dimension mismatch")
        self.m, self.n = m, n
        self.b = b
        self.opts = opts

        lower = np.asarray(lp.lower, dtype=float)
        upper = np.asarray(lp.upper, dtype=float)
        x_struct = np.where(np.isfinite(lower), lower, np.where(np.isfinite(upper), upper, 0.0))
        status_struct = np.where(
            np.isfinite(lower), _AT_LOWER, np.where(np.isfinite(upper), _AT_UPPER, _FREE)
        )
        slack0 = b - a @ x_struct
        art_rows = np.flatnonzero(slack0 < 0)
        na = art_rows.size
        self.n_art = na
        self.art_start = n + m

        cols = np.zeros((m, n + m + na))
        cols[:, :n] = a
        cols[:, n : n + m] = np.eye(m)
        cols[art_rows, n + m + np.arange(na)] = -1.0
        self.cols = cols
        self.lo = np.concatenate([lower, np.zeros(m + na)])
        self.up = np.concatenate([upper, np.full(m, np.inf), np.full(na, np.inf)])
        self.x = np.concatenate([x_struct, np.zeros(m + na)])
        self.status = np.concatenate([status_struct, np.full(m + na, _AT_LOWER)])

        self.basis = n + np.arange(m)
        sign = np.ones(m)
        self.basis[art_rows] = n + m + np.arange(na)
        sign[art_rows] = -1.0
        self.x[n + np.arange(m)] = np.maximum(slack0, 0.0)
        self.x[n + m + np.arange(na)] = -slack0[art_rows]
        self.status[self.basis] = _BASIC
        self.b_inv = np.diag(sign)
        self.since_refactor = 0
        self.iterations = 0
        self.bland_pivots = 0

    # -- linear algebra -----------------------------------------------------

    def refactor(self):
        self.b_inv = np.linalg.inv(self.cols[:, self.basis])
        x_nb = self.x.copy()
        x_nb[self.basis] = 0.0
        self.x[self.basis] = self.b_inv @ (self.b - self.cols @ x_nb)
        self.since_refactor = 0

    def _pivot(self, p: int, q: int, alpha: np.ndarray):
        row_p = self.b_inv[p] / alpha[p]
        self.b_inv -= np.outer(alpha, row_p)
        self.b_inv[p] = row_p
        self.basis[p] = q
        self.since_refactor += 1

    # -- one simplex run ----------------------------------------------------

    def run(self, cost: np.ndarray, max_iters: int, stop_below: float | None = None) -> str:
        opts = self.opts
        movable = self.up > self.lo
        degenerate_run = 0
        while True:
            if stop_below is not None and cost[self.basis] @ self.x[self.basis] <= stop_below:
                return OPTIMAL
            if self.iterations >= max_iters:
                return ITERATION_LIMIT
            if self.since_refactor >= opts.refactor_every:
                self.refactor()

            y = cost[self.basis] @ self.b_inv
            d = cost - y @ self.cols
            st = self.status
            inc = ((st == _AT_LOWER) | (st == _FREE)) & (d < -opts.opt_tol) & movable
            dec = ((st == _AT_UPPER) | (st == _FREE)) & (d > opts.opt_tol) & movable
            eligible = inc | dec
            if not eligible.any():
                return OPTIMAL

            bland = degenerate_run >= opts.bland_after
            if bland:
                q = int(np.argmax(eligible))
                self.bland_pivots += 1
            else:
                q = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            sigma = 1.0 if inc[q] else -1.0

            alpha = self.b_inv @ self.cols[:, q]
            g = sigma * alpha
            x_b = self.x[self.basis]
            lo_b = self.lo[self.basis]
            up_b = self.up[self.basis]
            down = g > _PIVOT_TOL
            up_ = g < -_PIVOT_TOL
            ratio = np.full(self.m, np.inf)
            with np.errstate(invalid="ignore"):
                ratio[down] = (x_b[down] - lo_b[down]) / g[down]
                ratio[up_] = (up_b[up_] - x_b[up_]) / (-g[up_])
            ratio = np.where(np.isnan(ratio), np.inf, ratio)
            span = self.up[q] - self.lo[q]

            if bland:
                theta_lim = ratio.min()
                if np.isfinite(theta_lim):
                    ties = np.flatnonzero(ratio <= theta_lim + 1e-12)
                    p = int(ties[np.argmin(self.basis[ties])])
                else:
                    p = -1
            else:
                relaxed = np.full(self.m, np.inf)
                tol = opts.feas_tol
                with np.errstate(invalid="ignore"):
                    relaxed[down] = (x_b[down] - lo_b[down] + tol) / g[down]
                    relaxed[up_] = (up_b[up_] - x_b[up_] + tol) / (-g[up_])
                relaxed = np.where(np.isnan(relaxed), np.inf, relaxed)
                theta_lim = relaxed.min()
                if np.isfinite(theta_lim):
                    cand = np.flatnonzero(ratio <= theta_lim)
                    p = int(cand[np.argmax(np.abs(g[cand]))])
                else:
                    p = -1

            if p < 0 and not np.isfinite(span):
                return UNBOUNDED

            self.iterations += 1
            if p < 0 or span <= max(ratio[p], 0.0):
                # bound flip, basis unchanged
                theta = span
                self.x[self.basis] = x_b - theta * g
                if sigma > 0:
                    self.x[q] = self.up[q]
                    st[q] = _AT_UPPER
                else:
                    self.x[q] = self.lo[q]
                    st[q] = _AT_LOWER
                degenerate_run = 0
                continue

            theta = max(ratio[p], 0.0)
            leaving = self.basis[p]
            self.x[self.basis] = x_b - theta * g
            self.x[q] = self.x[q] + sigma * theta
            if g[p] > 0:
                self.x[leaving] = self.lo[leaving]
                st[leaving] = _AT_LOWER
            else:
                self.x[leaving] = self.up[leaving]
                st[leaving] = _AT_UPPER
            st[q] = _BASIC
            self._pivot(p, q, alpha)
            if leaving >= self.art_start:
                # artificials never re-enter
                self.up[leaving] = 0.0
                movable[leaving] = False
            degenerate_run = degenerate_run + 1 if theta * abs(g[p]) <= _DEGENERATE_STEP else 0

    def infeasibility(self) -> float:
        return float(self.x[self.art_start :].sum())

    def fix_artificials(self):
        self.lo[self.art_start :] = 0.0
        self.up[self.art_start :] = 0.0


def _max_iters(lp: LinearProgram, opts: SolverOptions) -> int:
    if opts.max_iters is not None:
        return opts.max_iters
    m, n = lp.a_matrix.shape
    return 10 * (m + n) + 1000


def _finish(lp, tab: _Tableau, status: str, phase1_iters: int, infeas: float) -> LpSolution:
    x = tab.x[: tab.n].copy()
    row_viol = lp.a_matrix @ x - lp.b
    with np.errstate(invalid="ignore"):
        bound_viol = np.maximum(lp.lower - x, x - lp.upper)
    bound_viol = np.where(np.isnan(bound_viol), 0.0, bound_viol)
    resid = max(0.0, float(row_viol.max(initial=0.0)), float(bound_viol.max(initial=0.0)))
    return LpSolution(
        status=status,
        x=x,
        objective=float(lp.cost @ x),
        max_primal_residual=resid,
        iterations=tab.iterations,
        phase1_iterations=phase1_iters,
        infeasibility=infeas,
        bland_pivots=tab.bland_pivots,
    )


def _phase1(lp, opts):
    tab = _Tableau(lp, opts)
    limit = _max_iters(lp, opts)
    cost1 = np.zeros(tab.cols.shape[1])
    cost1[tab.art_start :] = 1.0
    status = OPTIMAL
    if tab.n_art:
        status = tab.run(cost1, limit, stop_below=opts.feas_tol)
    return tab, status, limit


def feasibility(lp: LinearProgram, opts: SolverOptions | None = None) -> tuple[bool, float, int]:
    """Phase 1 only: ``(feasible, phase-1 objective, iterations)``."""
    opts = opts or SolverOptions()
    tab, status, _ = _phase1(lp, opts)
    gap = tab.infeasibility()
    if status == ITERATION_LIMIT:
        return False, gap, tab.iterations
    return gap <= opts.feas_tol, gap, tab.iterations


def solve(lp: LinearProgram, opts: SolverOptions | None = None) -> LpSolution:
    opts = opts or SolverOptions()
    tab, status, limit = _phase1(lp, opts)
    p1_iters = tab.iterations
    gap = tab.infeasibility()
    if status == ITERATION_LIMIT:
        return _finish(lp, tab, ITERATION_LIMIT, p1_iters, gap)
    if gap > opts.feas_tol:
        return _finish(lp, tab, INFEASIBLE, p1_iters, gap)

    tab.fix_artificials()
    tab.refactor()
    cost2 = np.zeros(tab.cols.shape[1])
    cost2[: tab.n] = lp.cost
    status = tab.run(cost2, limit)
    return _finish(lp, tab, status, p1_iters, gap)
