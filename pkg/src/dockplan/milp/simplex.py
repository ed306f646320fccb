"""Bundled LP engine: bounded-variable primal simplex, dense tableau.

Two phases: phase one minimizes the sum of artificial variables (one per
row) to find a feasible basis, phase two optimizes the real objective.
Entering variable is chosen by the largest reduced-cost violation, falling
back to Bland's rule permanently once the objective stalls, which makes
cycling impossible.  On success the basis is refactorized once against the
original data (numpy solve) so the reported primal/dual values do not carry
accumulated pivot drift.
"""

import numpy as np

from .model import (
    LpSolution,
    PreparedLP,
    STATUS_INFEASIBLE,
    STATUS_NUMERIC,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
)

_ENTER_TOL = 1e-9
_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-7
_STALL_LIMIT = 200


class _Tableau:
    def __init__(self, prep: PreparedLP, lb: np.ndarray, ub: np.ndarray):
        m = prep.num_rows
        n = prep.num_vars
        slack_rows = np.nonzero(prep.senses != 0)[0]
        k = len(slack_rows)
        self.m, self.n, self.k = m, n, k
        self.ncols = n + k + m

        a = np.zeros((m, self.ncols))
        a[:, :n] = prep.a.toarray()
        for pos, row in enumerate(slack_rows):
            a[row, n + pos] = 1.0 if prep.senses[row] < 0 else -1.0

        self.lb = np.concatenate([lb, np.zeros(k + m)])
        self.ub = np.concatenate([ub, np.full(k + m, np.inf)])

        # every nonbasic column starts exactly on a bound (structurals on the
        # bound nearer zero, slacks on zero); artificials absorb the residual
        val = np.zeros(self.ncols)
        use_upper = np.abs(ub) < np.abs(lb)
        val[:n] = np.where(use_upper, ub, lb)
        resid = prep.rhs - a[:, : n + k] @ val[: n + k]

        sign = np.where(resid >= 0.0, 1.0, -1.0)
        for i in range(m):
            a[i, n + k + i] = sign[i]
        val[n + k :] = np.abs(resid)

        self.a_start = a
        self.t = a * sign[:, None]
        self.val = val
        self.basis = np.arange(n + k, n + k + m)
        self.in_basis = np.zeros(self.ncols, dtype=bool)
        self.in_basis[self.basis] = True
        self.at_upper = np.zeros(self.ncols, dtype=bool)
        self.at_upper[:n] = use_upper
        self.rhs = prep.rhs.copy()
        self.prep = prep

    def _iterate(self, cost: np.ndarray, max_iter: int) -> str:
        bland = False
        stall = 0
        for _ in range(max_iter):
            d = cost - cost[self.basis] @ self.t
            movable = ~self.in_basis & (self.ub - self.lb > 0)
            down = movable & ~self.at_upper & (d < -_ENTER_TOL)
            up = movable & self.at_upper & (d > _ENTER_TOL)
            candidates = np.nonzero(down | up)[0]
            if len(candidates) == 0:
                return STATUS_OPTIMAL
            if bland:
                e = int(candidates[0])
            else:
                e = int(candidates[np.argmax(np.abs(d[candidates]))])
            direction = -1.0 if self.at_upper[e] else 1.0

            col = self.t[:, e]
            rate = -direction * col  # basic value change per unit step
            step = self.ub[e] - self.lb[e]
            leave_row = -1
            bval = self.val[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                lim_up = np.where(rate > _PIVOT_TOL, (self.ub[self.basis] - bval) / rate, np.inf)
                lim_dn = np.where(rate < -_PIVOT_TOL, (self.lb[self.basis] - bval) / rate, np.inf)
            limits = np.minimum(lim_up, lim_dn)
            limits = np.maximum(limits, 0.0)
            row_min = limits.min() if self.m else np.inf
            if row_min < step:
                step = row_min
                ties = np.nonzero(limits <= row_min + 1e-12)[0]
                leave_row = int(ties[np.argmin(self.basis[ties])])
            if not np.isfinite(step):
                return STATUS_UNBOUNDED

            if step <= 1e-12:
                stall += 1
                if stall >= _STALL_LIMIT:
                    bland = True
            else:
                stall = 0

            self.val[self.basis] += rate * step
            self.val[e] += direction * step
            if leave_row < 0:
                self.at_upper[e] = not self.at_upper[e]
                continue

            leaving = self.basis[leave_row]
            hit_upper = rate[leave_row] > 0
            self.val[leaving] = self.ub[leaving] if hit_upper else self.lb[leaving]
            self.at_upper[leaving] = bool(hit_upper)
            self.in_basis[leaving] = False
            self.in_basis[e] = True
            self.basis[leave_row] = e

            piv = self.t[leave_row, e]
            self.t[leave_row] /= piv
            other = self.t[:, e].copy()
            other[leave_row] = 0.0
            self.t -= np.outer(other, self.t[leave_row])
        return STATUS_NUMERIC


def solve_prepared(
    prep: PreparedLP,
    lb: np.ndarray | None = None,
    ub: np.ndarray | None = None,
) -> LpSolution:
    """Solve the LP relaxation of a prepared model with the bundled simplex."""
    lb = prep.lb if lb is None else lb
    ub = prep.ub if ub is None else ub
    n, m = prep.num_vars, prep.num_rows
    if np.any(lb > ub + 1e-12):
        return LpSolution(status=STATUS_INFEASIBLE)
    if m == 0:
        x = np.where(prep.c >= 0, lb, ub)
        return LpSolution(
            status=STATUS_OPTIMAL,
            x=x,
            duals=np.zeros(0),
            reduced_costs=prep.c.copy(),
            objective=float(prep.c @ x) + prep.offset,
        )

    tab = _Tableau(prep, np.asarray(lb, dtype=float), np.asarray(ub, dtype=float))
    max_iter = 20000 + 50 * (m + n)

    phase1 = np.zeros(tab.ncols)
    phase1[n + tab.k :] = 1.0
    status = tab._iterate(phase1, max_iter)
    if status != STATUS_OPTIMAL:
        # phase one is bounded below by zero, so anything else is numeric
        return LpSolution(status=STATUS_NUMERIC)
    scale = max(1.0, float(np.abs(prep.rhs).max(initial=0.0)))
    if float(phase1 @ tab.val) > _FEAS_TOL * scale * 10:
        return LpSolution(status=STATUS_INFEASIBLE)

    tab.ub[n + tab.k :] = 0.0
    tab.val[n + tab.k :] = np.minimum(tab.val[n + tab.k :], 0.0)
    cost = np.zeros(tab.ncols)
    cost[:n] = prep.c
    status = tab._iterate(cost, max_iter)
    if status != STATUS_OPTIMAL:
        return LpSolution(status=status)
    return _refactorized_solution(prep, tab, lb, ub)


def _refactorized_solution(prep, tab, lb, ub) -> LpSolution:
    """Recompute the basic solution and duals from original data."""
    n, m = prep.num_vars, prep.num_rows
    basis = tab.basis
    bmat = tab.a_start[:, basis]
    nonbasic = np.array([j for j in range(tab.ncols) if not tab.in_basis[j]], dtype=int)
    xn = np.where(tab.at_upper[nonbasic], tab.ub[nonbasic], tab.lb[nonbasic])
    xn = np.nan_to_num(xn, posinf=0.0, neginf=0.0)  # unbounded slacks sit at 0
    rhs_eff = tab.rhs - tab.a_start[:, nonbasic] @ xn
    try:
        xb = np.linalg.solve(bmat, rhs_eff)
        cost = np.zeros(tab.ncols)
        cost[:n] = prep.c
        y = np.linalg.solve(bmat.T, cost[basis])
    except np.linalg.LinAlgError:
        xb = tab.val[basis]
        y = None

    x_full = np.empty(tab.ncols)
    x_full[nonbasic] = xn
    x_full[basis] = xb
    x = x_full[:n]

    resid = tab.a_start @ x_full - tab.rhs
    if (
        float(np.abs(resid).max(initial=0.0)) > 1e-5
        or np.any(x < lb - 1e-5)
        or np.any(x > ub + 1e-5)
        or y is None
    ):
        return LpSolution(status=STATUS_NUMERIC)
    np.clip(x, lb, ub, out=x)

    reduced = prep.c - prep.a.T @ y
    return LpSolution(
        status=STATUS_OPTIMAL,
        x=x,
        duals=y,
        reduced_costs=reduced,
        objective=float(prep.c @ x) + prep.offset,
    )
