"""Persistent HiGHS sessions behind the adapter contract.

scipy vendors the HiGHS python core; when that private module is present
these helpers provide (a) hot-started node LP re-solves for the bundled
branch-and-bound (bounds are diffed against the session state, so the kept
basis makes child solves nearly free) and (b) whole-model MIP delegation
with the improving-solution pool.  Everything degrades gracefully: callers
check `available()` and fall back to the bundled paths.
"""

import math
import time

import numpy as np

from .model import (
    LpSolution,
    MipResult,
    PoolEntry,
    PreparedLP,
    STATUS_FEASIBLE,
    STATUS_INFEASIBLE,
    STATUS_LIMIT,
    STATUS_NUMERIC,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
)

try:  # scipy >= 1.15 ships the highspy core under scipy.optimize
    from scipy.optimize._highspy import _core as _hc
except ImportError:  # pragma: no cover - environment without the module
    _hc = None

_INF = 1e30


def available() -> bool:
    return _hc is not None


def _row_bounds(prep: PreparedLP) -> tuple[np.ndarray, np.ndarray]:
    lower = np.where(prep.senses >= 0, prep.rhs, -_INF)
    upper = np.where(prep.senses <= 0, prep.rhs, _INF)
    return lower, upper


def _build(prep: PreparedLP, mip: bool):
    lp = _hc.HighsLp()
    lp.num_col_ = prep.num_vars
    lp.num_row_ = prep.num_rows
    lp.col_cost_ = prep.c
    lp.col_lower_ = prep.lb
    lp.col_upper_ = prep.ub
    lower, upper = _row_bounds(prep)
    lp.row_lower_ = lower
    lp.row_upper_ = upper
    mat = _hc.HighsSparseMatrix()
    mat.format_ = _hc.MatrixFormat.kRowwise
    mat.num_col_ = prep.num_vars
    mat.num_row_ = prep.num_rows
    mat.start_ = prep.a.indptr.astype(np.int64)
    mat.index_ = prep.a.indices.astype(np.int64)
    mat.value_ = prep.a.data.astype(float)
    lp.a_matrix_ = mat
    if mip:
        lp.integrality_ = [
            _hc.HighsVarType.kInteger if f else _hc.HighsVarType.kContinuous
            for f in prep.integer
        ]
    h = _hc._Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", 0)
    h.passModel(lp)
    return h


class PersistentLP:
    """One HiGHS session reused across branch-and-bound node LP solves."""

    def __init__(self, prep: PreparedLP):
        self.prep = prep
        self.h = _build(prep, mip=False)
        self.cur_lb = prep.lb.copy()
        self.cur_ub = prep.ub.copy()

    def add_rows(self, rows_prep: PreparedLP, start: int) -> None:
        """Append the rows of rows_prep beyond index `start` to the session."""
        sub = rows_prep.a[start:]
        lower, upper = _row_bounds(rows_prep)
        self.h.addRows(
            sub.shape[0],
            lower[start:],
            upper[start:],
            sub.nnz,
            sub.indptr.astype(np.int32),
            sub.indices.astype(np.int32),
            sub.data.astype(float),
        )
        self.prep = rows_prep

    def solve(self, lb: np.ndarray, ub: np.ndarray) -> LpSolution:
        changed = np.nonzero((lb != self.cur_lb) | (ub != self.cur_ub))[0]
        if len(changed):
            self.h.changeColsBounds(
                len(changed),
                changed.astype(np.int32),
                lb[changed],
                ub[changed],
            )
            self.cur_lb[changed] = lb[changed]
            self.cur_ub[changed] = ub[changed]
        self.h.run()
        status = self.h.getModelStatus()
        if status == _hc.HighsModelStatus.kInfeasible:
            return LpSolution(status=STATUS_INFEASIBLE)
        if status in (
            _hc.HighsModelStatus.kUnbounded,
            _hc.HighsModelStatus.kUnboundedOrInfeasible,
        ):
            return LpSolution(status=STATUS_UNBOUNDED)
        if status != _hc.HighsModelStatus.kOptimal:
            return LpSolution(status=STATUS_NUMERIC)
        sol = self.h.getSolution()
        x = np.clip(np.asarray(sol.col_value), lb, ub)
        duals = np.asarray(sol.row_dual)
        return LpSolution(
            status=STATUS_OPTIMAL,
            x=x,
            duals=duals,
            reduced_costs=self.prep.c - self.prep.a.T @ duals,
            objective=float(self.prep.c @ x) + self.prep.offset,
        )


_MIP_LIMIT_STATUSES = None


def _limit_statuses():
    global _MIP_LIMIT_STATUSES
    if _MIP_LIMIT_STATUSES is None:
        s = _hc.HighsModelStatus
        _MIP_LIMIT_STATUSES = {
            s.kTimeLimit,
            s.kIterationLimit,
            s.kSolutionLimit,
            s.kObjectiveBound,
            s.kObjectiveTarget,
            s.kInterrupt,
            s.kMemoryLimit,
            s.kUnknown,
        }
    return _MIP_LIMIT_STATUSES


def solve_mip_session(
    prep: PreparedLP,
    time_limit: float | None,
    abs_gap: float,
    rel_gap: float,
    warm_start: np.ndarray | None = None,
    save_improving: bool = True,
):
    """One delegated MIP run; returns (status, x, objective, bound, nodes, saved)."""
    h = _build(prep, mip=True)
    h.setOptionValue("mip_abs_gap", abs_gap)
    h.setOptionValue("mip_rel_gap", rel_gap)
    if time_limit is not None:
        h.setOptionValue("time_limit", max(time_limit, 0.01))
    if save_improving:
        h.setOptionValue("mip_improving_solution_save", True)
    if warm_start is not None:
        sol = _hc.HighsSolution()
        sol.col_value = np.asarray(warm_start, dtype=float)
        h.setSolution(sol)
    h.run()
    status = h.getModelStatus()
    info = h.getInfo()
    nodes = max(int(info.mip_node_count), 1)
    saved = [
        (float(s.objective) + prep.offset, np.asarray(s.col_value))
        for s in h.getSavedMipSolutions()
    ]
    has_primal = info.primal_solution_status == _hc.kSolutionStatusFeasible
    x = np.asarray(h.getSolution().col_value) if has_primal else None
    obj = float(prep.c @ x) + prep.offset if x is not None else None
    bound = float(info.mip_dual_bound) + prep.offset
    if status == _hc.HighsModelStatus.kOptimal:
        return STATUS_OPTIMAL, x, obj, min(bound, obj), nodes, saved
    if status == _hc.HighsModelStatus.kInfeasible:
        return STATUS_INFEASIBLE, None, None, math.inf, nodes, saved
    if status in _limit_statuses():
        return STATUS_LIMIT, x, obj, bound if math.isfinite(bound) else -math.inf, nodes, saved
    return STATUS_NUMERIC, None, None, -math.inf, nodes, saved
