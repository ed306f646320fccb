"""External-solver adapter: the same PreparedLP in, the same LpSolution out.

Delegates LP relaxations to HiGHS through scipy.optimize.linprog.  Row duals
are mapped back to this package's convention (<= rows nonpositive, >= rows
nonnegative, = rows free, minimization throughout); reduced costs are
recomputed from the duals so both backends report identical quantities.
"""

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .model import (
    LpSolution,
    PreparedLP,
    STATUS_INFEASIBLE,
    STATUS_NUMERIC,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
)


class _Split:
    """Rows regrouped into the A_ub / A_eq shape linprog wants."""

    def __init__(self, prep: PreparedLP):
        le = np.nonzero(prep.senses < 0)[0]
        ge = np.nonzero(prep.senses > 0)[0]
        eq = np.nonzero(prep.senses == 0)[0]
        self.ub_rows = np.concatenate([le, ge])
        self.eq_rows = eq
        blocks = []
        if len(le):
            blocks.append(prep.a[le])
        if len(ge):
            blocks.append(-prep.a[ge])
        self.a_ub = sp.vstack(blocks, format="csr") if blocks else None
        self.b_ub = (
            np.concatenate([prep.rhs[le], -prep.rhs[ge]]) if blocks else None
        )
        self.ge_mask = np.zeros(len(self.ub_rows), dtype=bool)
        self.ge_mask[len(le) :] = True
        self.a_eq = prep.a[eq] if len(eq) else None
        self.b_eq = prep.rhs[eq] if len(eq) else None


def _split_for(prep: PreparedLP) -> _Split:
    split = getattr(prep, "_highs_split", None)
    if split is None:
        split = _Split(prep)
        object.__setattr__(prep, "_highs_split", split)
    return split


def solve_prepared(
    prep: PreparedLP,
    lb: np.ndarray | None = None,
    ub: np.ndarray | None = None,
) -> LpSolution:
    lb = prep.lb if lb is None else np.asarray(lb, dtype=float)
    ub = prep.ub if ub is None else np.asarray(ub, dtype=float)
    if np.any(lb > ub + 1e-12):
        return LpSolution(status=STATUS_INFEASIBLE)
    split = _split_for(prep)
    res = linprog(
        c=prep.c,
        A_ub=split.a_ub,
        b_ub=split.b_ub,
        A_eq=split.a_eq,
        b_eq=split.b_eq,
        bounds=np.column_stack([lb, ub]),
        method="highs",
    )
    if res.status == 2:
        return LpSolution(status=STATUS_INFEASIBLE)
    if res.status == 3:
        return LpSolution(status=STATUS_UNBOUNDED)
    if res.status != 0:
        return LpSolution(status=STATUS_NUMERIC)

    duals = np.zeros(prep.num_rows)
    if split.a_ub is not None:
        marg = np.asarray(res.ineqlin.marginals)
        marg = np.where(split.ge_mask, -marg, marg)
        duals[split.ub_rows] = marg
    if split.a_eq is not None:
        duals[split.eq_rows] = np.asarray(res.eqlin.marginals)
    x = np.clip(res.x, lb, ub)
    reduced = prep.c - prep.a.T @ duals
    return LpSolution(
        status=STATUS_OPTIMAL,
        x=x,
        duals=duals,
        reduced_costs=reduced,
        objective=float(prep.c @ x) + prep.offset,
    )
