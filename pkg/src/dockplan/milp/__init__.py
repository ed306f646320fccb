"""Self-contained exact MILP layer: model IR, LP backends, branch-and-bound."""

from .bb import NumericError, dual_objective, lp_backend, solve_lp, solve_mip
from .model import (
    EQ,
    GE,
    LE,
    LpSolution,
    MipResult,
    Model,
    PoolEntry,
    PreparedLP,
    SearchOptions,
    STATUS_FEASIBLE,
    STATUS_INFEASIBLE,
    STATUS_LIMIT,
    STATUS_NUMERIC,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    add_rows,
    fix_variable,
    prepare,
    write_lp,
)

__all__ = [
    "EQ",
    "GE",
    "LE",
    "LpSolution",
    "MipResult",
    "Model",
    "NumericError",
    "PoolEntry",
    "PreparedLP",
    "SearchOptions",
    "STATUS_FEASIBLE",
    "STATUS_INFEASIBLE",
    "STATUS_LIMIT",
    "STATUS_NUMERIC",
    "STATUS_OPTIMAL",
    "STATUS_UNBOUNDED",
    "add_rows",
    "dual_objective",
    "fix_variable",
    "lp_backend",
    "prepare",
    "solve_lp",
    "solve_mip",
    "write_lp",
]
