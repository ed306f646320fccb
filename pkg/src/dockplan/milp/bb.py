"""Branch-and-bound over LP relaxations, with lazy cuts and a solution pool.

Nodes carry only bound overlays; the sparse row data is prepared once and
rebuilt only when the lazy callback contributes new rows.  Branching is on
the most fractional integer variable (ties to the lowest id), node order is
breadth-first unless configured otherwise, and when the objective is known
to take integer values on integer solutions every node bound is rounded up,
so an absolute gap below one certifies optimality.
"""

import heapq
import math
import time
from collections import deque

import numpy as np

from . import highs_backend, highs_persistent, simplex
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
    prepare,
)


class NumericError(RuntimeError):
    """An LP relaxation failed numerically; no answer is returned."""


def lp_backend(name: str | None):
    if name in (None, "auto", "highs"):
        return highs_backend.solve_prepared
    if name == "simplex":
        return simplex.solve_prepared
    raise ValueError(f"unknown LP backend {name!r}")


def solve_lp(model: Model, backend: str | None = None) -> LpSolution:
    """LP relaxation of the model (integrality ignored)."""
    return lp_backend(backend)(prepare(model))


class _NodeLpEngine:
    """Node-LP source for branch and bound; hot-started when possible."""

    def __init__(self, model: Model, backend_name: str | None):
        self.model = model
        self.cuts: list[tuple] = []
        self.prep = prepare(model)
        self.persistent = None
        self.fn = None
        if backend_name in (None, "auto", "highs") and highs_persistent.available():
            self.persistent = highs_persistent.PersistentLP(self.prep)
        else:
            self.fn = lp_backend(backend_name)

    def add_cuts(self, rows) -> None:
        start = self.prep.num_rows
        self.cuts.extend(rows)
        self.prep = prepare(self.model, self.cuts)
        if self.persistent is not None:
            self.persistent.add_rows(self.prep, start)

    def solve(self, lb: np.ndarray, ub: np.ndarray) -> LpSolution:
        if self.persistent is not None:
            return self.persistent.solve(lb, ub)
        return self.fn(self.prep, lb, ub)


def dual_objective(prep: PreparedLP, sol: LpSolution) -> float:
    """Value of the LP dual at the reported duals (for soundness checks)."""
    contrib = np.where(sol.reduced_costs > 0, prep.lb, prep.ub)
    return float(sol.duals @ prep.rhs + sol.reduced_costs @ contrib) + prep.offset


def _row_satisfied(coeffs, sense, rhs, x, tol=1e-6) -> bool:
    act = sum(coef * x[var] for var, coef in coeffs)
    if sense == LE:
        return act <= rhs + tol
    if sense == GE:
        return act >= rhs - tol
    return abs(act - rhs) <= tol


class _Node:
    __slots__ = ("lb", "ub", "bound", "seq", "depth")

    def __init__(self, lb, ub, bound, seq, depth):
        self.lb = lb
        self.ub = ub
        self.bound = bound
        self.seq = seq
        self.depth = depth


def solve_mip(model: Model, opts: SearchOptions | None = None) -> MipResult:
    """Exact MIP solve; dispatches to the bundled tree or the adapter."""
    opts = opts or SearchOptions()
    backend = opts.mip_backend
    if backend == "auto":
        backend = "highs" if highs_persistent.available() else "bb"
    if backend == "highs" and highs_persistent.available():
        return _solve_mip_delegated(model, opts)
    return _solve_mip_bb(model, opts)


def _solve_mip_bb(model: Model, opts: SearchOptions) -> MipResult:
    t_start = time.monotonic()
    engine = _NodeLpEngine(model, opts.lp_backend)
    prep = engine.prep
    int_idx = np.nonzero(prep.integer)[0]

    integral = opts.integral_objective
    if integral is None:
        coeffs_integral = all(float(c).is_integer() for c in prep.c)
        costed_are_int = all(prep.integer[j] for j in range(prep.num_vars) if prep.c[j] != 0.0)
        integral = coeffs_integral and costed_are_int and float(prep.offset).is_integer()

    def node_bound(z: float) -> float:
        return math.ceil(z - 1e-6) if integral else z

    incumbent: np.ndarray | None = None
    inc_obj = math.inf
    pool: list[PoolEntry] = []
    pool_keys: set = set()

    def candidate_key(x: np.ndarray):
        return tuple(int(round(x[j])) for j in int_idx)

    def accept(x: np.ndarray, obj: float) -> None:
        nonlocal incumbent, inc_obj
        improving = obj < inc_obj - 1e-9
        if improving:
            incumbent = x.copy()
            inc_obj = obj
        keep = improving or (
            opts.pool_threshold is not None and obj <= opts.pool_threshold + 1e-9
        )
        if keep:
            key = candidate_key(x)
            if key not in pool_keys:
                pool_keys.add(key)
                pool.append(PoolEntry(x=x.copy(), objective=obj))

    for ws in opts.warm_starts or []:
        x = np.asarray(ws, dtype=float)
        if len(x) != model.num_vars or not model.is_feasible(x):
            continue
        if opts.lazy_callback is not None:
            rows = [
                row
                for row in opts.lazy_callback(x)
                if not _row_satisfied(row[0], row[1], row[2], x)
            ]
            if rows:
                engine.add_cuts(rows)
                continue
        accept(x, model.objective_value(x))

    def cutoff(bound: float) -> bool:
        if incumbent is None:
            return False
        if integral:
            return bound >= inc_obj - 1e-9
        return bound >= inc_obj - opts.abs_gap

    seq = 0
    root = _Node(prep.lb.copy(), prep.ub.copy(), -math.inf, seq, 0)
    fifo: deque[_Node] = deque([root])
    heap: list[tuple[float, int, _Node]] = []
    if opts.node_order == "best":
        heap = [(root.bound, root.seq, root)]
        fifo = deque()

    def pop() -> _Node:
        if opts.node_order == "best":
            return heapq.heappop(heap)[2]
        if opts.node_order == "depth":
            return fifo.pop()
        return fifo.popleft()

    def push(node: _Node) -> None:
        if opts.node_order == "best":
            heapq.heappush(heap, (node.bound, node.seq, node))
        else:
            fifo.append(node)

    def open_nodes():
        return heap and [n for _, _, n in heap] or list(fifo)

    processed = 0
    status = None
    while fifo or heap:
        if opts.time_limit is not None and time.monotonic() - t_start > opts.time_limit:
            status = STATUS_LIMIT
            break
        if opts.max_nodes is not None and processed >= opts.max_nodes:
            status = STATUS_FEASIBLE if incumbent is not None else STATUS_LIMIT
            break
        node = pop()
        if cutoff(node.bound):
            continue
        processed += 1

        while True:  # cut loop: re-solve this node until no lazy row fires
            sol = engine.solve(node.lb, node.ub)
            if sol.status == STATUS_INFEASIBLE:
                break
            if sol.status != STATUS_OPTIMAL:
                raise NumericError(f"node LP ended with status {sol.status}")
            z = node_bound(sol.objective)
            node.bound = max(node.bound, z)
            if cutoff(z):
                break
            x = sol.x
            fracs = np.abs(x[int_idx] - np.round(x[int_idx]))
            if len(int_idx) and fracs.max(initial=0.0) > opts.int_tol:
                scores = np.minimum(fracs, 1.0 - fracs)
                j = int(int_idx[int(np.argmax(scores))])
                lo = math.floor(x[j] + opts.int_tol)
                down = _Node(node.lb.copy(), node.ub.copy(), z, seq + 1, node.depth + 1)
                down.ub[j] = lo
                up = _Node(node.lb.copy(), node.ub.copy(), z, seq + 2, node.depth + 1)
                up.lb[j] = lo + 1
                seq += 2
                push(down)
                push(up)
                break
            cand = x.copy()
            cand[int_idx] = np.round(cand[int_idx])
            violated = list(opts.lazy_callback(cand)) if opts.lazy_callback else []
            violated = [
                row for row in violated if not _row_satisfied(row[0], row[1], row[2], cand)
            ]
            if not violated:
                accept(cand, model.objective_value(cand))
                break
            engine.add_cuts(violated)
            kept = [e for e in pool if all(_row_satisfied(r[0], r[1], r[2], e.x) for r in violated)]
            if len(kept) != len(pool):
                pool[:] = kept
                pool_keys.clear()
                pool_keys.update(candidate_key(e.x) for e in pool)

    remaining = [n.bound for n in open_nodes()]
    if status is None:
        if incumbent is None:
            return MipResult(STATUS_INFEASIBLE, None, None, math.inf, processed, pool)
        bound = inc_obj
        return MipResult(STATUS_OPTIMAL, incumbent, inc_obj, bound, processed, pool)
    bound = min(remaining, default=inc_obj if incumbent is not None else -math.inf)
    if incumbent is not None:
        bound = min(bound, inc_obj)
    return MipResult(
        status,
        incumbent,
        inc_obj if incumbent is not None else None,
        bound,
        processed,
        pool,
    )


def _solve_mip_delegated(model: Model, opts: SearchOptions) -> MipResult:
    """Adapter path: hand the whole model to HiGHS, keeping the contract.

    Lazy rows are honored by re-solving with the violated rows appended
    until the incumbent passes the callback; the solution pool is HiGHS's
    improving-solution list (pool candidates that fail the callback are
    dropped rather than re-solved).
    """
    t_start = time.monotonic()
    cuts: list[tuple] = []
    warm = None
    best_warm = math.inf
    for ws in opts.warm_starts or []:
        x = np.asarray(ws, dtype=float)
        if len(x) == model.num_vars and model.is_feasible(x):
            obj = model.objective_value(x)
            if obj < best_warm:
                best_warm, warm = obj, x
    int_idx = [j for j in range(model.num_vars) if model.integer[j]]
    nodes_total = 0
    while True:
        remaining = None
        if opts.time_limit is not None:
            remaining = opts.time_limit - (time.monotonic() - t_start)
            if remaining <= 0:
                return MipResult(STATUS_LIMIT, None, None, -math.inf, nodes_total, [])
        prep = prepare(model, cuts)
        status, x, obj, bound, nodes, saved = highs_persistent.solve_mip_session(
            prep, remaining, opts.abs_gap, opts.rel_gap, warm_start=warm
        )
        nodes_total += nodes
        if status == STATUS_NUMERIC:
            raise NumericError("delegated MIP solve failed")
        if x is not None:
            x = x.copy()
            x[int_idx] = np.round(x[int_idx])
        if (
            status in (STATUS_OPTIMAL, STATUS_LIMIT)
            and x is not None
            and opts.lazy_callback is not None
        ):
            violated = [
                row
                for row in opts.lazy_callback(x)
                if not _row_satisfied(row[0], row[1], row[2], x)
            ]
            if violated:
                cuts.extend(violated)
                warm = None
                continue
        break

    pool: list[PoolEntry] = []
    seen = set()
    entries = [(obj, x)] if x is not None else []
    entries += saved
    for pobj, px in entries:
        # every entry here was improving when found, so it belongs in the
        # pool under either configuration; threshold-only extras are a
        # bundled-engine refinement the adapter cannot reproduce
        px = px.copy()
        px[int_idx] = np.round(px[int_idx])
        if not model.is_feasible(px):
            continue
        if opts.lazy_callback is not None and any(
            not _row_satisfied(r[0], r[1], r[2], px) for r in opts.lazy_callback(px)
        ):
            continue
        key = tuple(int(round(px[j])) for j in int_idx)
        if key in seen:
            continue
        seen.add(key)
        pool.append(PoolEntry(x=px, objective=model.objective_value(px)))
    return MipResult(status, x, obj, bound, nodes_total, pool)
