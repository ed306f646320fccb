"""Dantzig-Wolfe reformulation and the branch-and-price driver.

Columns are pseudo-schedules: complete multi-dock schedules encoded as arc
sets.  The restricted master optimizes a convex combination of columns,
carries the original binary arc variables through coupling rows (so
branching happens on arcs, applied to master and pricing alike), and per
truck bounds the arcs in and out at one.  The pricing problem is the full
arc-time model with served-indicator variables h, a dock-count row with an
idle-dock counter, and the waiting/miss objective adjusted by the master
duals; every integer solution it pools with reduced cost below the
tolerance becomes a new column after a fingerprint-deduplication check.

The pricing model here keeps the degree equalities between arcs and
scenario choice, so each pooled solution decodes to a feasible schedule by
construction; the tri-cycle elimination rows stay attached as lazy cuts
for the structures those equalities would otherwise permit.
"""

import hashlib
import math
import time
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import milp
from .compact import (
    BuildOptions,
    CompactBuild,
    DUMMY,
    VarIndex,
    _common_processing,
    build,
    decode_arcs,
)
from .core import (
    Assignment,
    CostBreakdown,
    Instance,
    Schedule,
    check_feasibility,
    evaluate,
    prune_dominated_scenarios,
)
from .heuristics import greedy_schedule
from .instgen import SDPT, SIPT

RC_TOL = 1e-6


@dataclass(frozen=True)
class PseudoSchedule:
    arcs: tuple
    served: frozenset
    cost: int
    fingerprint: str
    schedule: Schedule

    def serves(self, truck_id: int) -> bool:
        return truck_id in self.served


@dataclass
class Duals:
    u1: dict            # truck -> dual of its arcs-in row (<= 0)
    u2: dict            # truck -> dual of its arcs-out row (<= 0)
    alpha: float        # convexity row
    v: dict             # arc key -> coupling row dual


@dataclass
class BpStats:
    instance: str
    variant: str
    master_nodes: int = 0
    pricing_calls: int = 0
    columns_added: int = 0
    status: str = "Optimal"  # Optimal | Limit | Heuristic
    gap: float | None = None
    seconds: float = 0.0
    objective: int | None = None
    min_reduced_cost: float = math.inf
    one_master_node: bool = True

    def csv_row(self) -> str:
        gap = "" if self.gap is None else f"{self.gap:.6g}"
        obj = "" if self.objective is None else str(self.objective)
        return (
            f"{self.instance},{self.master_nodes},{self.pricing_calls},"
            f"{self.columns_added},{self.status},{gap},{self.seconds:.3f},{obj}"
        )


@dataclass
class BpOptions:
    time_limit: float | None = None
    pricing_time_limit: float | None = None
    rc_tol: float = RC_TOL
    max_master_nodes: int = 10_000
    build: BuildOptions = field(default_factory=BuildOptions)
    search: milp.SearchOptions = field(default_factory=milp.SearchOptions)


def _fingerprint(arcs) -> str:
    digest = hashlib.sha256()
    for key in sorted(arcs):
        digest.update(repr(key).encode())
    return digest.hexdigest()


def schedule_to_arcs(inst: Instance, variant: str, sched: Schedule) -> tuple:
    """Arc-set encoding of a schedule, chain-closing arcs at exact completion."""
    arcs = []
    for chain in sched.per_dock:
        prev = DUMMY
        for a in chain:
            truck = inst.truck_by_id(a.truck)
            if variant == SIPT:
                arcs.append((prev, a.truck, a.start))
            else:
                arcs.append((prev, a.truck, a.start, a.scenario_index))
            prev = a.truck
        if chain:
            last = inst.truck_by_id(chain[-1].truck)
            done = (
                chain[-1].start
                + last.setup
                + last.scenarios[chain[-1].scenario_index].processing
            )
            arcs.append((prev, DUMMY, done) if variant == SIPT else (prev, DUMMY, done, 0))
    return tuple(sorted(arcs))


def column_from_schedule(inst: Instance, variant: str, sched: Schedule) -> PseudoSchedule:
    arcs = schedule_to_arcs(inst, variant, sched)
    served = frozenset(a.truck for _, a in sched.served_assignments())
    cost = evaluate(inst, sched).total
    return PseudoSchedule(
        arcs=arcs,
        served=served,
        cost=cost,
        fingerprint=_fingerprint(arcs),
        schedule=sched,
    )


def initial_column(inst: Instance, variant: str = SDPT) -> PseudoSchedule:
    """Warm-start column: fill docks chronologically until capacity bites."""
    return column_from_schedule(inst, variant, greedy_schedule(inst))


def empty_column(inst: Instance, variant: str = SDPT) -> PseudoSchedule:
    """The all-unserved fallback; keeps every branched master feasible."""
    sched = Schedule(
        per_dock=tuple(() for _ in range(inst.docks)),
        unserved=frozenset(t.id for t in inst.trucks),
    )
    return column_from_schedule(inst, variant, sched)


# ---------------------------------------------------------------------------
# Restricted master problem


@dataclass
class RmpBuild:
    model: milp.Model
    x_of: dict          # real-successor arc key -> var id
    lam_of: list        # column position -> var id
    in_row: dict        # truck -> row id
    out_row: dict       # truck -> row id
    conv_row: int
    couple_row: dict    # arc key -> row id
    artificial_of: dict  # arc key fixed to 1 -> var id
    columns: list


def _real_arc_keys(index: VarIndex):
    return [k for k in index.x if k[1] != DUMMY]


def _degree(col: PseudoSchedule, truck_id: int) -> int:
    return 1 if truck_id in col.served else 0


def big_m(inst: Instance) -> int:
    return 1 + sum(t.miss_penalty for t in inst.trucks) + sum(
        t.wait_cost * inst.horizon for t in inst.trucks
    )


def build_rmp(
    inst: Instance,
    columns: list[PseudoSchedule],
    index: VarIndex,
    fixes: dict | None = None,
) -> RmpBuild:
    """Master over the given columns; branching fixes become arc bounds.

    Arcs fixed to one get an artificial slack column with prohibitive cost
    so the LP stays feasible (and prices correctly) before a column
    containing the arc exists.
    """
    if not columns:
        raise ValueError("the master needs at least one column")
    fixes = fixes or {}
    model = milp.Model("rmp")
    x_of = {}
    for key in _real_arc_keys(index):
        lo, hi = 0.0, 1.0
        if key in fixes:
            lo = hi = float(fixes[key])
        x_of[key] = model.add_var(
            lo, hi, integer=True, name="x[" + ",".join(map(str, key)) + "]"
        )
    lam_of = [
        model.add_var(0.0, 1.0, obj=float(col.cost), name=f"lam[{k}]")
        for k, col in enumerate(columns)
    ]
    artificial_of = {
        key: model.add_var(0.0, 1.0, obj=float(big_m(inst)), name=f"art[{key}]")
        for key, val in fixes.items()
        if val == 1
    }

    in_row, out_row = {}, {}
    for truck in inst.trucks:
        coeffs = {
            lam_of[k]: float(_degree(col, truck.id))
            for k, col in enumerate(columns)
            if col.serves(truck.id)
        }
        in_row[truck.id] = model.add_constraint(coeffs, milp.LE, 1.0, name=f"in[{truck.id}]")
        out_row[truck.id] = model.add_constraint(
            dict(coeffs), milp.LE, 1.0, name=f"out[{truck.id}]"
        )
    conv_row = model.add_constraint(
        {v: 1.0 for v in lam_of}, milp.EQ, 1.0, name="convexity"
    )
    arcs_with = {}
    for k, col in enumerate(columns):
        for key in col.arcs:
            if key[1] != DUMMY:
                arcs_with.setdefault(key, []).append(k)
    couple_row = {}
    for key, var in x_of.items():
        coeffs = {var: 1.0}
        for k in arcs_with.get(key, ()):
            coeffs[lam_of[k]] = -1.0
        if key in artificial_of:
            coeffs[artificial_of[key]] = -1.0
        couple_row[key] = model.add_constraint(
            coeffs, milp.EQ, 0.0, name="couple[" + ",".join(map(str, key)) + "]"
        )
    return RmpBuild(
        model=model,
        x_of=x_of,
        lam_of=lam_of,
        in_row=in_row,
        out_row=out_row,
        conv_row=conv_row,
        couple_row=couple_row,
        artificial_of=artificial_of,
        columns=list(columns),
    )


def solve_rmp_lp(rmp: RmpBuild, backend: str | None = None) -> tuple[Duals, milp.LpSolution]:
    sol = milp.solve_lp(rmp.model, backend=backend)
    if sol.status != milp.STATUS_OPTIMAL:
        raise RuntimeError(f"master LP ended {sol.status}; the fallback column should prevent this")
    duals = Duals(
        u1={j: float(sol.duals[r]) for j, r in rmp.in_row.items()},
        u2={j: float(sol.duals[r]) for j, r in rmp.out_row.items()},
        alpha=float(sol.duals[rmp.conv_row]),
        v={key: float(sol.duals[r]) for key, r in rmp.couple_row.items()},
    )
    for label, vals in (("u1", duals.u1), ("u2", duals.u2)):
        worst = max(vals.values(), default=0.0)
        if worst > 1e-6:
            raise AssertionError(f"{label} dual above zero: {worst}")
    duals.u1 = {j: min(v, 0.0) for j, v in duals.u1.items()}
    duals.u2 = {j: min(v, 0.0) for j, v in duals.u2.items()}
    return duals, sol


def reduced_cost(col: PseudoSchedule, duals: Duals) -> float:
    """Master reduced cost of a column under the given duals."""
    rc = float(col.cost) - duals.alpha
    for j in col.served:
        rc -= duals.u1[j] + duals.u2[j]
    for key in col.arcs:
        if key[1] != DUMMY:
            rc += duals.v.get(key, 0.0)
    return rc


# ---------------------------------------------------------------------------
# Pricing problem


@dataclass
class PricingBuild:
    base: CompactBuild
    h_of: dict


def build_pricing_base(inst: Instance, variant: str, opts: BuildOptions) -> PricingBuild:
    """Structural pricing model, built once per run; objectives come later."""
    base = build(inst, variant, replace(opts, combinatorial_cuts=False), pricing=True)
    return PricingBuild(base=base, h_of=base.h_of)


def build_pricing(
    pricing: PricingBuild,
    duals: Duals,
    fixes: dict | None = None,
) -> milp.Model:
    """Objective-adjusted copy of the pricing model for one set of duals."""
    base = pricing.base
    inst = base.inst
    model = base.model.copy()
    trucks = {t.id: t for t in inst.trucks}
    for key, var in base.index.x.items():
        i, j, t = key[0], key[1], key[2]
        coef = 0.0
        if j != DUMMY:
            truck = trucks[j]
            coef += truck.wait_cost * (t - truck.arrival)
            coef -= duals.u1[j]
            coef += duals.v.get(key, 0.0)
        if i != DUMMY:
            coef -= duals.u2[i]
        model.set_objective_coeff(var, coef)
    for (j, s), var in base.index.eta.items():
        model.set_objective_coeff(var, -float(trucks[j].miss_penalty))
    model.obj_offset = sum(t.miss_penalty for t in inst.trucks) - duals.alpha
    for key, value in (fixes or {}).items():
        model.fix(base.index.x[key], float(value))
    return model


def separate_tricycle(index: VarIndex, values, tol: float = 1e-6) -> list[tuple]:
    """Violated tri-cycle rows for an arc-value vector (complete pair scan)."""
    pair_sum: dict[tuple[int, int], float] = {}
    close_sum: dict[int, float] = {}
    open_sum: dict[int, float] = {}
    for key, var in index.x.items():
        i, j = key[0], key[1]
        val = float(values[var])
        if val == 0.0:
            continue
        if j == DUMMY:
            close_sum[i] = close_sum.get(i, 0.0) + val
        elif i == DUMMY:
            open_sum[j] = open_sum.get(j, 0.0) + val
            pair_sum[i, j] = pair_sum.get((i, j), 0.0) + val
        else:
            pair_sum[i, j] = pair_sum.get((i, j), 0.0) + val

    cuts = []
    trucks = sorted({k[0] for k in index.x if k[0] != DUMMY} | {k[1] for k in index.x if k[1] != DUMMY})
    for i in trucks:
        for j in trucks:
            if i == j:
                continue
            base = pair_sum.get((i, j), 0.0)
            if base + close_sum.get(i, 0.0) + close_sum.get(j, 0.0) > 2.0 + tol:
                coeffs = {}
                for key, var in index.x.items():
                    if (key[0], key[1]) == (i, j) or (
                        key[1] == DUMMY and key[0] in (i, j)
                    ):
                        coeffs[var] = 1.0
                cuts.append((coeffs, milp.LE, 2.0))
            if base + open_sum.get(i, 0.0) + open_sum.get(j, 0.0) > 2.0 + tol:
                coeffs = {}
                for key, var in index.x.items():
                    if (key[0], key[1]) == (i, j) or (
                        key[0] == DUMMY and key[1] in (i, j)
                    ):
                        coeffs[var] = 1.0
                cuts.append((coeffs, milp.LE, 2.0))
    return cuts


# ---------------------------------------------------------------------------
# Branch-and-price driver


def _ceil_int(value: float) -> int:
    return math.ceil(value - 1e-6)


def branch_and_price(
    inst: Instance,
    variant: str = SDPT,
    opts: BpOptions | None = None,
) -> tuple[Schedule | None, CostBreakdown | None, BpStats]:
    opts = opts or BpOptions()
    t0 = time.monotonic()
    stats = BpStats(instance=inst.name, variant=variant)

    work = inst
    index_back: dict[int, dict[int, int]] = {}
    if opts.build.prune_dominance:
        work, prune_report = prune_dominated_scenarios(inst)
        index_back = {
            j: {new: old for old, new in mapping.items()}
            for j, mapping in prune_report.index_map.items()
        }

    pricing = build_pricing_base(work, variant, opts.build)
    index = pricing.base.index

    pool: dict[str, PseudoSchedule] = {}
    columns: list[PseudoSchedule] = []

    def add_column(col: PseudoSchedule) -> bool:
        known = pool.get(col.fingerprint)
        if known is not None:
            if known.arcs != col.arcs:
                raise AssertionError("fingerprint collision with differing arc sets")
            return False
        pool[col.fingerprint] = col
        columns.append(col)
        return True

    add_column(initial_column(work, variant))
    add_column(empty_column(work, variant))
    stats.columns_added = 0  # the seeds are not generated columns

    incumbent: PseudoSchedule | None = min(columns, key=lambda c: c.cost)
    inc_obj = incumbent.cost

    def remaining() -> float | None:
        if opts.time_limit is None:
            return None
        return opts.time_limit - (time.monotonic() - t0)

    def out_of_time() -> bool:
        r = remaining()
        return r is not None and r <= 0

    queue: deque[tuple[dict, float]] = deque()
    queue.append(({}, -math.inf))
    open_bounds: list[float] = []
    certificate = True

    tricycle = lambda values: separate_tricycle(index, values)  # noqa: E731

    while queue:
        if out_of_time() or stats.master_nodes >= opts.max_master_nodes:
            stats.status = "Limit"
            open_bounds.extend(b for _, b in queue)
            break
        fixes, parent_bound = queue.popleft()
        if parent_bound >= inc_obj:
            continue
        stats.master_nodes += 1

        node_lp = None
        duals = None
        stalled = False
        while True:  # column generation at this node
            rmp = build_rmp(work, columns, index, fixes)
            duals, node_lp = solve_rmp_lp(rmp)
            if out_of_time():
                stats.status = "Limit"
                break
            pricing_model = build_pricing(pricing, duals, fixes)
            budget = remaining()
            if opts.pricing_time_limit is not None:
                budget = (
                    opts.pricing_time_limit
                    if budget is None
                    else min(budget, opts.pricing_time_limit)
                )
            search = replace(
                opts.search,
                pool_threshold=-opts.rc_tol,
                lazy_callback=tricycle,
                time_limit=budget,
                warm_starts=None,
                integral_objective=False,
            )
            res = milp.solve_mip(pricing_model, search)
            stats.pricing_calls += 1
            fresh = 0
            for entry in res.pool:
                if entry.objective >= -opts.rc_tol:
                    continue
                sched = decode_arcs(work, pricing.base, entry.x)
                col = column_from_schedule(work, variant, sched)
                rc = reduced_cost(col, duals)
                if abs(rc - entry.objective) > 1e-4 * max(1.0, abs(rc)):
                    raise AssertionError(
                        f"pricing objective {entry.objective} disagrees with "
                        f"reduced cost {rc}"
                    )
                if add_column(col):
                    fresh += 1
            stats.columns_added += fresh
            if fresh:
                continue
            if res.status == milp.STATUS_OPTIMAL:
                stats.min_reduced_cost = min(stats.min_reduced_cost, res.objective)
                break
            # pricing hit its limit without a usable column: the paper's
            # stall criterion; keep the incumbent, mark the run heuristic
            stalled = True
            break
        if stats.status == "Limit":
            open_bounds.extend([parent_bound] + [b for _, b in queue])
            break
        if stalled:
            stats.status = "Heuristic"
            certificate = False
            open_bounds.extend([parent_bound] + [b for _, b in queue])
            break

        node_bound = _ceil_int(node_lp.objective)
        if node_bound >= inc_obj:
            continue

        mip_search = replace(
            opts.search,
            time_limit=remaining(),
            warm_starts=None,
            integral_objective=True,
        )
        mip_res = milp.solve_mip(rmp.model, mip_search)
        node_int_obj = None
        if mip_res.x is not None and not any(
            mip_res.x[v] > 1e-6 for v in rmp.artificial_of.values()
        ):
            active = [
                k
                for k, v in enumerate(rmp.lam_of)
                if mip_res.x[v] > 1e-6
            ]
            if active:
                best_k = max(active, key=lambda k: (mip_res.x[rmp.lam_of[k]], -k))
                col = rmp.columns[best_k]
                node_int_obj = col.cost
                if col.cost < inc_obj:
                    incumbent, inc_obj = col, col.cost
        if node_int_obj is not None and node_int_obj - node_lp.objective < 1.0 - 1e-9:
            continue  # node solved: integer master matches its LP bound
        # branch on the most fractional arc variable, lowest id on ties
        frac_key, frac_score = None, -1.0
        for key, var in rmp.x_of.items():
            val = node_lp.x[var]
            score = min(val - math.floor(val), math.ceil(val) - val)
            if score > frac_score + 1e-12:
                frac_key, frac_score = key, score
        if frac_key is None or frac_score <= 1e-6:
            continue  # integral LP: the master MIP value equals the bound
        stats.one_master_node = False
        for value in (0, 1):
            child = dict(fixes)
            child[frac_key] = value
            queue.append((child, node_bound))

    stats.seconds = time.monotonic() - t0
    bound = min(open_bounds, default=inc_obj)
    if stats.status == "Optimal":
        bound = inc_obj
        stats.gap = None
    else:
        stats.gap = (inc_obj - bound) / inc_obj if inc_obj else 0.0
    if not certificate and stats.status == "Optimal":
        stats.status = "Heuristic"

    schedule = incumbent.schedule
    if index_back:
        schedule = Schedule(
            per_dock=tuple(
                tuple(
                    Assignment(
                        a.truck,
                        index_back.get(a.truck, {}).get(a.scenario_index, a.scenario_index),
                        a.start,
                    )
                    for a in chain
                )
                for chain in schedule.per_dock
            ),
            unserved=schedule.unserved,
        )
    violations = check_feasibility(inst, schedule)
    if violations:
        raise AssertionError(f"incumbent schedule infeasible: {violations[0].message}")
    cost = evaluate(inst, schedule)
    if cost.total != inc_obj:
        raise AssertionError(f"incumbent cost mismatch: {cost.total} vs {inc_obj}")
    stats.objective = cost.total
    return schedule, cost, stats
