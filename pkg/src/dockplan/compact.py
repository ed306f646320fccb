"""Compact time-indexed formulation, preprocessing, and its exact solver.

Arc variables x follow the graphical convention: x(i, j, t, s) fires when
truck j starts its service process at period t under scenario s, directly
after truck i on the same dock (i = 0 is the dummy opening the dock, and
arcs (i, 0, t) close a dock's chain; idle docks are counted by one integer
variable).  Under the scenario-invariant variant the scenario index
collapses on the arcs, x(i, j, t), while scenario choice stays on the
occupancy side (y, eta).

Window validity (start no earlier than arrival, completion by the
deadline, occupancy only inside the service window, a single dummy
scenario on chain-closing arcs) is built into variable materialization:
without it the printed resource rows would not see out-of-window
occupancy and the waiting objective could go negative.  The optional
preprocessing (`fixing`) adds the predecessor-completion and horizon-end
rules on top; `symmetry` adds the immediate-discharge rows.  Both are
optimum-preserving and toggleable so the safety claims can be tested.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import milp
from .core import (
    Assignment,
    CostBreakdown,
    Instance,
    Schedule,
    ValidationError,
    check_feasibility,
    evaluate,
    prune_dominated_scenarios,
)
from .heuristics import greedy_schedule
from .instgen import SDPT, SIPT

DUMMY = 0


class DecodeError(RuntimeError):
    """Arc values did not form clean dock chains; indicates a model bug."""


@dataclass
class BuildOptions:
    fixing: bool = True
    symmetry: bool = True
    combinatorial_cuts: bool = False
    prune_dominance: bool = True


@dataclass
class FixingReport:
    """Counts of index tuples excluded per rule (mandatory rules included)."""

    start_after_deadline: int = 0  # t > d_j
    start_before_arrival: int = 0  # t < r_j
    predecessor_unfinished: int = 0  # t < r_i + setup_i + min processing_i
    completion_after_deadline: int = 0  # t + setup_j + p > d_j
    dummy_horizon: int = 0  # i = 0 and t + p + setup_j > horizon
    y_outside_window: int = 0
    dummy_scenario: int = 0  # chain-closing arcs beyond the dummy scenario

    def total(self) -> int:
        return (
            self.start_after_deadline
            + self.start_before_arrival
            + self.predecessor_unfinished
            + self.completion_after_deadline
            + self.dummy_horizon
            + self.y_outside_window
            + self.dummy_scenario
        )


@dataclass
class VarIndex:
    variant: str
    x: dict = field(default_factory=dict)  # (i,j,t,s) or (i,j,t) -> var id
    y: dict = field(default_factory=dict)  # (j,t,s) -> var id
    eta: dict = field(default_factory=dict)  # (j,s) -> var id
    z: dict = field(default_factory=dict)  # j -> var id
    x000: int = -1

    def arc_start(self, key) -> int:
        return key[2]

    def arcs_into(self, j: int):
        return [k for k in self.x if k[1] == j]

    def arcs_out_of(self, i: int):
        return [k for k in self.x if k[0] == i]


@dataclass
class CompactBuild:
    inst: Instance
    variant: str
    model: milp.Model
    index: VarIndex
    fixing_report: FixingReport
    fixing_applied: bool
    symmetry_rows: int = 0
    pricing: bool = False
    h_of: dict = field(default_factory=dict)  # truck -> served-indicator var


def _common_processing(truck) -> int:
    times = {s.processing for s in truck.scenarios}
    if len(times) != 1:
        raise ValidationError(
            f"truck {truck.id}: scenario-invariant variant requires one "
            f"processing time, got {sorted(times)}"
        )
    return times.pop()


def _min_completion_offset(truck) -> int:
    """Earliest completion of a truck relative to its arc start."""
    return truck.setup + min(s.processing for s in truck.scenarios)


def build(
    inst: Instance,
    variant: str,
    opts: BuildOptions | None = None,
    pricing: bool = False,
) -> CompactBuild:
    """Materialize the model; returns the build with its fixing report.

    With `pricing` the miss bookkeeping changes shape: no z variables (a
    truck may simply stay unserved), explicit served indicators h with a
    dock-count row tied to the idle-dock counter, and a zero objective
    (the caller installs the dual-adjusted costs).
    """
    opts = opts or BuildOptions()
    if variant not in (SIPT, SDPT):
        raise ValueError(f"variant must be '{SIPT}' or '{SDPT}', got {variant!r}")
    if variant == SIPT:
        for truck in inst.trucks:
            _common_processing(truck)

    horizon = inst.horizon
    model = milp.Model(f"compact-{variant}-{inst.name}")
    index = VarIndex(variant=variant)
    report = FixingReport()
    trucks = {t.id: t for t in inst.trucks}
    earliest_done = {i: trucks[i].arrival + _min_completion_offset(trucks[i]) for i in trucks}

    def predecessors(j: int, t: int):
        """Dummy plus every other truck, minus the optional completion rule."""
        for i in [DUMMY] + [i for i in trucks if i != j]:
            if opts.fixing and i != DUMMY and t < earliest_done[i]:
                report.predecessor_unfinished += 1
                continue
            yield i

    # z and eta first so decode can read scenario choices cheaply
    h_of: dict[int, int] = {}
    for j, truck in trucks.items():
        if pricing:
            h_of[j] = model.add_var(0, 1, integer=True, name=f"h[{j}]")
        else:
            index.z[j] = model.add_var(
                0, 1, obj=truck.miss_penalty, integer=True, name=f"z[{j}]"
            )
        for s in range(len(truck.scenarios)):
            index.eta[j, s] = model.add_var(0, 1, integer=True, name=f"eta[{j},{s}]")
    for j, truck in trucks.items():
        for s, scen in enumerate(truck.scenarios):
            for t in range(truck.arrival + truck.setup + 1, truck.deadline + 1):
                index.y[j, t, s] = model.add_var(0, 1, integer=True, name=f"y[{j},{t},{s}]")
            report.y_outside_window += (horizon + 1) - (
                truck.deadline - truck.arrival - truck.setup
            )

    def add_arc(i: int, j: int, t: int, s: int | None):
        key = (i, j, t) if s is None else (i, j, t, s)
        truck = trucks[j]
        cost = truck.wait_cost * (t - truck.arrival)
        index.x[key] = model.add_var(
            0, 1, obj=cost, integer=True, name="x[" + ",".join(map(str, key)) + "]"
        )

    for j, truck in trucks.items():
        scen_space = (
            [(None, _common_processing(truck))]
            if variant == SIPT
            else [(s, scen.processing) for s, scen in enumerate(truck.scenarios)]
        )
        for s, p in scen_space:
            for t in range(0, horizon + 1):
                if t < truck.arrival:
                    report.start_before_arrival += len(trucks)
                    continue
                if t > truck.deadline:
                    report.start_after_deadline += len(trucks)
                    continue
                if t + truck.setup + p > truck.deadline:
                    report.completion_after_deadline += len(trucks)
                    continue
                for i in predecessors(j, t):
                    if (
                        opts.fixing
                        and i == DUMMY
                        and t + p + truck.setup > horizon
                    ):
                        report.dummy_horizon += 1
                        continue
                    add_arc(i, j, t, s)

    # chain-closing arcs carry only the dummy scenario
    for i, truck in trucks.items():
        report.dummy_scenario += (len(truck.scenarios) - 1) * (horizon + 1)
        for t in range(0, horizon + 1):
            if opts.fixing and t < earliest_done[i]:
                report.predecessor_unfinished += 1
                continue
            key = (i, DUMMY, t) if variant == SIPT else (i, DUMMY, t, 0)
            index.x[key] = model.add_var(
                0, 1, integer=True, name="x[" + ",".join(map(str, key)) + "]"
            )
    index.x000 = model.add_var(0, inst.docks, integer=True, name="x000")

    _emit_rows(inst, variant, model, index, h_of)
    build_obj = CompactBuild(
        inst=inst,
        variant=variant,
        model=model,
        index=index,
        fixing_report=report,
        fixing_applied=opts.fixing,
        pricing=pricing,
        h_of=h_of,
    )
    if opts.symmetry:
        build_obj.symmetry_rows = add_symmetry(inst, build_obj)
    return build_obj


def _emit_rows(
    inst: Instance,
    variant: str,
    model: milp.Model,
    index: VarIndex,
    h_of: dict | None = None,
) -> None:
    pricing = bool(h_of)
    trucks = {t.id: t for t in inst.trucks}
    arcs_in: dict[int, list] = {j: [] for j in trucks}
    arcs_out: dict[int, list] = {j: [] for j in trucks}
    dummy_out, dummy_in = [], []
    for key in index.x:
        i, j = key[0], key[1]
        if j == DUMMY:
            dummy_in.append(key)
            arcs_out[i].append(key)
            continue
        arcs_in[j].append(key)
        if i == DUMMY:
            dummy_out.append(key)
        else:
            arcs_out[i].append(key)

    model.add_constraint(
        {index.x[k]: 1.0 for k in dummy_out} | {index.x000: 1.0},
        milp.EQ,
        inst.docks,
        name="dock_out",
    )
    model.add_constraint(
        {index.x[k]: 1.0 for k in dummy_in} | {index.x000: 1.0},
        milp.EQ,
        inst.docks,
        name="dock_in",
    )

    for j, truck in trucks.items():
        etas = {index.eta[j, s]: -1.0 for s in range(len(truck.scenarios))}
        model.add_constraint(
            {index.x[k]: 1.0 for k in arcs_in[j]} | etas, milp.EQ, 0.0, name=f"deg_in[{j}]"
        )
        model.add_constraint(
            {index.x[k]: 1.0 for k in arcs_out[j]} | etas, milp.EQ, 0.0, name=f"deg_out[{j}]"
        )
        if pricing:
            model.add_constraint(
                {index.eta[j, s]: 1.0 for s in range(len(truck.scenarios))}
                | {h_of[j]: -1.0},
                milp.EQ,
                0.0,
                name=f"serve[{j}]",
            )
        else:
            model.add_constraint(
                {index.eta[j, s]: 1.0 for s in range(len(truck.scenarios))}
                | {index.z[j]: 1.0},
                milp.EQ,
                1.0,
                name=f"serve[{j}]",
            )
    if pricing:
        # served trucks minus truck-to-truck arcs equals the busy dock count
        coeffs = {h_of[j]: 1.0 for j in trucks}
        for key in index.x:
            if key[0] != DUMMY and key[1] != DUMMY:
                coeffs[index.x[key]] = coeffs.get(index.x[key], 0.0) - 1.0
        coeffs[index.x000] = 1.0
        model.add_constraint(coeffs, milp.EQ, inst.docks, name="chain_count")

    # sequencing and occupancy linking, aggregated over predecessors
    grouped: dict[tuple, list] = {}
    for key in index.x:
        if key[1] == DUMMY:
            continue
        grouped.setdefault(key[1:], []).append(key)
    for tail, keys in grouped.items():
        j, t = tail[0], tail[1]
        truck = trucks[j]
        if variant == SIPT:
            p = _common_processing(truck)
            period_y = [
                [index.y[j, tp, s] for s in range(len(truck.scenarios))]
                for tp in truck.service_periods(t, truck.scenarios[0])
            ]
            label = f"{j},{t}"
        else:
            s = tail[2]
            p = truck.scenarios[s].processing
            period_y = [
                [index.y[j, tp, s]]
                for tp in truck.service_periods(t, truck.scenarios[s])
            ]
            label = f"{j},{t},{s}"
        done = t + p + truck.setup
        successors = {
            index.x[k]: -1.0 for k in arcs_out[j] if index.arc_start(k) >= done
        }
        model.add_constraint(
            {index.x[k]: 1.0 for k in keys} | successors,
            milp.LE,
            0.0,
            name=f"seq[{label}]",
        )
        arc_sum = {index.x[k]: 1.0 for k in keys}
        for tp, ys in zip(
            truck.service_periods(t, truck.scenarios[0 if variant == SIPT else tail[2]]),
            period_y,
        ):
            coeffs = dict(arc_sum)
            for v in ys:
                coeffs[v] = coeffs.get(v, 0.0) - 1.0
            model.add_constraint(coeffs, milp.LE, 0.0, name=f"link[{label}@{tp}]")

    for (j, s), eta_id in index.eta.items():
        truck = trucks[j]
        scen = truck.scenarios[s]
        window = {
            index.y[j, t, s]: 1.0
            for t in range(truck.arrival + truck.setup + 1, truck.deadline + 1)
        }
        model.add_constraint(
            window | {eta_id: -float(scen.processing)}, milp.EQ, 0.0, name=f"cnt[{j},{s}]"
        )
    for (j, t, s), y_id in index.y.items():
        model.add_constraint(
            {y_id: 1.0, index.eta[j, s]: -1.0}, milp.LE, 0.0, name=f"ylim[{j},{t},{s}]"
        )

    caps = inst.capacities()
    by_period: dict[int, list] = {}
    for (j, t, s), y_id in index.y.items():
        by_period.setdefault(t, []).append((j, s, y_id))
    for t in sorted(by_period):
        entries = by_period[t]
        for r, rname in enumerate(("p", "e", "v")):
            coeffs = {}
            for j, s, y_id in entries:
                demand = trucks[j].scenarios[s].demand()[r]
                if demand:
                    coeffs[y_id] = float(demand)
            if coeffs:
                model.add_constraint(coeffs, milp.LE, caps[r], name=f"res_{rname}[{t}]")


def apply_fixing(inst: Instance, build_obj: CompactBuild) -> FixingReport:
    """Zero out the optional preprocessing tuples on an unfixed build.

    On a build made with fixing already on this is a no-op returning the
    stored report.  On an unfixed build the predecessor-completion and
    horizon-end arcs get their bounds pinned to zero (the counts were
    already tallied at materialization time for the structural rules).
    """
    if build_obj.fixing_applied:
        return build_obj.fixing_report
    trucks = {t.id: t for t in inst.trucks}
    earliest_done = {
        i: trucks[i].arrival + _min_completion_offset(trucks[i]) for i in trucks
    }
    report = build_obj.fixing_report
    for key, var in build_obj.index.x.items():
        i, j, t = key[0], key[1], key[2]
        if i != DUMMY and t < earliest_done[i]:
            if build_obj.model.ub[var] != 0.0:
                build_obj.model.fix(var, 0.0)
                report.predecessor_unfinished += 1
            continue
        if i == DUMMY and j != DUMMY:
            truck = trucks[j]
            if build_obj.variant == SIPT:
                p = _common_processing(truck)
            else:
                p = truck.scenarios[key[3]].processing
            if t + p + truck.setup > inst.horizon and build_obj.model.ub[var] != 0.0:
                build_obj.model.fix(var, 0.0)
                report.dummy_horizon += 1
    build_obj.fixing_applied = True
    return report


def add_symmetry(inst: Instance, build_obj: CompactBuild) -> int:
    """Immediate-discharge rows: a chain-closing arc may fire only at the
    exact completion of its truck.  Returns the number of rows added."""
    index = build_obj.index
    model = build_obj.model
    trucks = {t.id: t for t in inst.trucks}
    arcs_in: dict[int, list] = {j: [] for j in trucks}
    for key in index.x:
        if key[1] != DUMMY:
            arcs_in[key[1]].append(key)
    rows = 0
    for key, var in list(index.x.items()):
        i, j, t = key[0], key[1], key[2]
        if j != DUMMY:
            continue
        truck = trucks[i]
        feeders = {}
        for k in arcs_in[i]:
            if build_obj.variant == SIPT:
                p = _common_processing(truck)
            else:
                p = truck.scenarios[k[3]].processing
            if index.arc_start(k) + truck.setup + p == t:
                feeders[index.x[k]] = -1.0
        model.add_constraint(
            {var: 1.0} | feeders, milp.LE, 0.0, name=f"sym[{i},{t}]"
        )
        rows += 1
    build_obj.symmetry_rows = rows
    return rows


def separate_combinatorial(
    inst: Instance, index: VarIndex, y_values: dict, period: int, tol: float = 1e-6
) -> list[tuple]:
    """Violated combinatorial rows at one period, given y values.

    For each resource, take every truck whose service window can contain
    the period, pick its highest-valued scenario there, and emit
    sum of chosen y <= |Pi| - 1 when the chosen demands exceed capacity
    and the chosen y values sum above |Pi| - 1 + tol.
    """
    caps = inst.capacities()
    cuts = []
    for r in range(3):
        chosen: list[tuple[int, int]] = []
        demand_sum = 0
        value_sum = 0.0
        for truck in inst.trucks:
            if not (truck.arrival + truck.setup < period <= truck.deadline):
                continue
            best = None
            for s in range(len(truck.scenarios)):
                v = float(y_values.get((truck.id, period, s), 0.0))
                if best is None or v > best[0] + 1e-12:
                    best = (v, s)
            if best is None:
                continue
            chosen.append((truck.id, best[1]))
            value_sum += best[0]
            demand_sum += truck.scenarios[best[1]].demand()[r]
        if not chosen:
            continue
        if demand_sum > caps[r] and value_sum > len(chosen) - 1 + tol:
            coeffs = {index.y[j, period, s]: 1.0 for j, s in chosen}
            cuts.append((coeffs, milp.LE, float(len(chosen) - 1)))
    return cuts


# ---------------------------------------------------------------------------
# Decode / encode between arc space and Schedule


def decode_arcs(inst: Instance, build_obj: CompactBuild, values) -> Schedule:
    index = build_obj.index
    trucks = {t.id: t for t in inst.trucks}
    on = [key for key, var in index.x.items() if values[var] > 0.5]
    in_arc: dict[int, tuple] = {}
    succ: dict[int, tuple] = {}
    heads = []
    for key in on:
        i, j = key[0], key[1]
        if j != DUMMY:
            if j in in_arc:
                raise DecodeError(f"truck {j} has two incoming arcs")
            in_arc[j] = key
            if i == DUMMY:
                heads.append(key)
        if i != DUMMY:
            if i in succ:
                raise DecodeError(f"truck {i} has two outgoing arcs")
            succ[i] = key

    def scenario_of(j: int) -> int:
        if build_obj.variant == SDPT:
            return in_arc[j][3]
        for s in range(len(trucks[j].scenarios)):
            if values[index.eta[j, s]] > 0.5:
                return s
        raise DecodeError(f"served truck {j} has no active scenario")

    heads.sort(key=lambda k: (k[2], k[1]))
    chains: list[tuple[Assignment, ...]] = []
    seen: set[int] = set()
    for head in heads:
        chain = []
        key = head
        while key[1] != DUMMY:
            j, t = key[1], key[2]
            if j in seen:
                raise DecodeError(f"truck {j} appears on two chains")
            seen.add(j)
            chain.append(Assignment(truck=j, scenario_index=scenario_of(j), start=t))
            if j not in succ:
                raise DecodeError(f"chain broken after truck {j}")
            key = succ[j]
        chains.append(tuple(chain))
    idle = int(round(values[index.x000]))
    if len(chains) + idle != inst.docks:
        raise DecodeError(
            f"{len(chains)} chains plus {idle} idle docks != {inst.docks} docks"
        )
    chains.extend(() for _ in range(idle))
    unserved = frozenset(j for j in trucks if j not in seen)
    for j, z_var in index.z.items():
        z_on = values[z_var] > 0.5
        if z_on != (j in unserved):
            raise DecodeError(f"truck {j}: z disagrees with arc structure")
    return Schedule(per_dock=tuple(chains), unserved=unserved)


def schedule_to_values(inst: Instance, build_obj: CompactBuild, sched: Schedule):
    """Variable vector matching a feasible schedule (for warm starts)."""
    index = build_obj.index
    trucks = {t.id: t for t in inst.trucks}
    x = np.zeros(build_obj.model.num_vars)
    used = 0
    for chain in sched.per_dock:
        if not chain:
            continue
        used += 1
        prev = DUMMY
        for a in chain:
            truck = trucks[a.truck]
            key = (
                (prev, a.truck, a.start)
                if build_obj.variant == SIPT
                else (prev, a.truck, a.start, a.scenario_index)
            )
            x[index.x[key]] = 1.0
            scen = truck.scenarios[a.scenario_index]
            x[index.eta[a.truck, a.scenario_index]] = 1.0
            for t in truck.service_periods(a.start, scen):
                x[index.y[a.truck, t, a.scenario_index]] = 1.0
            prev = a.truck
        last = trucks[chain[-1].truck]
        done = chain[-1].start + last.setup + last.scenarios[chain[-1].scenario_index].processing
        close = (prev, DUMMY, done) if build_obj.variant == SIPT else (prev, DUMMY, done, 0)
        x[index.x[close]] = 1.0
    for j in sched.unserved:
        x[index.z[j]] = 1.0
    x[index.x000] = inst.docks - used
    return x


# ---------------------------------------------------------------------------
# End-to-end solve


@dataclass
class SolveStats:
    instance: str
    variant: str
    nodes: int
    status: str  # Optimal | Feasible | Limit | Infeasible
    gap: float | None
    seconds: float
    objective: int | None

    def csv_row(self) -> str:
        gap = "" if self.gap is None else f"{self.gap:.6g}"
        obj = "" if self.objective is None else str(self.objective)
        return (
            f"{self.instance},{self.variant},{self.nodes},{self.status},"
            f"{gap},{self.seconds:.3f},{obj}"
        )


_STATUS_LABEL = {
    milp.STATUS_OPTIMAL: "Optimal",
    milp.STATUS_FEASIBLE: "Feasible",
    milp.STATUS_LIMIT: "Limit",
    milp.STATUS_INFEASIBLE: "Infeasible",
}


def _relative_gap(objective: float | None, bound: float) -> float:
    if objective is None:
        return math.inf
    if objective == 0:
        return 0.0 if bound >= -1e-9 else math.inf
    return abs(objective - bound) / abs(objective)


def solve_compact(
    inst: Instance,
    variant: str,
    opts: BuildOptions | None = None,
    search: milp.SearchOptions | None = None,
    warm_start: bool = True,
) -> tuple[Schedule | None, CostBreakdown | None, SolveStats]:
    """Build, preprocess, and solve; decode and verify the schedule."""
    opts = opts or BuildOptions()
    t0 = time.monotonic()
    work = inst
    index_back: dict[int, dict[int, int]] = {}
    if opts.prune_dominance:
        work, prune_report = prune_dominated_scenarios(inst)
        index_back = {
            j: {new: old for old, new in mapping.items()}
            for j, mapping in prune_report.index_map.items()
        }
    built = build(work, variant, opts)
    search = replace(search) if search is not None else milp.SearchOptions()
    if search.warm_starts is None and warm_start:
        sched0 = greedy_schedule(work)
        search.warm_starts = [schedule_to_values(work, built, sched0)]
    if opts.combinatorial_cuts:
        y_index = built.index.y

        def lazy(values):
            yv = {key: values[var] for key, var in y_index.items()}
            cuts = []
            for t in range(work.horizon + 1):
                cuts.extend(separate_combinatorial(work, built.index, yv, t))
            return cuts

        search.lazy_callback = lazy
    result = milp.solve_mip(built.model, search)
    seconds = time.monotonic() - t0

    schedule = None
    cost = None
    if result.x is not None:
        schedule = decode_arcs(work, built, result.x)
        if index_back:
            schedule = Schedule(
                per_dock=tuple(
                    tuple(
                        Assignment(
                            a.truck,
                            index_back.get(a.truck, {}).get(
                                a.scenario_index, a.scenario_index
                            ),
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
            raise DecodeError(f"decoded schedule infeasible: {violations[0].message}")
        cost = evaluate(inst, schedule)
        if abs(cost.total - result.objective) > 1e-6:
            raise DecodeError(
                f"objective mismatch: model {result.objective}, schedule {cost.total}"
            )
    stats = SolveStats(
        instance=inst.name,
        variant=variant,
        nodes=result.nodes,
        status=_STATUS_LABEL[result.status],
        gap=None
        if result.status == milp.STATUS_OPTIMAL
        else _relative_gap(result.objective, result.bound),
        seconds=seconds,
        objective=None if cost is None else cost.total,
    )
    return schedule, cost, stats
