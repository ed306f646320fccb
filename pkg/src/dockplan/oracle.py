"""Brute-force exact solver for tiny instances.

Complete search over (served set, dock, scenario, start) choices.  The
enumeration is canonical: placements are generated in strictly increasing
(start, truck id) order and a truck may open a new dock only if it is the
lowest-indexed empty one, so every distinct schedule is visited exactly
once up to dock relabeling.  Pruning uses the admissible bound
min(miss penalty, waiting at the earliest start still reachable) per
remaining truck, so the returned optimum is exact.

An `exhaustive` mode enumerates the raw product of subsets, assignments,
orders, scenarios, and full start grids with no pruning at all; it exists
to validate the canonical search on the smallest instances.
"""

import itertools
from dataclasses import dataclass

from .core import (
    Assignment,
    CostBreakdown,
    Instance,
    Schedule,
    check_feasibility,
    evaluate,
)


class OracleLimitError(ValueError):
    """Instance too large for exhaustive search; refuse rather than hang."""


@dataclass(frozen=True)
class OracleLimits:
    max_trucks: int = 6
    max_horizon: int = 14
    max_scenarios: int = 3
    max_docks: int = 3


def _check_limits(inst: Instance, limits: OracleLimits) -> None:
    if len(inst.trucks) > limits.max_trucks:
        raise OracleLimitError(
            f"{len(inst.trucks)} trucks exceeds oracle limit {limits.max_trucks}"
        )
    if inst.horizon > limits.max_horizon:
        raise OracleLimitError(
            f"horizon {inst.horizon} exceeds oracle limit {limits.max_horizon}"
        )
    if inst.docks > limits.max_docks:
        raise OracleLimitError(
            f"{inst.docks} docks exceeds oracle limit {limits.max_docks}"
        )
    worst = max((len(t.scenarios) for t in inst.trucks), default=0)
    if worst > limits.max_scenarios:
        raise OracleLimitError(
            f"{worst} scenarios on one truck exceeds oracle limit "
            f"{limits.max_scenarios}"
        )


class _Search:
    def __init__(self, inst: Instance):
        self.inst = inst
        self.trucks = list(inst.trucks)
        self.caps = inst.capacities()
        self.usage = [[0, 0, 0] for _ in range(inst.horizon + 1)]
        self.dock_free = [0] * inst.docks
        self.dock_open = [False] * inst.docks
        self.placed: dict[int, tuple[int, int, int]] = {}  # id -> (dock, scen, start)
        self.best_cost: int | None = None
        self.best_placed: dict[int, tuple[int, int, int]] | None = None

    def run(self) -> tuple[dict, int]:
        self._seed_greedy()
        remaining = sorted(self.trucks, key=lambda t: t.id)
        self._dfs(remaining, waiting=0, last_start=-1, last_id=-1)
        return self.best_placed, self.best_cost

    # A quick feasible schedule gives the pruning a strong incumbent.
    def _seed_greedy(self):
        order = sorted(self.trucks, key=lambda t: (t.arrival, t.id))
        for truck in order:
            placed = False
            for s_idx, scen in enumerate(truck.scenarios):
                if placed:
                    break
                for dock in range(self.inst.docks):
                    if placed:
                        break
                    lo = max(truck.arrival, self.dock_free[dock])
                    for start in range(lo, truck.latest_start(scen) + 1):
                        if self._fits(truck, scen, start):
                            self._place(truck, s_idx, dock, start)
                            placed = True
                            break
        waiting = sum(
            self.trucks_by_id(tid).wait_cost * (st - self.trucks_by_id(tid).arrival)
            for tid, (_, _, st) in self.placed.items()
        )
        miss = sum(t.miss_penalty for t in self.trucks if t.id not in self.placed)
        self.best_cost = waiting + miss
        self.best_placed = dict(self.placed)
        for tid in list(self.placed):
            self._unplace(self.trucks_by_id(tid))

    def trucks_by_id(self, tid: int):
        return self.inst.truck_by_id(tid)

    def _fits(self, truck, scen, start) -> bool:
        for t in truck.service_periods(start, scen):
            u = self.usage[t]
            if (
                u[0] + scen.workers > self.caps[0]
                or u[1] + scen.equipment > self.caps[1]
                or u[2] + scen.vehicles > self.caps[2]
            ):
                return False
        return True

    def _place(self, truck, s_idx, dock, start):
        scen = truck.scenarios[s_idx]
        for t in truck.service_periods(start, scen):
            u = self.usage[t]
            u[0] += scen.workers
            u[1] += scen.equipment
            u[2] += scen.vehicles
        self.placed[truck.id] = (dock, s_idx, start)
        self.dock_free[dock] = start + truck.setup + scen.processing
        self.dock_open[dock] = True

    def _unplace(self, truck):
        dock, s_idx, start = self.placed.pop(truck.id)
        scen = truck.scenarios[s_idx]
        for t in truck.service_periods(start, scen):
            u = self.usage[t]
            u[0] -= scen.workers
            u[1] -= scen.equipment
            u[2] -= scen.vehicles
        # recompute dock state: chains only shrink from their end in DFS order
        starts = [
            (st, tid)
            for tid, (d, _, st) in self.placed.items()
            if d == dock
        ]
        if starts:
            st, tid = max(starts)
            prev = self.trucks_by_id(tid)
            pscen = prev.scenarios[self.placed[tid][1]]
            self.dock_free[dock] = st + prev.setup + pscen.processing
        else:
            self.dock_free[dock] = 0
            self.dock_open[dock] = False

    def _lower_bound(self, remaining, floor_start: int) -> int:
        lb = 0
        for truck in remaining:
            earliest = max(truck.arrival, floor_start)
            best_wait = None
            for scen in truck.scenarios:
                if earliest <= truck.latest_start(scen):
                    wait = truck.wait_cost * (earliest - truck.arrival)
                    if best_wait is None or wait < best_wait:
                        best_wait = wait
            lb += truck.miss_penalty if best_wait is None else min(truck.miss_penalty, best_wait)
        return lb

    def _dfs(self, remaining, waiting, last_start, last_id):
        miss_rest = sum(t.miss_penalty for t in remaining)
        cand = waiting + miss_rest
        if cand < self.best_cost:
            self.best_cost = cand
            self.best_placed = dict(self.placed)
        if not remaining:
            return
        if waiting + self._lower_bound(remaining, max(last_start, 0)) >= self.best_cost:
            return
        for pos, truck in enumerate(remaining):
            rest = remaining[:pos] + remaining[pos + 1 :]
            for s_idx, scen in enumerate(truck.scenarios):
                lo = max(truck.arrival, last_start)
                for dock in range(self.inst.docks):
                    if not self.dock_open[dock]:
                        # symmetry: only the first empty dock may be opened
                        opening = True
                    else:
                        opening = False
                    start_lo = max(lo, self.dock_free[dock])
                    for start in range(start_lo, truck.latest_start(scen) + 1):
                        if start == last_start and truck.id <= last_id:
                            continue
                        w = truck.wait_cost * (start - truck.arrival)
                        bound = (
                            waiting
                            + w
                            + self._lower_bound(rest, start)
                        )
                        if bound >= self.best_cost:
                            break  # waiting and the floor only grow with start
                        if not self._fits(truck, scen, start):
                            continue
                        self._place(truck, s_idx, dock, start)
                        self._dfs(rest, waiting + w, start, truck.id)
                        self._unplace(truck)
                    if opening:
                        break  # higher-indexed empty docks are relabelings


def _placed_to_schedule(inst: Instance, placed: dict) -> Schedule:
    chains: list[list[Assignment]] = [[] for _ in range(inst.docks)]
    for tid, (dock, s_idx, start) in sorted(placed.items()):
        chains[dock].append(Assignment(truck=tid, scenario_index=s_idx, start=start))
    for chain in chains:
        chain.sort(key=lambda a: a.start)
    unserved = frozenset(t.id for t in inst.trucks if t.id not in placed)
    return Schedule(per_dock=tuple(tuple(c) for c in chains), unserved=unserved)


def brute_force(
    inst: Instance,
    limits: OracleLimits | None = None,
    exhaustive: bool = False,
) -> tuple[Schedule, CostBreakdown]:
    """Exact minimum-cost schedule by complete enumeration."""
    limits = limits or OracleLimits()
    _check_limits(inst, limits)
    if exhaustive:
        return _exhaustive(inst)
    search = _Search(inst)
    placed, _ = search.run()
    sched = _placed_to_schedule(inst, placed)
    assert not check_feasibility(inst, sched)
    return sched, evaluate(inst, sched)


def _exhaustive(inst: Instance) -> tuple[Schedule, CostBreakdown]:
    trucks = list(inst.trucks)
    if len(trucks) > 4:
        raise OracleLimitError("exhaustive mode is limited to 4 trucks")
    ids = [t.id for t in trucks]
    best: tuple[int, Schedule] | None = None
    for served_mask in range(1 << len(trucks)):
        served = [t for i, t in enumerate(trucks) if served_mask >> i & 1]
        unserved = frozenset(t.id for t in trucks if t.id not in {s.id for s in served})
        for docks in itertools.product(range(inst.docks), repeat=len(served)):
            chains: list[list] = [[] for _ in range(inst.docks)]
            for truck, d in zip(served, docks):
                chains[d].append(truck)
            for orders in itertools.product(
                *(itertools.permutations(c) for c in chains)
            ):
                scen_space = itertools.product(
                    *(range(len(t.scenarios)) for t in served)
                )
                for scen_choice in scen_space:
                    scen_of = dict(zip((t.id for t in served), scen_choice))
                    start_ranges = []
                    flat = [t for chain in orders for t in chain]
                    for t in flat:
                        scen = t.scenarios[scen_of[t.id]]
                        start_ranges.append(range(t.arrival, t.latest_start(scen) + 1))
                    for starts in itertools.product(*start_ranges):
                        start_of = dict(zip((t.id for t in flat), starts))
                        sched = Schedule(
                            per_dock=tuple(
                                tuple(
                                    Assignment(t.id, scen_of[t.id], start_of[t.id])
                                    for t in chain
                                )
                                for chain in orders
                            ),
                            unserved=unserved,
                        )
                        if check_feasibility(inst, sched):
                            continue
                        cost = evaluate(inst, sched).total
                        if best is None or cost < best[0]:
                            best = (cost, sched)
    assert best is not None  # the all-unserved schedule is always feasible
    sched = best[1]
    return sched, evaluate(inst, sched)
