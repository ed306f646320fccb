"""Cheap feasible-schedule construction used to warm-start both solvers.

Trucks are tried in chronological arrival order (id breaks ties).  Each
truck goes to the dock that frees earliest, at its earliest start there
that fits the resource capacities over the whole service window; if no
start fits, the next dock is tried, and the truck is dropped to unserved
after every dock and scenario is exhausted.  No improvement pass runs on
the result.
"""

from .core import Assignment, Instance, Schedule


def greedy_schedule(inst: Instance) -> Schedule:
    usage = [[0, 0, 0] for _ in range(inst.horizon + 1)]
    caps = inst.capacities()
    dock_free = [0] * inst.docks
    chains: list[list[Assignment]] = [[] for _ in range(inst.docks)]
    unserved: set[int] = set()

    def fits(truck, scen, start) -> bool:
        for t in truck.service_periods(start, scen):
            u = usage[t]
            if (
                u[0] + scen.workers > caps[0]
                or u[1] + scen.equipment > caps[1]
                or u[2] + scen.vehicles > caps[2]
            ):
                return False
        return True

    for truck in sorted(inst.trucks, key=lambda t: (t.arrival, t.id)):
        placed = False
        docks = sorted(range(inst.docks), key=lambda d: (dock_free[d], d))
        for dock in docks:
            for s_idx, scen in enumerate(truck.scenarios):
                lo = max(truck.arrival, dock_free[dock])
                for start in range(lo, truck.latest_start(scen) + 1):
                    if fits(truck, scen, start):
                        for t in truck.service_periods(start, scen):
                            u = usage[t]
                            u[0] += scen.workers
                            u[1] += scen.equipment
                            u[2] += scen.vehicles
                        chains[dock].append(Assignment(truck.id, s_idx, start))
                        dock_free[dock] = start + truck.setup + scen.processing
                        placed = True
                        break
                if placed:
                    break
            if placed:
                break
        if not placed:
            unserved.add(truck.id)

    return Schedule(
        per_dock=tuple(tuple(c) for c in chains), unserved=frozenset(unserved)
    )
