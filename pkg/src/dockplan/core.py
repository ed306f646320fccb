"""Domain types and basic operations for dock assignment / truck scheduling.

Time is a closed grid of abstract periods 0..horizon.  A truck that gets the
arc into it at period t is set up during (t, t+setup] and then occupies its
scenario's resources during the processing periods t+setup+1 .. t+setup+p
(the "service window").  Waiting cost is charged from arrival to arc start,
never to service start.  All costs are integers and evaluation is integer
arithmetic throughout.
"""

import json
from dataclasses import dataclass, field


class ParseError(ValueError):
    """Raised when an instance or schedule document is not well-formed."""


class ValidationError(ValueError):
    """Raised when a document parses but violates a domain invariant."""


RESOURCE_NAMES = ("personnel", "equipment", "vehicles")


@dataclass(frozen=True)
class ResourceScenario:
    """One way of serving a truck: resource counts plus processing periods."""

    workers: int
    equipment: int
    vehicles: int
    processing: int

    def demand(self) -> tuple[int, int, int]:
        return (self.workers, self.equipment, self.vehicles)

    def dominates(self, other: "ResourceScenario") -> bool:
        """General dominance: no more of any resource and no more time."""
        return (
            self.workers <= other.workers
            and self.equipment <= other.equipment
            and self.vehicles <= other.vehicles
            and self.processing <= other.processing
        )

    def strictly_dominates(self, other: "ResourceScenario") -> bool:
        """General dominance with strict inequality somewhere."""
        return self.dominates(other) and self != other


@dataclass(frozen=True)
class Truck:
    id: int
    arrival: int
    deadline: int
    setup: int
    wait_cost: int
    miss_penalty: int
    scenarios: tuple[ResourceScenario, ...]

    def latest_start(self, scenario: ResourceScenario) -> int:
        """Last period at which the arc into this truck may fire."""
        return self.deadline - self.setup - scenario.processing

    def start_range(self, scenario: ResourceScenario) -> range:
        """Feasible arc-start periods under `scenario` (may be empty)."""
        return range(self.arrival, self.latest_start(scenario) + 1)

    def service_periods(self, start: int, scenario: ResourceScenario) -> range:
        """Periods during which resources are engaged for this placement."""
        lo = start + self.setup + 1
        return range(lo, lo + scenario.processing)

    def servable(self) -> bool:
        return any(len(t) > 0 for t in map(self.start_range, self.scenarios))


@dataclass(frozen=True)
class Instance:
    name: str
    horizon: int
    docks: int
    cap_workers: int
    cap_equipment: int
    cap_vehicles: int
    trucks: tuple[Truck, ...]

    def capacities(self) -> tuple[int, int, int]:
        return (self.cap_workers, self.cap_equipment, self.cap_vehicles)

    def truck_by_id(self, truck_id: int) -> Truck:
        try:
            return self._by_id[truck_id]
        except KeyError:
            raise ValidationError(f"unknown truck id {truck_id}") from None

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {t.id: t for t in self.trucks})

    def total_scenarios(self) -> int:
        return sum(len(t.scenarios) for t in self.trucks)

    def uniform_processing(self) -> bool:
        """True when every truck's scenarios share one processing time."""
        return all(
            len({s.processing for s in t.scenarios}) == 1 for t in self.trucks
        )


@dataclass(frozen=True)
class Assignment:
    truck: int
    scenario_index: int
    start: int


@dataclass(frozen=True)
class Schedule:
    per_dock: tuple[tuple[Assignment, ...], ...]
    unserved: frozenset[int]

    def served_assignments(self):
        for dock, chain in enumerate(self.per_dock):
            for a in chain:
                yield dock, a


@dataclass(frozen=True)
class CostBreakdown:
    waiting_cost: int
    miss_cost: int

    @property
    def total(self) -> int:
        return self.waiting_cost + self.miss_cost


@dataclass(frozen=True)
class Violation:
    kind: str  # "window" | "sequencing" | "resource"
    message: str
    truck: int | None = None
    dock: int | None = None
    period: int | None = None


# ---------------------------------------------------------------------------
# Validation


def _validate_instance(inst: Instance) -> None:
    if inst.docks < 1:
        raise ValidationError(f"docks must be >= 1, got {inst.docks}")
    if inst.horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {inst.horizon}")
    for cap_name, cap in zip(RESOURCE_NAMES, inst.capacities()):
        if cap < 0:
            raise ValidationError(f"capacity.{cap_name} must be >= 0, got {cap}")
    seen: set[int] = set()
    for t in inst.trucks:
        if t.id <= 0:
            raise ValidationError(f"truck id must be positive, got {t.id}")
        if t.id in seen:
            raise ValidationError(f"duplicate truck id {t.id}")
        seen.add(t.id)
        if not (0 <= t.arrival < t.deadline <= inst.horizon):
            raise ValidationError(
                f"truck {t.id}: need 0 <= arrival < deadline <= horizon, "
                f"got arrival={t.arrival}, deadline={t.deadline}, horizon={inst.horizon}"
            )
        if t.setup < 0:
            raise ValidationError(f"truck {t.id}: setup must be >= 0, got {t.setup}")
        if t.wait_cost < 0:
            raise ValidationError(
                f"truck {t.id}: wait_cost must be >= 0, got {t.wait_cost}"
            )
        if t.miss_penalty < 0:
            raise ValidationError(
                f"truck {t.id}: miss_penalty must be >= 0, got {t.miss_penalty}"
            )
        if not t.scenarios:
            raise ValidationError(f"truck {t.id}: scenarios must be nonempty")
        for k, s in enumerate(t.scenarios):
            for fname, v in (
                ("personnel", s.workers),
                ("equipment", s.equipment),
                ("vehicles", s.vehicles),
            ):
                if v < 0:
                    raise ValidationError(
                        f"truck {t.id} scenario {k}: {fname} must be >= 0, got {v}"
                    )
            if s.processing < 1:
                raise ValidationError(
                    f"truck {t.id} scenario {k}: processing must be >= 1, "
                    f"got {s.processing}"
                )


def validate_instance(inst: Instance) -> Instance:
    """Check every Instance invariant, returning the instance unchanged."""
    _validate_instance(inst)
    return inst


# ---------------------------------------------------------------------------
# Instance / schedule file I/O (UTF-8 JSON documents)


def _expect_keys(obj: dict, allowed: tuple[str, ...], where: str) -> None:
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ParseError(f"unknown key(s) {sorted(unknown)} in {where}")
    missing = set(allowed) - set(obj)
    if missing:
        raise ParseError(f"missing key(s) {sorted(missing)} in {where}")


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{where} must be an integer, got {value!r}")
    return value


def load_instance(source: str | bytes) -> Instance:
    """Parse and validate an instance document."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed instance document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("instance document must be a JSON object")
    _expect_keys(doc, ("name", "horizon", "docks", "capacity", "trucks"), "instance")
    cap = doc["capacity"]
    if not isinstance(cap, dict):
        raise ParseError("capacity must be an object")
    _expect_keys(cap, RESOURCE_NAMES, "capacity")
    if not isinstance(doc["trucks"], list):
        raise ParseError("trucks must be an array")
    trucks = []
    for n, tdoc in enumerate(doc["trucks"]):
        if not isinstance(tdoc, dict):
            raise ParseError(f"trucks[{n}] must be an object")
        _expect_keys(
            tdoc,
            ("id", "arrival", "deadline", "setup", "wait_cost", "miss_penalty", "scenarios"),
            f"trucks[{n}]",
        )
        if not isinstance(tdoc["scenarios"], list):
            raise ParseError(f"trucks[{n}].scenarios must be an array")
        scenarios = []
        for k, sdoc in enumerate(tdoc["scenarios"]):
            if not isinstance(sdoc, dict):
                raise ParseError(f"trucks[{n}].scenarios[{k}] must be an object")
            _expect_keys(
                sdoc,
                ("personnel", "equipment", "vehicles", "processing"),
                f"trucks[{n}].scenarios[{k}]",
            )
            scenarios.append(
                ResourceScenario(
                    workers=_as_int(sdoc["personnel"], "personnel"),
                    equipment=_as_int(sdoc["equipment"], "equipment"),
                    vehicles=_as_int(sdoc["vehicles"], "vehicles"),
                    processing=_as_int(sdoc["processing"], "processing"),
                )
            )
        trucks.append(
            Truck(
                id=_as_int(tdoc["id"], "id"),
                arrival=_as_int(tdoc["arrival"], "arrival"),
                deadline=_as_int(tdoc["deadline"], "deadline"),
                setup=_as_int(tdoc["setup"], "setup"),
                wait_cost=_as_int(tdoc["wait_cost"], "wait_cost"),
                miss_penalty=_as_int(tdoc["miss_penalty"], "miss_penalty"),
                scenarios=tuple(scenarios),
            )
        )
    if not isinstance(doc["name"], str):
        raise ParseError("name must be a string")
    inst = Instance(
        name=doc["name"],
        horizon=_as_int(doc["horizon"], "horizon"),
        docks=_as_int(doc["docks"], "docks"),
        cap_workers=_as_int(cap["personnel"], "capacity.personnel"),
        cap_equipment=_as_int(cap["equipment"], "capacity.equipment"),
        cap_vehicles=_as_int(cap["vehicles"], "capacity.vehicles"),
        trucks=tuple(trucks),
    )
    _validate_instance(inst)
    return inst


def save_instance(inst: Instance) -> str:
    """Serialize to the canonical document form; load(save(x)) == x."""
    doc = {
        "name": inst.name,
        "horizon": inst.horizon,
        "docks": inst.docks,
        "capacity": {
            "personnel": inst.cap_workers,
            "equipment": inst.cap_equipment,
            "vehicles": inst.cap_vehicles,
        },
        "trucks": [
            {
                "id": t.id,
                "arrival": t.arrival,
                "deadline": t.deadline,
                "setup": t.setup,
                "wait_cost": t.wait_cost,
                "miss_penalty": t.miss_penalty,
                "scenarios": [
                    {
                        "personnel": s.workers,
                        "equipment": s.equipment,
                        "vehicles": s.vehicles,
                        "processing": s.processing,
                    }
                    for s in t.scenarios
                ],
            }
            for t in inst.trucks
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def load_schedule(source: str | bytes) -> tuple[str, Schedule, int]:
    """Parse a schedule document: (instance name, schedule, recorded objective)."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed schedule document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("schedule document must be a JSON object")
    _expect_keys(doc, ("instance", "docks", "unserved", "objective"), "schedule")
    if not isinstance(doc["docks"], list):
        raise ParseError("docks must be an array of arrays")
    per_dock = []
    for d, chain in enumerate(doc["docks"]):
        if not isinstance(chain, list):
            raise ParseError(f"docks[{d}] must be an array")
        assigns = []
        for adoc in chain:
            if not isinstance(adoc, dict):
                raise ParseError(f"docks[{d}] entries must be objects")
            _expect_keys(adoc, ("truck", "scenario", "start"), f"docks[{d}] entry")
            assigns.append(
                Assignment(
                    truck=_as_int(adoc["truck"], "truck"),
                    scenario_index=_as_int(adoc["scenario"], "scenario"),
                    start=_as_int(adoc["start"], "start"),
                )
            )
        per_dock.append(tuple(assigns))
    unserved = frozenset(_as_int(u, "unserved entry") for u in doc["unserved"])
    sched = Schedule(per_dock=tuple(per_dock), unserved=unserved)
    return doc["instance"], sched, _as_int(doc["objective"], "objective")


def save_schedule(instance_name: str, sched: Schedule, objective: int) -> str:
    doc = {
        "instance": instance_name,
        "docks": [
            [
                {"truck": a.truck, "scenario": a.scenario_index, "start": a.start}
                for a in chain
            ]
            for chain in sched.per_dock
        ],
        "unserved": sorted(sched.unserved),
        "objective": objective,
    }
    return json.dumps(doc, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Evaluation and feasibility


def _check_structure(inst: Instance, sched: Schedule) -> None:
    if len(sched.per_dock) != inst.docks:
        raise ValidationError(
            f"dock count mismatch: schedule has {len(sched.per_dock)}, "
            f"instance has {inst.docks}"
        )
    all_ids = {t.id for t in inst.trucks}
    seen: set[int] = set()
    for _, a in sched.served_assignments():
        truck = inst.truck_by_id(a.truck)
        if a.truck in seen:
            raise ValidationError(f"truck {a.truck} served more than once")
        seen.add(a.truck)
        if not (0 <= a.scenario_index < len(truck.scenarios)):
            raise ValidationError(
                f"truck {a.truck}: scenario index {a.scenario_index} out of range"
            )
    for u in sched.unserved:
        if u not in all_ids:
            raise ValidationError(f"unknown truck id {u}")
    covered = seen | set(sched.unserved)
    if seen & set(sched.unserved):
        raise ValidationError(
            f"trucks both served and unserved: {sorted(seen & set(sched.unserved))}"
        )
    if covered != all_ids:
        raise ValidationError(
            f"trucks neither served nor unserved: {sorted(all_ids - covered)}"
        )


def evaluate(inst: Instance, sched: Schedule) -> CostBreakdown:
    """Total cost: waiting from arrival to arc start, plus miss penalties."""
    _check_structure(inst, sched)
    waiting = 0
    for _, a in sched.served_assignments():
        truck = inst.truck_by_id(a.truck)
        waiting += truck.wait_cost * (a.start - truck.arrival)
    miss = sum(inst.truck_by_id(u).miss_penalty for u in sched.unserved)
    return CostBreakdown(waiting_cost=waiting, miss_cost=miss)


def resource_usage(inst: Instance, sched: Schedule) -> list[list[int]]:
    """Per-period resource usage, indexed usage[period][resource]."""
    usage = [[0, 0, 0] for _ in range(inst.horizon + 1)]
    for _, a in sched.served_assignments():
        truck = inst.truck_by_id(a.truck)
        scen = truck.scenarios[a.scenario_index]
        for t in truck.service_periods(a.start, scen):
            if 0 <= t <= inst.horizon:
                for r, need in enumerate(scen.demand()):
                    usage[t][r] += need
    return usage


def check_feasibility(inst: Instance, sched: Schedule) -> list[Violation]:
    """All time-window, sequencing, and resource violations (empty if feasible)."""
    _check_structure(inst, sched)
    violations: list[Violation] = []
    for dock, chain in enumerate(sched.per_dock):
        prev: Assignment | None = None
        for a in chain:
            truck = inst.truck_by_id(a.truck)
            scen = truck.scenarios[a.scenario_index]
            if a.start < truck.arrival:
                violations.append(
                    Violation(
                        "window",
                        f"truck {a.truck} starts at {a.start} before arrival "
                        f"{truck.arrival}",
                        truck=a.truck,
                        dock=dock,
                    )
                )
            completion = a.start + truck.setup + scen.processing
            if completion > truck.deadline:
                violations.append(
                    Violation(
                        "window",
                        f"truck {a.truck} completes at {completion} after deadline "
                        f"{truck.deadline}",
                        truck=a.truck,
                        dock=dock,
                    )
                )
            if prev is not None:
                ptruck = inst.truck_by_id(prev.truck)
                pscen = ptruck.scenarios[prev.scenario_index]
                gap = prev.start + ptruck.setup + pscen.processing
                if a.start < gap:
                    violations.append(
                        Violation(
                            "sequencing",
                            f"truck {a.truck} starts at {a.start} before "
                            f"predecessor {prev.truck} completes at {gap}",
                            truck=a.truck,
                            dock=dock,
                        )
                    )
            prev = a
    usage = resource_usage(inst, sched)
    caps = inst.capacities()
    for t, used in enumerate(usage):
        for r, name in enumerate(RESOURCE_NAMES):
            if used[r] > caps[r]:
                violations.append(
                    Violation(
                        "resource",
                        f"{name} usage {used[r]} exceeds capacity {caps[r]} "
                        f"in period {t}",
                        period=t,
                    )
                )
    return violations


# ---------------------------------------------------------------------------
# Scenario dominance pruning


@dataclass(frozen=True)
class PruneRemoval:
    truck: int
    removed_index: int
    kept_index: int
    reason: str  # "time" | "resource" | "duplicate"


@dataclass(frozen=True)
class PruneReport:
    removals: tuple[PruneRemoval, ...]
    # old scenario index -> new index per truck; removed indices are absent
    index_map: dict[int, dict[int, int]] = field(default_factory=dict)

    def removed_count(self) -> int:
        return len(self.removals)


def prune_dominated_scenarios(inst: Instance) -> tuple[Instance, PruneReport]:
    """Drop strictly dominated scenarios; duplicates keep the lowest index.

    A scenario is removed when another scenario of the same truck uses no
    more of any resource, no more time, and differs somewhere; exact
    duplicates survive only at their first position.  At least one scenario
    per truck always remains (Pareto-minimal scenarios are never dominated).
    """
    removals: list[PruneRemoval] = []
    index_map: dict[int, dict[int, int]] = {}
    new_trucks = []
    for truck in inst.trucks:
        scen = truck.scenarios
        keep = [
            i
            for i, s in enumerate(scen)
            if not any(o.strictly_dominates(s) for o in scen)
            and not any(scen[j] == s for j in range(i))
        ]
        for i, s in enumerate(scen):
            if i in keep:
                continue
            # attribute the removal to a surviving scenario
            j = next(k for k in keep if scen[k].dominates(s))
            if scen[j] == s:
                reason = "duplicate"
            elif scen[j].processing < s.processing:
                reason = "time"
            else:
                reason = "resource"
            removals.append(PruneRemoval(truck.id, i, j, reason))
        index_map[truck.id] = {old: new for new, old in enumerate(keep)}
        new_trucks.append(
            Truck(
                id=truck.id,
                arrival=truck.arrival,
                deadline=truck.deadline,
                setup=truck.setup,
                wait_cost=truck.wait_cost,
                miss_penalty=truck.miss_penalty,
                scenarios=tuple(scen[i] for i in keep),
            )
        )
    pruned = Instance(
        name=inst.name,
        horizon=inst.horizon,
        docks=inst.docks,
        cap_workers=inst.cap_workers,
        cap_equipment=inst.cap_equipment,
        cap_vehicles=inst.cap_vehicles,
        trucks=tuple(new_trucks),
    )
    return pruned, PruneReport(removals=tuple(removals), index_map=index_map)
