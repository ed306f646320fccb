"""Seeded random instance generator.

All draws come from a Philox 4x64 counter-based bit generator (numpy),
keyed directly by the 64-bit seed, so suites are reproducible across
platforms and may be generated in parallel from per-index derived seeds
(seed + index).  Every integer parameter is drawn uniformly and inclusively
on its range, in a fixed documented order per truck:

    arrival, setup, scenario count, [SiPT: one shared processing],
    per scenario: personnel, equipment, vehicles, [SdPT: processing],
    window slack, wait cost.

The deadline is arrival + setup + max scenario processing + slack, capped
at the horizon (the cap keeps deadlines on the time grid; trucks whose
best-case completion still misses the horizon are legal but unservable).
Resource capacities are derived, not drawn: for each resource, the larger
of the biggest per-truck minimum demand (no truck is trivially unservable
by capacity alone) and ceil(capacity_factor * docks * mean per-scenario
demand) (keeps the capacity rows binding at typical load).
"""

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

from numpy.random import Generator, Philox

from .core import Instance, ResourceScenario, Truck, validate_instance

SIPT = "sipt"
SDPT = "sdpt"


def _default_arrival(horizon: int) -> tuple[int, int]:
    return (0, math.floor(0.75 * horizon))


def _default_processing(horizon: int) -> tuple[int, int]:
    return (math.ceil(horizon / 8), math.floor(horizon / 4))


@dataclass(frozen=True)
class GenParams:
    docks: int
    trucks: int
    seed: int
    horizon: int = 16
    variant: str = SDPT
    scenario_count_range: tuple[int, int] = (1, 4)
    arrival_range: tuple[int, int] | None = None
    processing_range: tuple[int, int] | None = None
    setup_range: tuple[int, int] = (1, 3)
    window_slack_range: tuple[int, int] = (3, 5)
    workers_range: tuple[int, int] = (3, 6)
    equipment_range: tuple[int, int] = (1, 3)
    vehicles_range: tuple[int, int] = (3, 7)
    wait_cost_range: tuple[int, int] = (5, 10)
    miss_multiplier: int = 100
    capacity_factor: float = 0.8

    def effective_arrival_range(self) -> tuple[int, int]:
        return self.arrival_range or _default_arrival(self.horizon)

    def effective_processing_range(self) -> tuple[int, int]:
        return self.processing_range or _default_processing(self.horizon)

    def __post_init__(self):
        if self.docks < 1:
            raise ValueError(f"docks must be >= 1, got {self.docks}")
        if self.trucks < 1:
            raise ValueError(f"trucks must be >= 1, got {self.trucks}")
        if self.variant not in (SIPT, SDPT):
            raise ValueError(f"variant must be '{SIPT}' or '{SDPT}', got {self.variant!r}")
        for label, rng in (
            ("scenario_count_range", self.scenario_count_range),
            ("arrival_range", self.effective_arrival_range()),
            ("processing_range", self.effective_processing_range()),
            ("setup_range", self.setup_range),
            ("window_slack_range", self.window_slack_range),
            ("workers_range", self.workers_range),
            ("equipment_range", self.equipment_range),
            ("vehicles_range", self.vehicles_range),
            ("wait_cost_range", self.wait_cost_range),
        ):
            lo, hi = rng
            if lo > hi:
                raise ValueError(f"{label} is empty: {rng}")


@dataclass
class TruckDraws:
    """Raw per-truck draws, before deadline capping."""

    arrival: int
    setup: int
    scenario_count: int
    scenarios: list[ResourceScenario] = field(default_factory=list)
    slack: int = 0
    wait_cost: int = 0


def rng_for(seed: int) -> Generator:
    """The generator behind every draw: Philox keyed by the raw seed."""
    return Generator(Philox(key=seed))


def _draw(rng: Generator, lo_hi: tuple[int, int]) -> int:
    lo, hi = lo_hi
    return int(rng.integers(lo, hi, endpoint=True))


def draw_truck_fields(rng: Generator, params: GenParams) -> TruckDraws:
    """Draw one truck's raw fields in the documented order."""
    d = TruckDraws(
        arrival=_draw(rng, params.effective_arrival_range()),
        setup=_draw(rng, params.setup_range),
        scenario_count=_draw(rng, params.scenario_count_range),
    )
    shared_processing = None
    if params.variant == SIPT:
        shared_processing = _draw(rng, params.effective_processing_range())
    for _ in range(d.scenario_count):
        workers = _draw(rng, params.workers_range)
        equipment = _draw(rng, params.equipment_range)
        vehicles = _draw(rng, params.vehicles_range)
        if shared_processing is not None:
            processing = shared_processing
        else:
            processing = _draw(rng, params.effective_processing_range())
        d.scenarios.append(ResourceScenario(workers, equipment, vehicles, processing))
    d.slack = _draw(rng, params.window_slack_range)
    d.wait_cost = _draw(rng, params.wait_cost_range)
    return d


def _capacities(trucks: list[Truck], params: GenParams) -> tuple[int, int, int]:
    caps = []
    factor = Fraction(str(params.capacity_factor))
    for r in range(3):
        min_demands = [min(s.demand()[r] for s in t.scenarios) for t in trucks]
        all_demands = [s.demand()[r] for t in trucks for s in t.scenarios]
        mean = Fraction(sum(all_demands), len(all_demands))
        caps.append(max(max(min_demands), math.ceil(factor * params.docks * mean)))
    return tuple(caps)


def generate(params: GenParams) -> Instance:
    """Build one instance; identical params and seed give identical output."""
    rng = rng_for(params.seed)
    trucks = []
    for j in range(1, params.trucks + 1):
        d = draw_truck_fields(rng, params)
        max_p = max(s.processing for s in d.scenarios)
        deadline = min(params.horizon, d.arrival + d.setup + max_p + d.slack)
        trucks.append(
            Truck(
                id=j,
                arrival=d.arrival,
                deadline=deadline,
                setup=d.setup,
                wait_cost=d.wait_cost,
                miss_penalty=params.miss_multiplier * d.wait_cost,
                scenarios=tuple(d.scenarios),
            )
        )
    cap_w, cap_e, cap_v = _capacities(trucks, params)
    inst = Instance(
        name=_format_name(params, sum(len(t.scenarios) for t in trucks)),
        horizon=params.horizon,
        docks=params.docks,
        cap_workers=cap_w,
        cap_equipment=cap_e,
        cap_vehicles=cap_v,
        trucks=tuple(trucks),
    )
    return validate_instance(inst)


def _format_name(params: GenParams, total_scenarios: int) -> str:
    return (
        f"tf-{params.horizon}-d-{params.docks}-tr-{params.trucks}"
        f"-sce-{total_scenarios}"
    )


def instance_name(params: GenParams) -> str:
    """Filename stem; the scenario total is realized by replaying the draws."""
    rng = rng_for(params.seed)
    total = sum(
        draw_truck_fields(rng, params).scenario_count for _ in range(params.trucks)
    )
    return _format_name(params, total)


def generate_suite(base: GenParams, dock_values, trucks_rule) -> list[Instance]:
    """One instance per (docks, truck count) pair from the rule.

    `trucks_rule(d)` yields the truck counts for `d` docks; each count must
    satisfy 3*d <= trucks <= min(4*d, 200).  Seeds are base.seed + index in
    emission order, so suites can be (re)generated in any order or in
    parallel.
    """
    out = []
    index = 0
    for d in dock_values:
        for tr in trucks_rule(d):
            if not (3 * d <= tr <= min(4 * d, 200)):
                raise ValueError(
                    f"truck count {tr} out of bounds [{3 * d}, {min(4 * d, 200)}] "
                    f"for {d} docks"
                )
            out.append(
                generate(replace(base, docks=d, trucks=tr, seed=base.seed + index))
            )
            index += 1
    return out


def paper_rule(step: int = 5):
    """Truck counts 3d..min(4d,200) in the given step, per the benchmark layout."""

    def rule(d: int):
        return range(3 * d, min(4 * d, 200) + 1, step)

    return rule
