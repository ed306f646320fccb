"""dockplan: exact dock-assignment and truck-scheduling optimization.

Compact time-indexed integer models, preprocessing and valid inequalities,
a Dantzig-Wolfe branch-and-price solver, a seeded instance generator, and a
brute-force oracle that anchors every solver's correctness on small
instances.
"""

from .core import (
    Assignment,
    CostBreakdown,
    Instance,
    ParseError,
    ResourceScenario,
    Schedule,
    Truck,
    ValidationError,
    Violation,
    check_feasibility,
    evaluate,
    load_instance,
    load_schedule,
    prune_dominated_scenarios,
    save_instance,
    save_schedule,
)
from .instgen import SDPT, SIPT, GenParams, generate, generate_suite, instance_name

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "CostBreakdown",
    "GenParams",
    "Instance",
    "ParseError",
    "ResourceScenario",
    "SDPT",
    "SIPT",
    "Schedule",
    "Truck",
    "ValidationError",
    "Violation",
    "check_feasibility",
    "evaluate",
    "generate",
    "generate_suite",
    "instance_name",
    "load_instance",
    "load_schedule",
    "prune_dominated_scenarios",
    "save_instance",
    "save_schedule",
]
