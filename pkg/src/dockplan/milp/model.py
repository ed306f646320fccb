"""Solver-agnostic model representation shared by every formulation.

A Model is a plain minimization IR: variables with finite bounds, an
integrality flag and an objective coefficient, plus sparse linear rows.
Both bundled solve paths (the simplex in `simplex.py`, branch-and-bound in
`bb.py`) and the scipy/HiGHS adapter in `highs_backend.py` consume the same
PreparedLP arrays, so an external backend can be swapped in behind the same
contract.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = "<=", "=", ">="

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
STATUS_NUMERIC = "numeric"
STATUS_FEASIBLE = "feasible"
STATUS_LIMIT = "limit"


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    name: str


class Model:
    """Mutable while building; solvers never modify a model they are given."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.obj_offset = 0.0
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.obj: list[float] = []
        self.integer: list[bool] = []
        self.var_names: list[str] = []
        self.constraints: list[Constraint] = []
        self._names: set[str] = set()

    @property
    def num_vars(self) -> int:
        return len(self.lb)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def _register_name(self, name: str | None, prefix: str, idx: int) -> str:
        if name is None:
            name = f"{prefix}{idx}"
        if name in self._names:
            raise ValueError(f"duplicate name {name!r}")
        self._names.add(name)
        return name

    def add_var(
        self,
        lb: float = 0.0,
        ub: float = 1.0,
        obj: float = 0.0,
        integer: bool = False,
        name: str | None = None,
    ) -> int:
        if not (math.isfinite(lb) and math.isfinite(ub)):
            raise ValueError(f"variable bounds must be finite, got [{lb}, {ub}]")
        if lb > ub:
            raise ValueError(f"empty variable bounds [{lb}, {ub}]")
        idx = self.num_vars
        self.var_names.append(self._register_name(name, "x", idx))
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.obj.append(float(obj))
        self.integer.append(bool(integer))
        return idx

    def add_constraint(self, coeffs, sense: str, rhs: float, name: str | None = None) -> int:
        if sense not in (LE, EQ, GE):
            raise ValueError(f"bad sense {sense!r}")
        if isinstance(coeffs, dict):
            coeffs = sorted(coeffs.items())
        pairs = []
        for var, coef in coeffs:
            if not (0 <= var < self.num_vars):
                raise ValueError(f"constraint references unknown variable {var}")
            if coef != 0.0:
                pairs.append((int(var), float(coef)))
        idx = self.num_constraints
        self.constraints.append(
            Constraint(tuple(pairs), sense, float(rhs), self._register_name(name, "c", idx))
        )
        return idx

    def set_objective_coeff(self, var: int, coef: float) -> None:
        self.obj[var] = float(coef)

    def fix(self, var: int, value: float) -> None:
        self.lb[var] = float(value)
        self.ub[var] = float(value)

    def copy(self) -> "Model":
        m = Model(self.name)
        m.obj_offset = self.obj_offset
        m.lb = list(self.lb)
        m.ub = list(self.ub)
        m.obj = list(self.obj)
        m.integer = list(self.integer)
        m.var_names = list(self.var_names)
        m.constraints = list(self.constraints)
        m._names = set(self._names)
        return m

    def row_activity(self, x: np.ndarray, row: Constraint) -> float:
        return sum(coef * x[var] for var, coef in row.coeffs)

    def is_feasible(self, x: np.ndarray, tol: float = 1e-6) -> bool:
        """Bounds, rows, and integrality all satisfied within tol."""
        for j in range(self.num_vars):
            if not (self.lb[j] - tol <= x[j] <= self.ub[j] + tol):
                return False
            if self.integer[j] and abs(x[j] - round(x[j])) > tol:
                return False
        for row in self.constraints:
            act = self.row_activity(x, row)
            if row.sense == LE and act > row.rhs + tol:
                return False
            if row.sense == GE and act < row.rhs - tol:
                return False
            if row.sense == EQ and abs(act - row.rhs) > tol:
                return False
        return True

    def objective_value(self, x: np.ndarray) -> float:
        return float(np.dot(self.obj, x)) + self.obj_offset


def add_rows(model: Model, rows) -> Model:
    """New model with extra rows; the original is untouched."""
    out = model.copy()
    for coeffs, sense, rhs, *name in rows:
        out.add_constraint(coeffs, sense, rhs, name[0] if name else None)
    return out


def fix_variable(model: Model, var: int, value: float) -> Model:
    """New model with one variable pinned to a value."""
    if not (0 <= var < model.num_vars):
        raise ValueError(f"unknown variable {var}")
    out = model.copy()
    out.fix(var, value)
    return out


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    objective: float | None = None


@dataclass
class PoolEntry:
    x: np.ndarray
    objective: float


@dataclass
class MipResult:
    status: str
    x: np.ndarray | None
    objective: float | None
    bound: float
    nodes: int
    pool: list[PoolEntry] = field(default_factory=list)


@dataclass
class SearchOptions:
    node_order: str = "breadth"  # "breadth" | "best" | "depth"
    time_limit: float | None = None
    abs_gap: float = 1e-6
    rel_gap: float = 0.0
    int_tol: float = 1e-6
    pool_threshold: float | None = None
    lazy_callback: object = None  # callable(x) -> list of violated (coeffs, sense, rhs) rows
    warm_starts: list | None = None
    integral_objective: bool | None = None
    lp_backend: str | None = None  # "simplex" | "highs" | None (auto)
    mip_backend: str = "auto"  # "bb" (bundled) | "highs" (delegated) | "auto"
    max_nodes: int | None = None

    def __post_init__(self):
        if self.node_order not in ("breadth", "best", "depth"):
            raise ValueError(f"bad node_order {self.node_order!r}")
        if self.mip_backend not in ("auto", "bb", "highs"):
            raise ValueError(f"bad mip_backend {self.mip_backend!r}")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.max_nodes is not None and self.max_nodes <= 0:
            raise ValueError("max_nodes must be positive")


@dataclass
class PreparedLP:
    """Arrays both LP backends consume; build once, vary only the bounds."""

    c: np.ndarray
    offset: float
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    senses: np.ndarray  # -1 for <=, 0 for =, +1 for >=
    rhs: np.ndarray
    a: sp.csr_matrix

    @property
    def num_vars(self) -> int:
        return len(self.c)

    @property
    def num_rows(self) -> int:
        return len(self.rhs)


_SENSE_CODE = {LE: -1, EQ: 0, GE: 1}


def prepare(model: Model, extra_rows=()) -> PreparedLP:
    n = model.num_vars
    rows = list(model.constraints)
    for coeffs, sense, rhs, *name in extra_rows:
        if isinstance(coeffs, dict):
            coeffs = sorted(coeffs.items())
        rows.append(Constraint(tuple(coeffs), sense, float(rhs), f"extra{len(rows)}"))
    m = len(rows)
    data, indices, indptr = [], [], [0]
    senses = np.empty(m, dtype=np.int8)
    rhs = np.empty(m)
    for i, row in enumerate(rows):
        for var, coef in row.coeffs:
            indices.append(var)
            data.append(coef)
        indptr.append(len(data))
        senses[i] = _SENSE_CODE[row.sense]
        rhs[i] = row.rhs
    a = sp.csr_matrix(
        (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int32)),
        shape=(m, n),
    )
    return PreparedLP(
        c=np.asarray(model.obj, dtype=float),
        offset=model.obj_offset,
        lb=np.asarray(model.lb, dtype=float),
        ub=np.asarray(model.ub, dtype=float),
        integer=np.asarray(model.integer, dtype=bool),
        senses=senses,
        rhs=rhs,
        a=a,
    )


def write_lp(model: Model) -> str:
    """Model in the standard LP text format, for external cross-checks."""

    def term(coef: float, name: str, first: bool) -> str:
        sign = "-" if coef < 0 else ("" if first else "+")
        mag = abs(coef)
        return f" {sign} {mag:.12g} {name}" if not first else f"{sign}{mag:.12g} {name}"

    lines = ["Minimize", " obj:"]
    parts = []
    first = True
    for j, coef in enumerate(model.obj):
        if coef != 0.0:
            parts.append(term(coef, model.var_names[j], first))
            first = False
    if not parts:
        parts = ["0 " + (model.var_names[0] if model.num_vars else "x0")]
    lines[-1] += " " + "".join(parts)
    lines.append("Subject To")
    for row in model.constraints:
        body = ""
        first = True
        for var, coef in row.coeffs:
            body += term(coef, model.var_names[var], first)
            first = False
        if first:
            body = "0 " + model.var_names[0]
        op = {LE: "<=", EQ: "=", GE: ">="}[row.sense]
        lines.append(f" {row.name}: {body} {op} {row.rhs:.12g}")
    lines.append("Bounds")
    for j in range(model.num_vars):
        lines.append(f" {model.lb[j]:.12g} <= {model.var_names[j]} <= {model.ub[j]:.12g}")
    general = [model.var_names[j] for j in range(model.num_vars) if model.integer[j]]
    if general:
        lines.append("Generals")
        lines.append(" " + " ".join(general))
    lines.append("End")
    return "\n".join(lines) + "\n"
