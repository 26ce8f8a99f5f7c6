"""Solver-agnostic optimization model container.

A :class:`ModelInstance` is a plain in-memory description of a mixed-integer
problem with linear rows, optional convex quadratic rows (used for the
voltage-product cones), variable bounds and integrality, and a linear
objective. Builders register variables and rows under structured names of the
form ``family[idx1,idx2,...]``; adapters and file writers consume the frozen
structure without knowing anything about power systems.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

CONTINUOUS = "continuous"
BINARY = "binary"
INTEGER = "integer"
_KINDS = (CONTINUOUS, BINARY, INTEGER)

LE = "<="
GE = ">="
EQ = "=="
_SENSES = (LE, GE, EQ)

_FAMILY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
# Characters with structural meaning in names or the LP/MPS encodings.
_BAD_COMPONENT_RE = re.compile(r"[\[\](),\s:;*^]")

IndexKey = tuple


class ModelError(ValueError):
    """Raised for malformed variables, rows, or lookups."""


def canonical_name(family: str, key: IndexKey) -> str:
    if not key:
        return family
    return family + "[" + ",".join(str(c) for c in key) + "]"


def _check_family(family: str) -> None:
    if not _FAMILY_RE.match(family):
        raise ModelError(f"invalid family name {family!r}")


def _check_key(family: str, key: IndexKey) -> None:
    for comp in key:
        if isinstance(comp, bool) or not isinstance(comp, (int, str)):
            raise ModelError(
                f"index component {comp!r} of {family!r} must be int or str"
            )
        if isinstance(comp, str) and (not comp or _BAD_COMPONENT_RE.search(comp)):
            raise ModelError(
                f"index component {comp!r} of {family!r} contains reserved characters"
            )


def _component_sort_key(comp: int | str) -> tuple:
    # Integers order numerically before strings; never mixed within a family
    # position in practice, but the key must stay total either way.
    if isinstance(comp, int):
        return (0, comp, "")
    return (1, 0, comp)


def name_sort_key(family: str, key: IndexKey) -> tuple:
    return (family, tuple(_component_sort_key(c) for c in key))


@dataclass(frozen=True, slots=True)
class VariableHandle:
    """One registered variable: position, structured name, kind, bounds."""

    index: int
    family: str
    key: IndexKey
    kind: str
    lower: float
    upper: float

    @property
    def name(self) -> str:
        return canonical_name(self.family, self.key)

    def is_integral(self) -> bool:
        return self.kind != CONTINUOUS


class LinearExpr:
    """Sparse linear expression: coefficient map over variable positions."""

    __slots__ = ("terms", "constant")

    def __init__(self, constant: float = 0.0):
        self.terms: dict[int, float] = {}
        self.constant = float(constant)

    def add(self, var: VariableHandle, coef: float) -> "LinearExpr":
        if coef != 0.0:
            new = self.terms.get(var.index, 0.0) + coef
            if new == 0.0:
                self.terms.pop(var.index, None)
            else:
                self.terms[var.index] = new
        return self

    def add_constant(self, value: float) -> "LinearExpr":
        self.constant += value
        return self

    def add_expr(self, other: "LinearExpr", scale: float = 1.0) -> "LinearExpr":
        for idx, coef in other.terms.items():
            new = self.terms.get(idx, 0.0) + scale * coef
            if new == 0.0:
                self.terms.pop(idx, None)
            else:
                self.terms[idx] = new
        self.constant += scale * other.constant
        return self

    def value(self, values: Sequence[float]) -> float:
        return self.constant + sum(c * values[i] for i, c in self.terms.items())

    def copy(self) -> "LinearExpr":
        out = LinearExpr(self.constant)
        out.terms = dict(self.terms)
        return out

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True, slots=True)
class LinearRow:
    """Frozen linear constraint ``sum(coef*var) sense rhs``.

    The expression constant has already been folded into ``rhs``.
    """

    family: str
    key: IndexKey
    terms: tuple[tuple[int, float], ...]
    sense: str
    rhs: float

    @property
    def name(self) -> str:
        return canonical_name(self.family, self.key)

    def activity(self, values: Sequence[float]) -> float:
        return sum(c * values[i] for i, c in self.terms)

    def violation(self, values: Sequence[float]) -> float:
        """Positive amount by which the row is broken at ``values``."""
        act = self.activity(values)
        if self.sense == LE:
            return max(0.0, act - self.rhs)
        if self.sense == GE:
            return max(0.0, self.rhs - act)
        return abs(act - self.rhs)


@dataclass(frozen=True, slots=True)
class QuadRow:
    """Frozen quadratic constraint ``sum(q*vi*vj) + sum(c*var) sense rhs``.

    The only producer is the voltage-product cone, whose quadratic pattern is
    ``cij^2 + sij^2 - cii_i*cii_j <= 0``, but the container stays generic.
    """

    family: str
    key: IndexKey
    quad_terms: tuple[tuple[int, int, float], ...]
    terms: tuple[tuple[int, float], ...]
    sense: str
    rhs: float

    @property
    def name(self) -> str:
        return canonical_name(self.family, self.key)

    def activity(self, values: Sequence[float]) -> float:
        quad = sum(c * values[i] * values[j] for i, j, c in self.quad_terms)
        return quad + sum(c * values[i] for i, c in self.terms)

    def violation(self, values: Sequence[float]) -> float:
        act = self.activity(values)
        if self.sense == LE:
            return max(0.0, act - self.rhs)
        if self.sense == GE:
            return max(0.0, self.rhs - act)
        return abs(act - self.rhs)


@dataclass
class ModelInstance:
    """Mutable model under construction; adapters treat it as read-only."""

    name: str = "model"
    variables: list[VariableHandle] = field(default_factory=list)
    linear_rows: list[LinearRow] = field(default_factory=list)
    quad_rows: list[QuadRow] = field(default_factory=list)
    objective: LinearExpr = field(default_factory=LinearExpr)
    _var_lookup: dict[str, int] = field(default_factory=dict)
    _row_names: set = field(default_factory=set)

    # -- variables ---------------------------------------------------------

    def add_var(
        self,
        family: str,
        key: IndexKey = (),
        *,
        kind: str = CONTINUOUS,
        lower: float = 0.0,
        upper: float = float("inf"),
    ) -> VariableHandle:
        _check_family(family)
        _check_key(family, key)
        if kind not in _KINDS:
            raise ModelError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lower, upper = max(0.0, lower), min(1.0, upper)
        if not lower <= upper:
            raise ModelError(
                f"empty bound interval [{lower}, {upper}] for "
                f"{canonical_name(family, key)}"
            )
        name = canonical_name(family, key)
        if name in self._var_lookup:
            raise ModelError(f"duplicate variable {name}")
        handle = VariableHandle(
            index=len(self.variables),
            family=family,
            key=tuple(key),
            kind=kind,
            lower=float(lower),
            upper=float(upper),
        )
        self.variables.append(handle)
        self._var_lookup[name] = handle.index
        return handle

    def var(self, family: str, *key) -> VariableHandle:
        name = canonical_name(family, tuple(key))
        try:
            return self.variables[self._var_lookup[name]]
        except KeyError:
            raise ModelError(f"unknown variable {name}") from None

    def has_var(self, family: str, *key) -> bool:
        return canonical_name(family, tuple(key)) in self._var_lookup

    def var_by_name(self, name: str) -> VariableHandle:
        try:
            return self.variables[self._var_lookup[name]]
        except KeyError:
            raise ModelError(f"unknown variable {name}") from None

    def family_vars(self, family: str) -> list[VariableHandle]:
        return [v for v in self.variables if v.family == family]

    # -- rows --------------------------------------------------------------

    def _register_row_name(self, family: str, key: IndexKey) -> None:
        _check_family(family)
        _check_key(family, key)
        name = canonical_name(family, key)
        if name in self._row_names or name in self._var_lookup:
            raise ModelError(f"duplicate row name {name}")
        self._row_names.add(name)

    def add_row(
        self, family: str, key: IndexKey, expr: LinearExpr, sense: str, rhs: float
    ) -> LinearRow:
        if sense not in _SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        self._register_row_name(family, key)
        terms = tuple(sorted(expr.terms.items()))
        row = LinearRow(
            family=family,
            key=tuple(key),
            terms=terms,
            sense=sense,
            rhs=float(rhs) - expr.constant,
        )
        self.linear_rows.append(row)
        return row

    def add_quad_row(
        self,
        family: str,
        key: IndexKey,
        quad_terms: Iterable[tuple[VariableHandle, VariableHandle, float]],
        expr: LinearExpr,
        sense: str,
        rhs: float,
    ) -> QuadRow:
        if sense not in _SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        self._register_row_name(family, key)
        quad = tuple(
            (min(a.index, b.index), max(a.index, b.index), float(c))
            for a, b, c in quad_terms
            if c != 0.0
        )
        row = QuadRow(
            family=family,
            key=tuple(key),
            quad_terms=quad,
            terms=tuple(sorted(expr.terms.items())),
            sense=sense,
            rhs=float(rhs) - expr.constant,
        )
        self.quad_rows.append(row)
        return row

    def set_objective(self, expr: LinearExpr) -> None:
        self.objective = expr.copy()

    # -- introspection -----------------------------------------------------

    def row_census(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for row in self.linear_rows:
            counts[row.family] = counts.get(row.family, 0) + 1
        for row in self.quad_rows:
            counts[row.family] = counts.get(row.family, 0) + 1
        return counts

    def var_census(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for v in self.variables:
            counts[v.family] = counts.get(v.family, 0) + 1
        return counts

    def canonical_variables(self) -> list[VariableHandle]:
        return sorted(self.variables, key=lambda v: name_sort_key(v.family, v.key))

    def canonical_linear_rows(self) -> list[LinearRow]:
        return sorted(self.linear_rows, key=lambda r: name_sort_key(r.family, r.key))

    def canonical_quad_rows(self) -> list[QuadRow]:
        return sorted(self.quad_rows, key=lambda r: name_sort_key(r.family, r.key))

    def all_rows(self) -> list:
        return self.linear_rows + self.quad_rows

    def objective_value(self, values: Sequence[float]) -> float:
        return self.objective.value(values)

    def max_violation(self, values: Sequence[float]) -> tuple[float, str]:
        """Worst constraint or bound violation at ``values`` and its name."""
        worst, name = 0.0, ""
        for v in self.variables:
            gap = max(v.lower - values[v.index], values[v.index] - v.upper, 0.0)
            if gap > worst:
                worst, name = gap, v.name
        for row in self.linear_rows:
            gap = row.violation(values)
            if gap > worst:
                worst, name = gap, row.name
        for row in self.quad_rows:
            gap = row.violation(values)
            if gap > worst:
                worst, name = gap, row.name
        return worst, name

    def with_variable_bounds(
        self, bounds: Mapping[int, tuple[float, float]]
    ) -> "ModelInstance":
        """Structural copy sharing rows, with selected bounds replaced."""
        out = ModelInstance(name=self.name)
        out.linear_rows = list(self.linear_rows)
        out.quad_rows = list(self.quad_rows)
        out.objective = self.objective.copy()
        out._row_names = set(self._row_names)
        for v in self.variables:
            if v.index in bounds:
                lo, hi = bounds[v.index]
                if not lo <= hi:
                    raise ModelError(f"empty bound interval for {v.name}")
                v = VariableHandle(v.index, v.family, v.key, v.kind, float(lo), float(hi))
            out.variables.append(v)
        out._var_lookup = dict(self._var_lookup)
        return out
