"""Common solve entry point, solution container, and adapter registry.

Adapters register a callable ``fn(model, request) -> Solution`` under a short
name. ``solve(model, "auto")`` routes by structure: models with quadratic
rows go to the conic stack, anything else to HiGHS; free integer variables on
a conic model engage the branch-and-bound driver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from ..model import ModelInstance, VariableHandle

INT_TOL = 1e-6

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
TIME_LIMIT = "time_limit"
ERROR = "error"


class SolverError(RuntimeError):
    """Raised when an adapter cannot handle or finish a model."""


@dataclass
class SolverRequest:
    time_limit: float | None = None  # seconds
    mip_gap: float | None = None  # relative
    verbose: bool = False
    options: dict = field(default_factory=dict)


@dataclass
class Solution:
    status: str
    objective: float | None
    values: dict[str, float]  # keyed by canonical variable name
    solver: str
    gap: float | None = None
    message: str = ""

    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    def has_values(self) -> bool:
        return bool(self.values) and self.status in (OPTIMAL, TIME_LIMIT)

    def value(self, var: VariableHandle | str) -> float:
        name = var if isinstance(var, str) else var.name
        return self.values[name]

    def dense(self, model: ModelInstance) -> list[float]:
        """Values ordered by the model's variable positions."""
        out = [0.0] * len(model.variables)
        for v in model.variables:
            out[v.index] = self.values[v.name]
        return out


_REGISTRY: dict[str, Callable[[ModelInstance, SolverRequest], Solution]] = {}


def register(name: str, fn: Callable[[ModelInstance, SolverRequest], Solution]) -> None:
    _REGISTRY[name] = fn


def available_solvers() -> list[str]:
    _ensure_loaded()
    return sorted(_REGISTRY)


_loaded = False


def _ensure_loaded() -> None:
    global _loaded
    if _loaded:
        return
    _loaded = True
    from . import clarabel_adapter, conic_bb, highs_adapter, subprocess_adapter

    register("highs", highs_adapter.solve_highs)
    register("clarabel", clarabel_adapter.solve_clarabel)
    register("conic_bb", conic_bb.solve_conic_bb)
    register("subprocess", subprocess_adapter.solve_subprocess)


def _has_free_integers(model: ModelInstance) -> bool:
    return any(v.is_integral() and v.lower != v.upper for v in model.variables)


def pick_solver(model: ModelInstance) -> str:
    if model.quad_rows:
        return "conic_bb" if _has_free_integers(model) else "clarabel"
    return "highs"


def solve(
    model: ModelInstance,
    solver: str = "auto",
    request: SolverRequest | None = None,
) -> Solution:
    _ensure_loaded()
    request = request or SolverRequest()
    name = pick_solver(model) if solver == "auto" else solver
    try:
        fn = _REGISTRY[name]
    except KeyError:
        raise SolverError(
            f"unknown solver {name!r}; available: {', '.join(sorted(_REGISTRY))}"
        ) from None
    return fn(model, request)


def fix_variables(
    model: ModelInstance,
    fixes: Mapping[str, float],
    mode: str = "fix",
) -> ModelInstance:
    """Clamp named variables: ``fix`` pins them, ``lower_bound`` floors them.

    Integral variables are rounded to the nearest integer first; a value that
    is not integral beyond tolerance is an error rather than a silent round.
    """
    if mode not in ("fix", "lower_bound"):
        raise ValueError(f"unknown fixing mode {mode!r}")
    overrides: dict[int, tuple[float, float]] = {}
    for name, value in fixes.items():
        v = model.var_by_name(name)
        if v.is_integral():
            rounded = round(value)
            if abs(value - rounded) > 1e-4:
                raise SolverError(f"cannot fix {name} to non-integral {value}")
            value = float(rounded)
        if mode == "fix":
            overrides[v.index] = (value, value)
        else:
            upper = max(v.upper, value)
            overrides[v.index] = (value, upper)
    return model.with_variable_bounds(overrides)


def integral_enough(value: float, tol: float = INT_TOL) -> bool:
    return abs(value - round(value)) <= tol


def snap_integers(model: ModelInstance, values: dict[str, float]) -> dict[str, float]:
    """Round integral variables sitting within tolerance of an integer."""
    out = dict(values)
    for v in model.variables:
        if v.is_integral() and v.name in out and integral_enough(out[v.name]):
            out[v.name] = float(round(out[v.name]))
    return out


def relative_gap(incumbent: float, bound: float) -> float:
    if incumbent == bound:
        return 0.0
    return abs(incumbent - bound) / max(1.0, abs(incumbent))


def check_solution(model: ModelInstance, solution: Solution, tol: float = 1e-6) -> float:
    """Worst violation of the solution against the model; raises beyond tol."""
    if not solution.has_values():
        raise SolverError(f"no values to check (status {solution.status})")
    worst, name = model.max_violation(solution.dense(model))
    if worst > tol:
        raise SolverError(f"solution violates {name} by {worst:.3e}")
    return worst
