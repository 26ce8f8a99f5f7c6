"""Best-first branch and bound for mixed-integer conic models.

Every node relaxation is a continuous Clarabel solve with tightened variable
bounds; integrality never reaches the conic solver. Nodes come off a heap
ordered by parent bound, so the incumbent gap is always known. Candidate
incumbents get one polish solve with all integers pinned to clean up the
continuous part.
"""

from __future__ import annotations

import heapq
import math
import time

from ..model import ModelInstance, name_sort_key
from .clarabel_adapter import solve_clarabel
from .interface import (
    ERROR,
    INFEASIBLE,
    INT_TOL,
    OPTIMAL,
    TIME_LIMIT,
    UNBOUNDED,
    Solution,
    SolverError,
    SolverRequest,
    relative_gap,
)

_INF = float("inf")


def solve_conic_bb(model: ModelInstance, request: SolverRequest) -> Solution:
    int_vars = sorted(
        (v for v in model.variables if v.is_integral()),
        key=lambda v: name_sort_key(v.family, v.key),
    )
    root = {v.index: (v.lower, v.upper) for v in int_vars}
    node_request = SolverRequest(
        time_limit=None, verbose=False, options=dict(request.options)
    )

    if not int_vars:
        return solve_clarabel(model, request)

    started = time.monotonic()
    node_limit = int(request.options.get("node_limit", 200000))
    deadline = None if request.time_limit is None else started + request.time_limit

    def remaining() -> float | None:
        if deadline is None:
            return None
        return max(0.1, deadline - time.monotonic())

    heap: list[tuple[float, int, dict]] = [(-_INF, 0, root)]
    counter = 1
    incumbent: Solution | None = None
    incumbent_obj = _INF
    nodes = 0
    hit_limit = False

    while heap:
        bound, _, overrides = heapq.heappop(heap)
        if bound >= incumbent_obj - 1e-9 * max(1.0, abs(incumbent_obj)):
            continue
        if incumbent is not None and request.mip_gap is not None:
            if relative_gap(incumbent_obj, bound) <= request.mip_gap:
                break
        if nodes >= node_limit or (deadline is not None and time.monotonic() > deadline):
            hit_limit = True
            break
        nodes += 1

        node_request.time_limit = remaining()
        relax = solve_clarabel(model, node_request, bound_overrides=overrides)
        if relax.status == INFEASIBLE:
            continue
        if relax.status == UNBOUNDED:
            if incumbent is None and nodes == 1:
                return Solution(UNBOUNDED, None, {}, "conic_bb", message="unbounded relaxation")
            raise SolverError("unbounded node relaxation below a bounded root")
        if relax.status != OPTIMAL:
            if relax.status == TIME_LIMIT:
                hit_limit = True
                break
            raise SolverError(f"node relaxation failed: {relax.message}")
        obj = relax.objective
        if obj >= incumbent_obj - 1e-9 * max(1.0, abs(incumbent_obj)):
            continue

        branch_var = None
        worst_frac = INT_TOL
        for v in int_vars:
            val = relax.values[v.name]
            frac = abs(val - round(val))
            if frac > worst_frac:
                worst_frac = frac
                branch_var = v
        if branch_var is None:
            candidate = _polish(model, node_request, overrides, relax, int_vars)
            if candidate.objective < incumbent_obj:
                incumbent = candidate
                incumbent_obj = candidate.objective
            continue

        val = relax.values[branch_var.name]
        lo, hi = overrides[branch_var.index]
        down = dict(overrides)
        down[branch_var.index] = (lo, float(math.floor(val)))
        up = dict(overrides)
        up[branch_var.index] = (float(math.ceil(val)), hi)
        for child in (down, up):
            clo, chi = child[branch_var.index]
            if clo <= chi:
                heapq.heappush(heap, (obj, counter, child))
                counter += 1

    open_bound = min((b for b, _, _ in heap), default=incumbent_obj)
    if incumbent is None:
        if hit_limit:
            return Solution(
                ERROR, None, {}, "conic_bb",
                message=f"limit reached after {nodes} nodes with no incumbent",
            )
        return Solution(INFEASIBLE, None, {}, "conic_bb", message="search exhausted")
    gap = relative_gap(incumbent_obj, min(open_bound, incumbent_obj))
    status = OPTIMAL
    if hit_limit and gap > (request.mip_gap or 0.0) + 1e-12:
        status = TIME_LIMIT
    return Solution(
        status=status,
        objective=incumbent_obj,
        values=incumbent.values,
        solver="conic_bb",
        gap=gap,
        message=f"{nodes} nodes",
    )


def _polish(
    model: ModelInstance,
    request: SolverRequest,
    overrides: dict,
    relax: Solution,
    int_vars: list,
) -> Solution:
    pinned = dict(overrides)
    for v in int_vars:
        rounded = float(round(relax.values[v.name]))
        pinned[v.index] = (rounded, rounded)
    polished = solve_clarabel(model, request, bound_overrides=pinned)
    if polished.status == OPTIMAL:
        for v in int_vars:
            polished.values[v.name] = pinned[v.index][0]
        return polished
    return relax
