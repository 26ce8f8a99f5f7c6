"""Continuous LP and second-order-cone solving through Clarabel.

Integral variables are accepted only when their bounds already pin them;
anything with a free integer range belongs to the branch-and-bound driver.

Quadratic rows must match the voltage-product cone pattern
``alpha*(x^2 + y^2) - alpha*(a*b) <= 0`` which is passed to Clarabel as the
second-order cone ``||(2x, 2y, a-b)|| <= a+b``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.sparse import csc_matrix

from ..model import EQ, GE, LE, ModelInstance, QuadRow
from .interface import (
    ERROR,
    INFEASIBLE,
    OPTIMAL,
    TIME_LIMIT,
    UNBOUNDED,
    Solution,
    SolverError,
    SolverRequest,
)

_INF = float("inf")


def _classify_cone(row: QuadRow):
    """Socket a quad row into one of the two supported cone shapes.

    Returns ``("rotated", (x, y, a, b))`` for ``x^2 + y^2 <= a*b`` rows and
    ``("ball", scaled, radius)`` for ``sum c_i x_i^2 <= rhs`` rows, where
    ``scaled`` holds ``(index, sqrt(c_i))`` pairs.
    """
    if row.sense != LE or row.terms:
        raise SolverError(f"quadratic row {row.name} is not a plain cone")
    diag = [(i, c) for i, j, c in row.quad_terms if i == j]
    off = [(i, j, c) for i, j, c in row.quad_terms if i != j]
    if not off and diag and all(c > 0 for _, c in diag):
        if row.rhs < 0:
            raise SolverError(f"quadratic row {row.name} has a negative radius")
        return ("ball", [(i, math.sqrt(c)) for i, c in diag], math.sqrt(row.rhs))
    if abs(row.rhs) > 1e-12 or len(diag) != 2 or len(off) != 1:
        raise SolverError(f"quadratic row {row.name} has an unsupported pattern")
    (x_idx, cx), (y_idx, cy) = diag
    a_idx, b_idx, c_off = off[0]
    alpha = cx
    if alpha <= 0 or abs(cy - alpha) > 1e-9 * abs(alpha) or abs(c_off + alpha) > 1e-9 * abs(alpha):
        raise SolverError(f"quadratic row {row.name} has an unsupported pattern")
    return ("rotated", (x_idx, y_idx, a_idx, b_idx))


def solve_clarabel(
    model: ModelInstance,
    request: SolverRequest,
    bound_overrides: dict[int, tuple[float, float]] | None = None,
) -> Solution:
    import clarabel

    n = len(model.variables)
    if n == 0:
        raise SolverError("model has no variables")
    overrides = bound_overrides or {}
    for v in model.variables:
        if v.is_integral() and v.index not in overrides and v.lower != v.upper:
            raise SolverError(
                f"{v.name} is integral with a free range; use the conic_bb driver"
            )

    cost = np.zeros(n)
    for i, coef in model.objective.terms.items():
        cost[i] = coef

    rows_a: list[int] = []
    cols_a: list[int] = []
    data_a: list[float] = []
    rhs: list[float] = []
    cones = []
    at = 0

    def push(entries: list[tuple[int, float]], b_val: float) -> None:
        nonlocal at
        for col, coef in entries:
            rows_a.append(at)
            cols_a.append(col)
            data_a.append(coef)
        rhs.append(b_val)
        at += 1

    eq_rows = [r for r in model.linear_rows if r.sense == EQ]
    ineq_rows = [r for r in model.linear_rows if r.sense != EQ]

    for row in eq_rows:
        push(list(row.terms), row.rhs)
    if eq_rows:
        cones.append(clarabel.ZeroConeT(len(eq_rows)))

    ineq_count = 0
    for row in ineq_rows:
        if row.sense == LE:
            push(list(row.terms), row.rhs)
        else:
            push([(i, -c) for i, c in row.terms], -row.rhs)
        ineq_count += 1
    for v in model.variables:
        lo, hi = overrides.get(v.index, (v.lower, v.upper))
        if lo > hi:
            return Solution(INFEASIBLE, None, {}, "clarabel", message="empty bounds")
        if hi < _INF:
            push([(v.index, 1.0)], hi)
            ineq_count += 1
        if lo > -_INF:
            push([(v.index, -1.0)], -lo)
            ineq_count += 1
    if ineq_count:
        cones.append(clarabel.NonnegativeConeT(ineq_count))

    for row in model.quad_rows:
        shape = _classify_cone(row)
        if shape[0] == "rotated":
            x_idx, y_idx, a_idx, b_idx = shape[1]
            # s = b - A x must equal (a+b, 2x, 2y, a-b)
            push([(a_idx, -1.0), (b_idx, -1.0)], 0.0)
            push([(x_idx, -2.0)], 0.0)
            push([(y_idx, -2.0)], 0.0)
            push([(a_idx, -1.0), (b_idx, 1.0)], 0.0)
            cones.append(clarabel.SecondOrderConeT(4))
        else:
            _, scaled, radius = shape
            # s = (radius, sqrt(c_i) x_i, ...) in a second-order cone
            push([], radius)
            for idx, root in scaled:
                push([(idx, -root)], 0.0)
            cones.append(clarabel.SecondOrderConeT(len(scaled) + 1))

    a_mat = csc_matrix((data_a, (rows_a, cols_a)), shape=(at, n))
    p_mat = csc_matrix((n, n))
    settings = clarabel.DefaultSettings()
    settings.verbose = bool(request.verbose)
    if request.time_limit is not None:
        settings.time_limit = float(request.time_limit)
    settings.tol_feas = float(request.options.get("tol_feas", 1e-9))
    settings.tol_gap_abs = float(request.options.get("tol_gap_abs", 1e-9))
    settings.tol_gap_rel = float(request.options.get("tol_gap_rel", 1e-9))

    solver = clarabel.DefaultSolver(p_mat, cost, a_mat, np.array(rhs), cones, settings)
    result = solver.solve()

    status_name = str(result.status)
    if status_name in ("Solved", "AlmostSolved"):
        status = OPTIMAL
    elif status_name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        status = INFEASIBLE
    elif status_name in ("DualInfeasible", "AlmostDualInfeasible"):
        status = UNBOUNDED
    elif status_name == "MaxTime":
        status = TIME_LIMIT
    else:
        status = ERROR

    values: dict[str, float] = {}
    objective = None
    if status == OPTIMAL:
        x = np.asarray(result.x)
        values = {v.name: float(x[v.index]) for v in model.variables}
        objective = float(result.obj_val) + model.objective.constant
    return Solution(
        status=status,
        objective=objective,
        values=values,
        solver="clarabel",
        message=status_name,
    )
