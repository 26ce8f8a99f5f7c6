"""LP/MILP solving through SciPy's HiGHS bindings."""

from __future__ import annotations

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import csr_matrix

from ..model import ModelInstance
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

# scipy.optimize.milp status codes
_STATUS = {0: OPTIMAL, 1: TIME_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED, 4: ERROR}


def solve_highs(model: ModelInstance, request: SolverRequest) -> Solution:
    if model.quad_rows:
        raise SolverError("highs handles linear rows only; use the conic stack")
    n = len(model.variables)
    if n == 0:
        raise SolverError("model has no variables")

    cost = np.zeros(n)
    for i, coef in model.objective.terms.items():
        cost[i] = coef
    integrality = np.array(
        [1 if v.is_integral() else 0 for v in model.variables], dtype=np.uint8
    )
    bounds = Bounds(
        np.array([v.lower for v in model.variables]),
        np.array([v.upper for v in model.variables]),
    )

    constraints = []
    if model.linear_rows:
        data, indices, indptr = [], [], [0]
        lo, hi = [], []
        for row in model.linear_rows:
            for i, coef in row.terms:
                indices.append(i)
                data.append(coef)
            indptr.append(len(indices))
            if row.sense == "<=":
                lo.append(-_INF)
                hi.append(row.rhs)
            elif row.sense == ">=":
                lo.append(row.rhs)
                hi.append(_INF)
            else:
                lo.append(row.rhs)
                hi.append(row.rhs)
        matrix = csr_matrix(
            (data, indices, indptr), shape=(len(model.linear_rows), n)
        )
        constraints.append(LinearConstraint(matrix, np.array(lo), np.array(hi)))

    options: dict = {"disp": bool(request.verbose)}
    if request.time_limit is not None:
        options["time_limit"] = float(request.time_limit)
    if request.mip_gap is not None:
        options["mip_rel_gap"] = float(request.mip_gap)
    if "node_limit" in request.options:
        options["node_limit"] = int(request.options["node_limit"])

    result = milp(
        c=cost,
        constraints=constraints,
        integrality=integrality,
        bounds=bounds,
        options=options,
    )

    status = _STATUS.get(result.status, ERROR)
    values: dict[str, float] = {}
    objective = None
    if result.x is not None:
        values = {v.name: float(result.x[v.index]) for v in model.variables}
        objective = float(result.fun) + model.objective.constant
    if status == TIME_LIMIT and result.x is None:
        status = ERROR
    gap = getattr(result, "mip_gap", None)
    return Solution(
        status=status,
        objective=objective,
        values=values,
        solver="highs",
        gap=float(gap) if gap is not None else None,
        message=str(result.message),
    )
