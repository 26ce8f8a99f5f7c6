"""Solver adapters and model file formats."""

from .interface import (  # noqa: F401
    Solution,
    SolverError,
    SolverRequest,
    available_solvers,
    fix_variables,
    solve,
)
