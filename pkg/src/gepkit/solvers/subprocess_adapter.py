"""Adapter for external solver executables, plus a reference shim.

File contract:

* The adapter writes ``model.lp`` and ``params.txt`` into a scratch
  directory and invokes ``<command> <model> <params> <solution>``.
* ``params.txt`` holds ``key = value`` lines (``time_limit``, ``mip_gap``,
  optionally ``solver``).
* The executable writes the solution file: a ``status <word>`` line, an
  optional ``objective <number>`` line, then one ``<name> <value>`` line per
  variable using the names from the model file.

The command comes from ``request.options["command"]`` or the
``GEPKIT_SOLVER_CMD`` environment variable. ``shim_main`` implements the
executable side on top of the in-process solvers, so
``python -m gepkit.solvers.subprocess_adapter`` (or the installed
``gepkit-solve-file`` script) is itself a valid external solver.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import sys
import tempfile
from pathlib import Path

from ..model import ModelInstance
from .formats import lp_safe_name, lp_to_model, read_model, write_model
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

_STATUS_WORDS = {
    "optimal": OPTIMAL,
    "infeasible": INFEASIBLE,
    "unbounded": UNBOUNDED,
    "time_limit": TIME_LIMIT,
    "timelimit": TIME_LIMIT,
    "error": ERROR,
}


def solve_subprocess(model: ModelInstance, request: SolverRequest) -> Solution:
    command = request.options.get("command") or os.environ.get("GEPKIT_SOLVER_CMD")
    if not command:
        raise SolverError(
            "no external solver configured; set GEPKIT_SOLVER_CMD or "
            "options['command']"
        )
    with tempfile.TemporaryDirectory(prefix="gepkit-solve-") as scratch:
        root = Path(scratch)
        model_path = root / "model.lp"
        params_path = root / "params.txt"
        solution_path = root / "solution.txt"
        write_model(model, model_path)
        lines = []
        if request.time_limit is not None:
            lines.append(f"time_limit = {request.time_limit}")
        if request.mip_gap is not None:
            lines.append(f"mip_gap = {request.mip_gap}")
        params_path.write_text("\n".join(lines) + ("\n" if lines else ""))

        argv = shlex.split(command) + [str(model_path), str(params_path), str(solution_path)]
        proc = subprocess.run(argv, capture_output=True, text=True)
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout).strip().splitlines()[-5:]
            raise SolverError(
                f"external solver exited with {proc.returncode}: " + " | ".join(tail)
            )
        if not solution_path.exists():
            raise SolverError("external solver wrote no solution file")
        return _read_solution(solution_path.read_text(), model)


def _read_solution(text: str, model: ModelInstance) -> Solution:
    status = None
    objective = None
    values: dict[str, float] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        if tokens[0] == "status":
            word = tokens[1].lower() if len(tokens) > 1 else ""
            if word not in _STATUS_WORDS:
                raise SolverError(f"solution line {line_no}: unknown status {word!r}")
            status = _STATUS_WORDS[word]
        elif tokens[0] == "objective":
            objective = float(tokens[1])
        elif len(tokens) == 2:
            values[lp_to_model(tokens[0])] = float(tokens[1])
        else:
            raise SolverError(f"solution line {line_no}: cannot parse {raw!r}")
    if status is None:
        raise SolverError("solution file has no status line")
    if status == OPTIMAL:
        missing = [v.name for v in model.variables if v.name not in values]
        if missing:
            raise SolverError(
                f"solution file misses {len(missing)} variables, e.g. {missing[0]}"
            )
    return Solution(
        status=status,
        objective=objective,
        values=values,
        solver="subprocess",
    )


def write_solution_file(path: str | Path, solution: Solution) -> None:
    lines = [f"status {solution.status}"]
    if solution.objective is not None:
        lines.append(f"objective {solution.objective!r}")
    for name in sorted(solution.values):
        lines.append(f"{lp_safe_name(name)} {solution.values[name]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def shim_main(argv: list[str] | None = None) -> int:
    """Executable side of the contract, backed by the in-process solvers."""
    from .interface import solve

    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 3:
        print("usage: gepkit-solve-file MODEL PARAMS SOLUTION", file=sys.stderr)
        return 2
    model_file, params_file, solution_file = argv
    try:
        model = read_model(model_file)
        request = SolverRequest()
        solver = "auto"
        params_text = Path(params_file).read_text() if Path(params_file).exists() else ""
        for raw in params_text.splitlines():
            if "=" not in raw:
                continue
            key, _, value = raw.partition("=")
            key, value = key.strip(), value.strip()
            if key == "time_limit":
                request.time_limit = float(value)
            elif key == "mip_gap":
                request.mip_gap = float(value)
            elif key == "solver":
                solver = value
        solution = solve(model, solver, request)
    except Exception as exc:  # contract: report failure through the file
        Path(solution_file).write_text(f"status error\n# {exc}\n")
        print(f"gepkit-solve-file: {exc}", file=sys.stderr)
        return 1
    write_solution_file(solution_file, solution)
    return 0


if __name__ == "__main__":
    sys.exit(shim_main())
