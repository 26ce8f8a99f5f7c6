"""Command-line front end: load a dataset, assemble a case, solve, report.

Exit codes: 0 solved (or emitted) fine, 1 runtime failure, 2 bad usage,
3 proven infeasible, 4 dataset validation failure. Infeasibility gets its
own code because several workflows treat it as a finding, not an error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .campaigns import CAMPAIGNS, run_campaign
from .inertia import InertiaError
from .isf import NetworkError
from .oracle import OracleError
from .solvers import SolverError, SolverRequest, solve
from .solvers.formats import write_model
from .system import DataError, load_system, load_temporal, validate_coverage
from .temporal import TemporalError
from .workflows import (
    CaseSpec,
    WorkflowError,
    assemble_case,
    compute_metrics,
    read_run_solution,
    run_ex_post_ac,
    run_ex_post_inertia,
    write_run_dir,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_INVALID_DATA = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gepkit",
        description="Expansion-planning cases: assemble, solve, re-check, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="assemble and solve one case")
    run.add_argument("dataset", help="dataset directory")
    run.add_argument("--case", required=True, choices=("bc", "ic", "rc", "lego"))
    run.add_argument("--kappa", type=float, default=None,
                     help="clean-production floor in [0,1]; dataset default if omitted")
    run.add_argument("--emit-only", action="store_true",
                     help="write the model file and stop before solving")
    run.add_argument("--solver", default="auto")
    run.add_argument("--time-limit", type=float, default=None, metavar="SECONDS")
    run.add_argument("--mip-gap", type=float, default=None, metavar="FRACTION")
    run.add_argument("--out", default=None, help="run directory to write")
    run.set_defaults(func=cmd_run)

    expost = sub.add_parser("expost", help="re-run a solved case under extra constraints")
    expost.add_argument("target", choices=("inertia", "ac"),
                        help="which constraint block to re-check against")
    expost.add_argument("dataset", help="dataset directory")
    expost.add_argument("--base", required=True, help="run directory of the base solve")
    expost.add_argument("--mode", choices=("ops-only", "add-investments"),
                        default="ops-only", help="inertia re-run flavor")
    expost.add_argument("--enforce-policy", action="store_true",
                        help="keep the clean-production floor binding in ops-only mode")
    expost.add_argument("--kappa", type=float, default=None)
    expost.add_argument("--solver", default="auto")
    expost.add_argument("--time-limit", type=float, default=None, metavar="SECONDS")
    expost.add_argument("--mip-gap", type=float, default=None, metavar="FRACTION")
    expost.add_argument("--out", default=None)
    expost.set_defaults(func=cmd_expost)

    validate = sub.add_parser("validate", help="load and cross-check a dataset")
    validate.add_argument("dataset", help="dataset directory")
    validate.set_defaults(func=cmd_validate)

    oracle = sub.add_parser("oracle", help="randomized builder-vs-oracle campaigns")
    oracle.add_argument("--suite", choices=CAMPAIGNS + ("all",), default="all")
    oracle.add_argument("--n", type=int, default=50, help="instances per campaign")
    oracle.add_argument("--seed", type=int, default=7)
    oracle.set_defaults(func=cmd_oracle)
    return parser


def _load(dataset: str):
    system = load_system(dataset)
    temporal = load_temporal(dataset)
    validate_coverage(system, temporal)
    return system, temporal


def _request(args) -> SolverRequest:
    return SolverRequest(time_limit=args.time_limit, mip_gap=args.mip_gap)


def _fmt(value: float, places: int) -> str:
    # keep solver dust from printing as "-0.000000"
    out = f"{value:.{places}f}"
    return f"{0.0:.{places}f}" if float(out) == 0.0 else out


def _print_report(report) -> None:
    print(f"status: {report.status}  solver: {report.solver}")
    if report.objective is None:
        return
    print(f"objective: {report.objective!r} MEUR")
    for name in sorted(report.cost_breakdown):
        print(f"  cost.{name}: {_fmt(report.cost_breakdown[name], 6)}")
    print(f"clean share: {report.clean_share:.4f}  "
          f"avg inertia: {report.avg_inertia_s:.4f} s  "
          f"unserved: {_fmt(report.unserved_gwh, 6)} GWh")
    if report.reactive_gvarh is not None:
        parts = ", ".join(
            f"{tech}={_fmt(val, 4)}" for tech, val in sorted(report.reactive_gvarh.items())
        )
        print(f"reactive by tech (GVarh): {parts}")
    if report.delta_objective is not None:
        print(f"delta vs base: {report.delta_objective:.6f} MEUR")


def _status_exit(status: str) -> int:
    if status in ("optimal", "time_limit"):
        return EXIT_OK
    if status == "infeasible":
        return EXIT_INFEASIBLE
    return EXIT_ERROR


def cmd_run(args) -> int:
    system, temporal = _load(args.dataset)
    spec = CaseSpec(kind=args.case, kappa=args.kappa)
    model = assemble_case(spec, system, temporal)
    if args.emit_only:
        if not args.out:
            print("gepkit run: --emit-only needs --out", file=sys.stderr)
            return EXIT_USAGE
    if args.out and args.emit_only:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = write_model(model, out / "model.lp")
        print(f"model written to {path} ({len(model.variables)} vars, "
              f"{len(model.linear_rows) + len(model.quad_rows)} rows)")
        return EXIT_OK
    solution = solve(model, solver=args.solver, request=_request(args))
    report = compute_metrics(
        solution, system, temporal,
        case=spec.kind, kappa=spec.resolve_kappa(system),
        config=spec.resolve_inertia(system),
    )
    if args.out:
        write_run_dir(args.out, spec, model, solution, report, system, temporal)
        print(f"run directory: {args.out}")
    _print_report(report)
    return _status_exit(solution.status)


def cmd_expost(args) -> int:
    system, temporal = _load(args.dataset)
    base_dir = Path(args.base)
    if not (base_dir / "report.json").exists():
        print(f"gepkit expost: no report.json under {base_dir}", file=sys.stderr)
        return EXIT_ERROR
    base = read_run_solution(base_dir)
    request = _request(args)
    if args.target == "inertia":
        mode = args.mode.replace("-", "_")
        model, solution, report = run_ex_post_inertia(
            base, mode, system, temporal,
            kappa=args.kappa, enforce_policy=args.enforce_policy,
            solver=args.solver, request=request,
        )
        spec = CaseSpec(kind="ic", kappa=args.kappa, expost=mode)
    else:
        model, solution, report = run_ex_post_ac(
            base, system, temporal,
            kappa=args.kappa, solver=args.solver, request=request,
        )
        spec = CaseSpec(kind="rc", kappa=args.kappa, expost="add_investments")
    if args.out:
        write_run_dir(args.out, spec, model, solution, report, system, temporal)
        print(f"run directory: {args.out}")
    _print_report(report)
    return _status_exit(solution.status)


def cmd_validate(args) -> int:
    system, temporal = _load(args.dataset)
    print(
        f"OK, {len(system.buses)} buses, {len(system.lines)} lines, "
        f"{len(system.thermal)} thermal, {len(system.renewables)} renewable, "
        f"{len(system.storages)} storage, {len(system.facts)} facts, "
        f"{len(temporal.step_pairs())} steps over {temporal.n_periods} periods"
    )
    return EXIT_OK


def cmd_oracle(args) -> int:
    names = CAMPAIGNS if args.suite == "all" else (args.suite,)
    all_ok = True
    for name in names:
        result = run_campaign(name, args.n, args.seed)
        print(result.summary())
        all_ok = all_ok and result.ok()
    return EXIT_OK if all_ok else EXIT_ERROR


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except (DataError, TemporalError) as exc:
        print(f"gepkit: invalid dataset: {exc}", file=sys.stderr)
        return EXIT_INVALID_DATA
    except (WorkflowError, InertiaError, NetworkError, SolverError,
            OracleError, OSError) as exc:
        print(f"gepkit: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
