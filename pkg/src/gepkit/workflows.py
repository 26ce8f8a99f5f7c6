"""Case assembly, multi-stage re-run procedures, and report metrics.

A case kind picks which blocks go into the model:

    bc    linearized network, no frequency-response block
    ic    linearized network + frequency-response block
    rc    conic network, no frequency-response block
    lego  conic network + frequency-response block

``verify_assembly`` takes a census of constraint families and checks it
against that contract, so a mis-assembled case fails loudly instead of
silently optimizing the wrong problem.

The re-run procedures answer "what would this capacity mix cost under the
constraints it ignored": ``run_ex_post_inertia`` re-solves with the
frequency-response block after pinning (or lower-bounding) the investment
decisions of a base solution, and ``run_ex_post_ac`` does the same with the
conic network, leaving reactive-support devices free to be added.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, fields
from pathlib import Path

from .blocks import (
    BuildContext,
    build_dc_network,
    build_general,
    build_objective,
    build_renewable_policy,
    build_storage,
    build_thermal,
)
from .inertia import (
    InertiaConfig,
    build_inertia,
    evaluate_inertia,
    format_inertia_report,
)
from .isf import NetworkError
from .model import ModelInstance
from .socp import (
    build_socp,
    cone_residual,
    format_cone_report,
    format_voltage_report,
    recover_voltages,
)
from .solvers import Solution, SolverRequest, solve
from .solvers.formats import write_model
from .system import SystemData
from .temporal import TemporalStructure


class WorkflowError(ValueError):
    """Raised for invalid case specs or mis-assembled models."""


CASE_KINDS = ("bc", "ic", "rc", "lego")
EXPOST_MODES = ("none", "ops_only", "add_investments")

REPORT_FORMAT_VERSION = 1


def uses_linear_network(kind: str) -> bool:
    return kind in ("bc", "ic")


def uses_conic_network(kind: str) -> bool:
    return kind in ("rc", "lego")


def uses_inertia(kind: str) -> bool:
    return kind in ("ic", "lego")


@dataclass(frozen=True)
class CaseSpec:
    """What to build and how to follow up.

    ``kappa`` is the minimum clean share of served demand; ``None`` defers to
    the dataset default. ``expost`` names the follow-up procedure a driver
    should run after the base solve; the assembly itself only depends on
    ``kind``, ``kappa`` and ``inertia``.
    """

    kind: str
    kappa: float | None = None
    expost: str = "none"
    inertia: InertiaConfig | None = None
    out_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.lower())
        if self.kind not in CASE_KINDS:
            raise WorkflowError(
                f"unknown case kind {self.kind!r}; expected one of {CASE_KINDS}"
            )
        if self.expost not in EXPOST_MODES:
            raise WorkflowError(
                f"unknown ex-post mode {self.expost!r}; expected one of {EXPOST_MODES}"
            )
        if self.kappa is not None and not 0.0 <= self.kappa <= 1.0:
            raise WorkflowError(f"kappa must lie in [0, 1], got {self.kappa}")

    def resolve_kappa(self, system: SystemData) -> float:
        return system.kappa_default if self.kappa is None else self.kappa

    def resolve_inertia(self, system: SystemData) -> InertiaConfig:
        return self.inertia if self.inertia is not None else InertiaConfig.from_system(system)

    def echo(self) -> dict:
        """Spec echo for the run directory: plain data, stable key order."""
        out = {"kind": self.kind, "kappa": self.kappa, "expost": self.expost}
        if self.inertia is not None:
            out["inertia"] = {
                f.name: getattr(self.inertia, f.name) for f in fields(self.inertia)
            }
        return out


# -- constraint-family census ----------------------------------------------

CORE_ROW_FAMILIES = frozenset({
    "fossil_energy_cap", "renew_cap",
    "reserve_req_up", "reserve_req_dn",
    "thermal_output_def", "thermal_above_start_cap", "thermal_above_stop_cap",
    "thermal_res_dn_cap", "thermal_min_floor", "thermal_max_cap",
    "commit_link", "commit_cap", "ramp_up", "ramp_dn",
    "charge_gate", "discharge_gate", "charge_cap", "p_storage_cap",
    "spill_cap", "storage_headroom_up", "storage_res_dn_cap",
    "soc_inter_balance", "soc_inter_min", "soc_inter_max",
    "soc_intra_balance", "soc_intra_min", "soc_intra_max",
    "soc_res_up_floor", "soc_res_dn_ceiling", "soc_final_floor",
})

LINEAR_NETWORK_ROW_FAMILIES = frozenset({"power_balance", "flow_def"})

CONIC_NETWORK_ROW_FAMILIES = frozenset({
    "ac_balance_p", "ac_balance_q", "fp_def", "fq_def",
    "angle_box_hi", "angle_box_lo", "voltage_cone", "apparent_cap",
    "q_thermal_cap_hi", "q_thermal_cap_lo", "q_renew_cap_hi", "q_renew_cap_lo",
    "q_storage_cap_hi", "q_storage_cap_lo", "q_facts_cap_hi", "q_facts_cap_lo",
})

_PRODUCT_AUX = (
    "sync_share_commit", "vi_share_bit", "inertia_commit",
    "sync_inertia_commit", "inertia_bit", "vi_inertia_bit",
)

INERTIA_ROW_FAMILIES = frozenset(
    {
        "sync_share_def", "sync_share_off", "vi_share_def", "vi_share_avail",
        "sync_inertia_def", "vi_inertia_def", "avg_inertia_def",
        "inertia_avail", "rocof_req", "build_bits",
    }
    | {f"{aux}_{suffix}" for aux in _PRODUCT_AUX for suffix in ("gate", "below", "tight")}
)


def row_census(model: ModelInstance) -> dict[str, int]:
    """Constraint rows per family, quadratic rows included, sorted by family."""
    counts: Counter[str] = Counter()
    for row in model.linear_rows:
        counts[row.family] += 1
    for row in model.quad_rows:
        counts[row.family] += 1
    return dict(sorted(counts.items()))


def allowed_row_families(kind: str) -> frozenset[str]:
    allowed = set(CORE_ROW_FAMILIES)
    if uses_linear_network(kind):
        allowed |= LINEAR_NETWORK_ROW_FAMILIES
    if uses_conic_network(kind):
        allowed |= CONIC_NETWORK_ROW_FAMILIES
    if uses_inertia(kind):
        allowed |= INERTIA_ROW_FAMILIES
    return frozenset(allowed)


def required_row_families(kind: str, system: SystemData) -> frozenset[str]:
    required = {"fossil_energy_cap"}
    if system.thermal:
        required |= {"thermal_output_def", "thermal_max_cap", "commit_link", "commit_cap"}
    if system.renewables:
        required.add("renew_cap")
    if system.storages:
        required |= {"p_storage_cap", "charge_cap", "charge_gate", "discharge_gate"}
    if uses_linear_network(kind):
        required.add("power_balance")
        if system.lines:
            required.add("flow_def")
    if uses_conic_network(kind):
        required |= {"ac_balance_p", "ac_balance_q"}
        if system.lines:
            required |= {"fp_def", "fq_def", "voltage_cone"}
    if uses_inertia(kind):
        required |= {
            "sync_inertia_def", "vi_inertia_def", "avg_inertia_def",
            "inertia_avail", "rocof_req",
        }
    return frozenset(required)


def verify_assembly(
    model: ModelInstance, kind: str, system: SystemData
) -> dict[str, int]:
    """Check the model's constraint families against the case contract.

    Every family present must belong to a block the case includes, and every
    marker family of an included block (given the system has the relevant
    units) must be present. Returns the census for reporting.
    """
    if kind not in CASE_KINDS:
        raise WorkflowError(f"unknown case kind {kind!r}")
    census = row_census(model)
    allowed = allowed_row_families(kind)
    stray = sorted(set(census) - allowed)
    if stray:
        raise WorkflowError(
            f"case {kind!r} must not contain constraint families: {', '.join(stray)}"
        )
    missing = sorted(required_row_families(kind, system) - set(census))
    if missing:
        raise WorkflowError(
            f"case {kind!r} is missing constraint families: {', '.join(missing)}"
        )
    return census


# -- case assembly -----------------------------------------------------------


def assemble_case(
    spec: CaseSpec, system: SystemData, temporal: TemporalStructure
) -> ModelInstance:
    """Compose the blocks for a case kind; self-checks the family census."""
    ctx = BuildContext(
        system=system, temporal=temporal, kappa=spec.resolve_kappa(system)
    )
    ctx.model.name = spec.kind
    build_general(ctx)
    build_storage(ctx)
    build_thermal(ctx)
    build_renewable_policy(ctx)
    if uses_linear_network(spec.kind):
        build_dc_network(ctx)
    else:
        build_socp(ctx)
    if uses_inertia(spec.kind):
        build_inertia(ctx, spec.resolve_inertia(system))
    build_objective(ctx)
    verify_assembly(ctx.model, spec.kind, system)
    return ctx.model


# -- reporting ----------------------------------------------------------------


@dataclass(frozen=True)
class RunReport:
    """Cost, capacity, and adequacy metrics for one solved case.

    ``cost_breakdown`` is recomputed from solution values and system data,
    independently of the model's objective coefficients; its sum must match
    the solver objective to 1e-6 relative. Wall-clock timing is deliberately
    not part of the report so identical runs serialize identically.
    """

    case: str
    kappa: float
    status: str
    solver: str
    objective: float | None
    recomputed_objective: float | None
    cost_breakdown: dict[str, float]
    capacity: tuple[tuple[str, str, str, float], ...]  # (tech, unit, bus, GW)
    facts_units: dict[str, int]
    clean_share: float | None
    avg_inertia_s: float | None
    unserved_gwh: float | None
    reactive_gvarh: dict[str, float] | None
    base_objective: float | None = None
    delta_objective: float | None = None
    policy_enforced: bool = True
    notes: tuple[str, ...] = ()
    format_version: int = REPORT_FORMAT_VERSION

    def to_json(self) -> str:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data["capacity"] = [list(row) for row in self.capacity]
        data["notes"] = list(self.notes)
        return json.dumps(data, sort_keys=True, indent=2) + "\n"


def report_from_json(text: str) -> RunReport:
    data = json.loads(text)
    data["capacity"] = tuple(tuple(row) for row in data["capacity"])
    data["notes"] = tuple(data["notes"])
    return RunReport(**data)


def _unit_capacity_rows(
    solution: Solution, system: SystemData
) -> tuple[tuple[str, str, str, float], ...]:
    rows = []
    for tech, units, size_of in (
        ("thermal", system.thermal, lambda u: u.p_max),
        ("renewable", system.renewables, lambda u: u.unit_size),
        ("storage", system.storages, lambda u: u.unit_size),
    ):
        for u in units:
            installed = u.existing + round(solution.value(f"build[{u.id}]"))
            rows.append((tech, u.id, u.bus, installed * size_of(u)))
    return tuple(rows)


def _cost_breakdown(
    solution: Solution, system: SystemData, temporal: TemporalStructure
) -> dict[str, float]:
    """Re-derive every objective term group from raw solution values."""
    val = solution.value
    inv = 0.0
    for u in system.generation_units():
        size = u.p_max if hasattr(u, "p_max") else u.unit_size
        inv += val(f"build[{u.id}]") * u.cost_inv * size
    for f in system.facts:
        inv += val(f"build[{f.id}]") * f.cost_inv
    startup = commitment = variable = om = reserves = unserved = 0.0
    for rp, k in temporal.step_pairs():
        w = temporal.weight(rp, k)
        for t in system.thermal:
            startup += w * t.cost_startup * val(f"startup[{t.id},{rp},{k}]")
            commitment += w * t.cost_commit * val(f"commit[{t.id},{rp},{k}]")
            variable += w * t.cost_var * val(f"p_thermal[{t.id},{rp},{k}]")
            reserves += w * t.cost_var * (
                system.reserve_up_cost * val(f"res_up_th[{t.id},{rp},{k}]")
                + system.reserve_down_cost * val(f"res_dn_th[{t.id},{rp},{k}]")
            )
        for r in system.renewables:
            om += w * r.cost_om * val(f"p_renew[{r.id},{rp},{k}]")
        for s in system.storages:
            om += w * s.cost_om * val(f"p_storage[{s.id},{rp},{k}]")
            reserves += w * s.cost_om * (
                system.reserve_up_cost * val(f"res_up_st[{s.id},{rp},{k}]")
                + system.reserve_down_cost * val(f"res_dn_st[{s.id},{rp},{k}]")
            )
        for b in system.buses:
            unserved += w * system.ens_cost * val(f"unserved[{b.id},{rp},{k}]")
    return {
        "investment": inv,
        "startup": startup,
        "commitment": commitment,
        "variable": variable,
        "om": om,
        "reserves": reserves,
        "unserved": unserved,
    }


_REACTIVE_TECHS = (
    ("thermal", "q_thermal", lambda s: s.thermal),
    ("renewable", "q_renew", lambda s: s.renewables),
    ("storage", "q_storage", lambda s: s.storages),
    ("facts", "q_facts", lambda s: s.facts),
)


def _reactive_by_tech(
    solution: Solution, system: SystemData, temporal: TemporalStructure
) -> dict[str, float] | None:
    out: dict[str, float] = {}
    seen = False
    for tech, family, pick in _REACTIVE_TECHS:
        total = 0.0
        for u in pick(system):
            for rp, k in temporal.step_pairs():
                name = f"{family}[{u.id},{rp},{k}]"
                if name in solution.values:
                    seen = True
                    total += temporal.weight(rp, k) * solution.values[name]
        out[tech] = total
    return out if seen else None


def compute_metrics(
    solution: Solution,
    system: SystemData,
    temporal: TemporalStructure,
    *,
    case: str = "bc",
    kappa: float = 0.0,
    config: InertiaConfig | None = None,
    base_objective: float | None = None,
    policy_enforced: bool = True,
    notes: tuple[str, ...] = (),
) -> RunReport:
    """Build the report for a solve outcome; tolerates infeasible runs."""
    if not solution.has_values():
        return RunReport(
            case=case, kappa=kappa, status=solution.status, solver=solution.solver,
            objective=None, recomputed_objective=None, cost_breakdown={},
            capacity=(), facts_units={}, clean_share=None, avg_inertia_s=None,
            unserved_gwh=None, reactive_gvarh=None, base_objective=base_objective,
            delta_objective=None, policy_enforced=policy_enforced, notes=notes,
        )
    breakdown = _cost_breakdown(solution, system, temporal)
    recomputed = sum(breakdown.values())
    if solution.objective is not None:
        gap = abs(recomputed - solution.objective) / max(1.0, abs(solution.objective))
        if gap > 1e-6:
            raise WorkflowError(
                f"cost breakdown {recomputed!r} disagrees with solver objective "
                f"{solution.objective!r} (relative gap {gap:.3e})"
            )
    fossil = weighted_demand = ens = 0.0
    for rp, k in temporal.step_pairs():
        w = temporal.weight(rp, k)
        for t in system.thermal:
            fossil += w * solution.value(f"p_thermal[{t.id},{rp},{k}]")
        for b in system.buses:
            weighted_demand += w * system.demand.p(rp, k, b.id)
            ens += w * solution.value(f"unserved[{b.id},{rp},{k}]")
    clean_share = 1.0 if weighted_demand <= 0 else 1.0 - fossil / weighted_demand
    records = evaluate_inertia(solution, system, temporal, config)
    weight_total = sum(temporal.weight(r.rp, r.k) for r in records)
    avg_inertia = (
        sum(temporal.weight(r.rp, r.k) * r.avg_inertia for r in records) / weight_total
        if weight_total > 0 else None
    )
    delta = (
        solution.objective - base_objective
        if solution.objective is not None and base_objective is not None
        else None
    )
    return RunReport(
        case=case,
        kappa=kappa,
        status=solution.status,
        solver=solution.solver,
        objective=solution.objective,
        recomputed_objective=recomputed,
        cost_breakdown=breakdown,
        capacity=_unit_capacity_rows(solution, system),
        facts_units={
            f.id: round(solution.value(f"build[{f.id}]")) for f in system.facts
        },
        clean_share=clean_share,
        avg_inertia_s=avg_inertia,
        unserved_gwh=ens,
        reactive_gvarh=_reactive_by_tech(solution, system, temporal),
        base_objective=base_objective,
        delta_objective=delta,
        policy_enforced=policy_enforced,
        notes=notes,
    )


# -- run drivers ---------------------------------------------------------------


def run_case(
    spec: CaseSpec,
    system: SystemData,
    temporal: TemporalStructure,
    *,
    solver: str = "auto",
    request: SolverRequest | None = None,
) -> tuple[ModelInstance, Solution, RunReport]:
    """Assemble, solve, and report one case; writes spec.out_dir if set."""
    model = assemble_case(spec, system, temporal)
    solution = solve(model, solver=solver, request=request)
    report = compute_metrics(
        solution, system, temporal,
        case=spec.kind, kappa=spec.resolve_kappa(system),
        config=spec.resolve_inertia(system),
    )
    if spec.out_dir:
        write_run_dir(spec.out_dir, spec, model, solution, report, system, temporal)
    return model, solution, report


def _investment_values(base: Solution, system: SystemData, skip_facts: bool) -> dict[str, float]:
    fixes = {}
    for u in system.invest_units():
        if skip_facts and u in system.facts:
            continue
        fixes[f"build[{u.id}]"] = base.value(f"build[{u.id}]")
    return fixes


def run_ex_post_inertia(
    base: Solution,
    mode: str,
    system: SystemData,
    temporal: TemporalStructure,
    config: InertiaConfig | None = None,
    *,
    kappa: float | None = None,
    enforce_policy: bool = False,
    solver: str = "auto",
    request: SolverRequest | None = None,
) -> tuple[ModelInstance, Solution, RunReport]:
    """Re-solve with the frequency-response block added to a base plan.

    ``ops_only`` pins every investment at the base value and asks whether the
    plan can operate at all under the response requirement; the clean-energy
    floor is reported rather than enforced unless ``enforce_policy`` is set,
    so a shortfall shows up as a low clean share instead of infeasibility.
    ``add_investments`` keeps the base plan as a lower bound and lets the
    model buy its way back to feasibility.
    """
    if mode not in ("ops_only", "add_investments"):
        raise WorkflowError(f"unknown ex-post mode {mode!r}")
    if not base.has_values():
        raise WorkflowError("ex-post run needs a base solution with values")
    target_kappa = system.kappa_default if kappa is None else kappa
    model_kappa = target_kappa if (enforce_policy or mode == "add_investments") else 0.0
    spec = CaseSpec(kind="ic", kappa=model_kappa, inertia=config)
    model = assemble_case(spec, system, temporal)
    fixes = _investment_values(base, system, skip_facts=False)
    model = _refix(model, fixes, "fix" if mode == "ops_only" else "lower_bound")
    solution = solve(model, solver=solver, request=request)
    report = compute_metrics(
        solution, system, temporal,
        case="ic", kappa=target_kappa,
        config=spec.resolve_inertia(system),
        base_objective=base.objective,
        policy_enforced=enforce_policy or mode == "add_investments",
        notes=(f"expost:{mode}",),
    )
    return model, solution, report


def run_ex_post_ac(
    base: Solution,
    system: SystemData,
    temporal: TemporalStructure,
    *,
    kappa: float | None = None,
    solver: str = "auto",
    request: SolverRequest | None = None,
) -> tuple[ModelInstance, Solution, RunReport]:
    """Re-solve a base plan against the conic network.

    Non-reactive investments are lower-bounded at the base plan; reactive
    support devices stay free so the model can add them where voltage and
    reactive balances demand it.
    """
    if not base.has_values():
        raise WorkflowError("ex-post run needs a base solution with values")
    target_kappa = system.kappa_default if kappa is None else kappa
    spec = CaseSpec(kind="rc", kappa=target_kappa)
    model = assemble_case(spec, system, temporal)
    fixes = _investment_values(base, system, skip_facts=True)
    model = _refix(model, fixes, "lower_bound")
    solution = solve(model, solver=solver, request=request)
    report = compute_metrics(
        solution, system, temporal,
        case="rc", kappa=target_kappa,
        base_objective=base.objective,
        notes=("expost:add_reactive_support",),
    )
    return model, solution, report


def _refix(model: ModelInstance, fixes: dict[str, float], mode: str) -> ModelInstance:
    from .solvers.interface import fix_variables

    return fix_variables(model, fixes, mode=mode)


# -- run directory --------------------------------------------------------------


def _format_float(x: float) -> str:
    return repr(float(x))


def format_capacity_table(report: RunReport) -> str:
    lines = ["tech,unit,bus,installed_gw"]
    for tech, unit, bus, gw in report.capacity:
        lines.append(f"{tech},{unit},{bus},{_format_float(gw)}")
    for unit, count in sorted(report.facts_units.items()):
        lines.append(f"facts,{unit},,{count}")
    return "\n".join(lines) + "\n"


def format_cost_table(report: RunReport) -> str:
    lines = ["component,cost_meur"]
    for name in sorted(report.cost_breakdown):
        lines.append(f"{name},{_format_float(report.cost_breakdown[name])}")
    if report.objective is not None:
        lines.append(f"total,{_format_float(report.objective)}")
    return "\n".join(lines) + "\n"


def write_solution_csv(solution: Solution, path: Path) -> None:
    lines = ["name,value"]
    for name in sorted(solution.values):
        lines.append(f"{name},{_format_float(solution.values[name])}")
    path.write_text("\n".join(lines) + "\n")


def read_run_solution(run_dir: str | Path) -> Solution:
    """Rebuild a Solution from a run directory written by write_run_dir."""
    run_dir = Path(run_dir)
    report = report_from_json((run_dir / "report.json").read_text())
    values: dict[str, float] = {}
    sol_path = run_dir / "solution.csv"
    if sol_path.exists():
        for line in sol_path.read_text().splitlines()[1:]:
            name, _, raw = line.rpartition(",")
            values[name] = float(raw)
    return Solution(
        status=report.status, objective=report.objective,
        values=values, solver=report.solver,
    )


def write_run_dir(
    out_dir: str | Path,
    spec: CaseSpec,
    model: ModelInstance,
    solution: Solution,
    report: RunReport,
    system: SystemData,
    temporal: TemporalStructure,
) -> Path:
    """Persist one run: spec echo, model, solution, report, diagnostics.

    Every file is deterministic for identical inputs; nothing time- or
    host-dependent is written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "case.json").write_text(
        json.dumps(spec.echo(), sort_keys=True, indent=2) + "\n"
    )
    write_model(model, out / "model.lp")
    (out / "report.json").write_text(report.to_json())
    (out / "capacity.csv").write_text(format_capacity_table(report))
    (out / "costs.csv").write_text(format_cost_table(report))
    if solution.has_values():
        write_solution_csv(solution, out / "solution.csv")
        records = evaluate_inertia(
            solution, system, temporal, spec.resolve_inertia(system)
        )
        (out / "inertia.csv").write_text(format_inertia_report(records))
        if uses_conic_network(spec.kind):
            gaps = cone_residual(solution, system, temporal)
            (out / "cones.csv").write_text(format_cone_report(gaps))
            try:
                recovery = recover_voltages(solution, system, temporal)
            except NetworkError:
                pass
            else:
                (out / "voltages.csv").write_text(format_voltage_report(recovery))
    return out
