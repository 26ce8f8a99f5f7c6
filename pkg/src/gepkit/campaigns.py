"""Randomized cross-check campaigns between model builders and oracles.

Each campaign draws small seeded instances, runs a builder through a solver
or an analytic construction, and compares against an independent route:

    linearization   product-linearization values vs direct nonlinear recompute
    bruteforce      branch-and-bound optimum vs exhaustive integer enumeration
    dcflows         shift-factor flows vs an angle-formulation network solve
    acflows         conic-block rows evaluated at exact power-flow solutions

Instances are fully determined by their seed, so a failing case can be
replayed by number.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .inertia import InertiaConfig
from .isf import system_isf
from .oracle import (
    OracleError,
    ac_bus_injections,
    ac_line_flows,
    brute_force_optimum,
    check_linearization,
    dc_flows_from_angles,
    newton_ac_power_flow,
)
from .solvers import solve
from .system import (
    Bus,
    DemandSeries,
    Line,
    RenewableUnit,
    StorageUnit,
    SystemData,
    ThermalUnit,
)
from .temporal import TemporalStructure, build_hourly_identity
from .workflows import CaseSpec, assemble_case


@dataclass
class CampaignResult:
    name: str
    runs: int = 0
    checks: int = 0
    failures: list[str] = field(default_factory=list)

    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        passed = self.runs - len(
            {f.split(":", 1)[0] for f in self.failures}
        )
        head = f"{self.name}: {passed}/{self.runs} pass ({self.checks} comparisons)"
        if self.failures:
            head += "\n" + "\n".join(f"  FAIL {f}" for f in self.failures[:10])
            if len(self.failures) > 10:
                head += f"\n  ... and {len(self.failures) - 10} more"
        return head


def _instance_seed(seed: int, i: int) -> int:
    return seed * 1_000_003 + i


# -- random tiny planning instances --------------------------------------------


def random_tiny_instance(
    seed: int, *, with_inertia: bool, compact: bool = False
) -> tuple[SystemData, TemporalStructure, InertiaConfig, float]:
    """A seeded planning instance small enough to enumerate outright.

    ``compact`` shrinks the integer assignment space further for audits that
    re-solve per assignment many times over.
    """
    rng = random.Random(seed)
    two_vi = with_inertia and rng.random() < 0.3
    with_storage = not two_vi and rng.random() < (0.2 if compact else 0.4)
    if compact and (with_storage or two_vi):
        n_steps = 1
    else:
        n_steps = rng.randint(1, 2 if compact else 3)
    n_buses = rng.choice((2, 3))

    bus_ids = [f"b{i}" for i in range(1, n_buses + 1)]
    buses = [Bus(id=b, is_slack=(b == "b1")) for b in bus_ids]
    lines = []
    edges = [("b1", "b2")] if n_buses == 2 else [("b1", "b2"), ("b2", "b3")]
    if n_buses == 3 and rng.random() < 0.5:
        edges.append(("b1", "b3"))
    for a, c in edges:
        x = rng.uniform(0.05, 0.25)
        limit = rng.uniform(0.1, 0.3) if rng.random() < 0.2 else 5.0
        lines.append(Line(a, c, 1, 0.0, -1.0 / x, 0.0, limit, 1000.0, x))

    p_max = rng.uniform(0.3, 0.8)
    existing_t = rng.randint(0, 1)
    thermal = [
        ThermalUnit(
            id="t1", bus=rng.choice(bus_ids),
            p_min=rng.choice((0.0, rng.uniform(0.05, 0.3) * p_max)),
            p_max=p_max, q_min=0.0, q_max=0.0,
            inertia=rng.uniform(2.0, 8.0),
            cost_startup=rng.uniform(0.001, 0.02),
            cost_commit=rng.uniform(0.001, 0.01),
            cost_var=rng.uniform(0.01, 0.06),
            cost_inv=rng.uniform(0.3, 2.0),
            ramp_up=float("inf"), ramp_down=float("inf"),
            existing=existing_t, build_max=1 - existing_t,
        )
    ]

    renewables = []
    profiles: dict[tuple[int, int, str], float] = {}
    n_renew = 2 if two_vi else (1 if rng.random() < 0.85 else 0)
    for j in range(n_renew):
        max_builds = 2 if two_vi else 3
        vi = with_inertia and (two_vi or rng.random() < 0.7)
        renewables.append(
            RenewableUnit(
                id=f"r{j + 1}", bus=rng.choice(bus_ids),
                unit_size=rng.uniform(0.05, 0.25),
                inertia=rng.uniform(2.0, 10.0) if vi else 0.0,
                cost_om=rng.uniform(0.0, 0.01),
                cost_inv=rng.uniform(0.2, 1.5),
                existing=rng.randint(0, 1),
                build_max=rng.randint(0, max_builds),
                profile_key=f"prof{j + 1}",
            )
        )
        for k in range(1, n_steps + 1):
            profiles[(1, k, f"prof{j + 1}")] = rng.uniform(0.2, 1.0)

    storages = []
    if with_storage:
        storages.append(
            StorageUnit(
                id="s1", bus=rng.choice(bus_ids),
                unit_size=rng.uniform(0.05, 0.2),
                energy_to_power=rng.uniform(1.0, 3.0),
                eff_charge=rng.uniform(0.85, 0.98),
                eff_discharge=rng.uniform(0.85, 0.98),
                min_soc=0.0, max_soc=1.0,
                inertia=rng.uniform(2.0, 10.0)
                if with_inertia and rng.random() < 0.5 else 0.0,
                cost_om=rng.uniform(0.0, 0.005),
                cost_inv=rng.uniform(0.2, 1.5),
                existing=rng.randint(0, 1), build_max=1,
                initial_reserve=0.0, is_hydro=False,
            )
        )

    active = {}
    for k in range(1, n_steps + 1):
        for b in bus_ids:
            d = rng.uniform(0.05, 0.45)
            if rng.random() < 0.15:
                d *= 3.0
            active[(1, k, b)] = d

    with_reserves = rng.random() < 0.25
    kappa = 0.0 if rng.random() < 0.7 else rng.uniform(0.2, 0.5)
    system = SystemData(
        buses=buses, lines=lines, thermal=thermal, renewables=renewables,
        storages=storages, facts=[], demand=DemandSeries(active=active, reactive={}),
        profiles=profiles, inflows={},
        base_power=100.0, max_angle_diff=0.6,
        reserve_up=rng.uniform(0.02, 0.08) if with_reserves else 0.0,
        reserve_down=rng.uniform(0.02, 0.08) if with_reserves else 0.0,
        reserve_up_cost=rng.uniform(0.05, 0.2),
        reserve_down_cost=rng.uniform(0.05, 0.2),
        ens_cost=rng.uniform(3.0, 15.0),
        kappa_default=0.0, inertia_settings={},
    )
    config = InertiaConfig(
        f_base=50.0,
        rocof_limit=rng.uniform(0.5, 2.0),
        inertia_cap=rng.uniform(12.0, 30.0),
        disturbance=rng.uniform(0.0, 0.5) if with_inertia else 0.0,
        vi_gain_numerator="thermal_sum"
        if with_inertia and rng.random() < 0.2 else "own_output",
    )
    return system, build_hourly_identity(n_steps), config, kappa


# -- campaign: exact product linearization -------------------------------------


def campaign_linearization(n: int = 50, seed: int = 1) -> CampaignResult:
    result = CampaignResult(name="linearization")
    for i in range(n):
        system, temporal, config, kappa = random_tiny_instance(
            _instance_seed(seed, i), with_inertia=True, compact=True
        )
        spec = CaseSpec(kind="ic", kappa=kappa, inertia=config)
        model = assemble_case(spec, system, temporal)
        result.runs += 1
        report = check_linearization(model, system, temporal, config, limit=8192)
        result.checks += report.points_checked
        for m in report.mismatches:
            result.failures.append(f"instance {i}: {m}")
    return result


# -- campaign: enumeration vs branch and bound ----------------------------------


def campaign_bruteforce(kind: str, n: int = 50, seed: int = 2) -> CampaignResult:
    if kind not in ("bc", "ic"):
        raise ValueError(f"bruteforce campaign covers bc and ic, not {kind!r}")
    result = CampaignResult(name=f"bruteforce-{kind}")
    for i in range(n):
        system, temporal, config, kappa = random_tiny_instance(
            _instance_seed(seed, i), with_inertia=(kind == "ic")
        )
        spec = CaseSpec(kind=kind, kappa=kappa, inertia=config)
        model = assemble_case(spec, system, temporal)
        result.runs += 1
        solution = solve(model)
        best, _ = brute_force_optimum(model, temporal, limit=8192)
        result.checks += 1
        if best is None and solution.is_optimal():
            result.failures.append(
                f"instance {i}: solver found {solution.objective}, oracle found nothing"
            )
        elif best is not None and not solution.is_optimal():
            result.failures.append(
                f"instance {i}: oracle found {best}, solver says {solution.status}"
            )
        elif best is not None:
            gap = abs(solution.objective - best) / max(1.0, abs(best))
            if gap > 1e-6:
                result.failures.append(
                    f"instance {i}: solver {solution.objective!r} vs "
                    f"oracle {best!r} (relative gap {gap:.3e})"
                )
    return result


# -- campaign: shift factors vs angle formulation --------------------------------


def random_network(seed: int, max_buses: int = 20) -> tuple[SystemData, dict[str, float]]:
    """A connected reactance network plus a random injection pattern."""
    rng = random.Random(seed)
    n = rng.randint(2, max_buses)
    bus_ids = [f"n{i}" for i in range(1, n + 1)]
    buses = [Bus(id=b, is_slack=(b == "n1")) for b in bus_ids]
    lines = []
    for j in range(1, n):
        a = bus_ids[rng.randint(0, j - 1)]
        x = rng.uniform(0.02, 0.3)
        lines.append(Line(a, bus_ids[j], 1, 0.0, -1.0 / x, 0.0, 99.0, 1000.0, x))
    for _ in range(rng.randint(0, n)):
        i, j = rng.sample(range(n), 2)
        a, c = sorted((bus_ids[i], bus_ids[j]))
        circuit = 1 + sum(1 for l in lines if (l.from_bus, l.to_bus) == (a, c))
        x = rng.uniform(0.02, 0.3)
        lines.append(Line(a, c, circuit, 0.0, -1.0 / x, 0.0, 99.0, 1000.0, x))
    injections = {b: rng.uniform(-1.0, 1.0) for b in bus_ids[1:]}
    injections["n1"] = -sum(injections.values())
    system = SystemData(
        buses=buses, lines=lines, thermal=[], renewables=[], storages=[],
        facts=[], demand=DemandSeries(active={}, reactive={}), profiles={},
        inflows={}, base_power=100.0, max_angle_diff=0.6,
        reserve_up=0.0, reserve_down=0.0, reserve_up_cost=0.0,
        reserve_down_cost=0.0, ens_cost=1.0, kappa_default=0.0,
        inertia_settings={},
    )
    return system, injections


def campaign_dc_flows(n: int = 50, seed: int = 3) -> CampaignResult:
    result = CampaignResult(name="dcflows")
    for i in range(n):
        system, injections = random_network(_instance_seed(seed, i))
        result.runs += 1
        isf = system_isf(system)
        via_isf = isf.flows(injections)
        via_angles = dc_flows_from_angles(system, injections)
        for e, line in enumerate(system.lines):
            result.checks += 1
            gap = abs(via_isf[e] - via_angles[line.key])
            if gap > 1e-8:
                result.failures.append(
                    f"instance {i}: line {line.key} shift-factor flow "
                    f"{via_isf[e]!r} vs angle flow {via_angles[line.key]!r}"
                )
    return result


# -- campaign: conic rows hold at exact power-flow points -------------------------


def random_ac_instance(seed: int) -> tuple[SystemData, dict, dict]:
    """A lossy 2-3 bus system with a dispatch whose power flow is mild.

    Returns the system plus per-bus active/reactive setpoints for the
    non-slack thermal units; the slack surplus lands on a renewable unit.
    """
    rng = random.Random(seed)
    n = rng.choice((2, 3))
    bus_ids = [f"b{i}" for i in range(1, n + 1)]
    buses = [
        Bus(
            id=b, is_slack=(b == "b1"),
            shunt_conductance=rng.uniform(0.0, 0.03) if rng.random() < 0.3 else 0.0,
            shunt_susceptance=rng.uniform(-0.08, 0.08) if rng.random() < 0.3 else 0.0,
            v_min=0.8, v_max=1.2,
        )
        for b in bus_ids
    ]
    lines = []
    edges = [("b1", "b2")] if n == 2 else [("b1", "b2"), ("b2", "b3")]
    if n == 3 and rng.random() < 0.4:
        edges.append(("b1", "b3"))
    for a, c in edges:
        r = rng.uniform(0.005, 0.03)
        x = rng.uniform(0.05, 0.15)
        mag2 = r * r + x * x
        charging = rng.uniform(0.0, 0.1) if rng.random() < 0.5 else 0.0
        lines.append(Line(a, c, 1, r / mag2, -x / mag2, charging, 5.0, 5000.0, x))

    thermal = [
        ThermalUnit(
            id=f"g{b}", bus=b, p_min=0.0, p_max=3.0, q_min=-3.0, q_max=3.0,
            inertia=4.0, cost_startup=0.01, cost_commit=0.01, cost_var=0.03,
            cost_inv=1.0, ramp_up=float("inf"), ramp_down=float("inf"),
            existing=1, build_max=0,
        )
        for b in bus_ids[1:]
    ]
    renewables = [
        RenewableUnit(
            id="balancer", bus="b1", unit_size=6.0, inertia=0.0, cost_om=0.0,
            cost_inv=1.0, existing=1, build_max=0, profile_key="flat",
            q_min=-6.0, q_max=6.0,
        )
    ]
    active = {(1, 1, b): rng.uniform(0.05, 0.35) for b in bus_ids}
    reactive = {(1, 1, b): rng.uniform(-0.05, 0.15) for b in bus_ids}
    system = SystemData(
        buses=buses, lines=lines, thermal=thermal, renewables=renewables,
        storages=[], facts=[],
        demand=DemandSeries(active=active, reactive=reactive),
        profiles={(1, 1, "flat"): 1.0}, inflows={},
        base_power=1000.0, max_angle_diff=0.6,
        reserve_up=0.0, reserve_down=0.0, reserve_up_cost=0.0,
        reserve_down_cost=0.0, ens_cost=10.0, kappa_default=0.0,
        inertia_settings={},
    )
    p_set = {t.id: rng.uniform(0.0, active[(1, 1, t.bus)]) for t in thermal}
    q_set = {t.id: rng.uniform(-0.2, 0.2) for t in thermal}
    return system, p_set, q_set


def socp_point_from_power_flow(
    system: SystemData,
    temporal: TemporalStructure,
    p_set: dict[str, float],
    q_set: dict[str, float],
) -> tuple[dict[str, float], float]:
    """Map an exact power-flow solution onto conic-model variables.

    Solves the network for the given thermal setpoints, assigns the slack
    surplus to the balancing renewable unit, and returns a full variable
    assignment plus the smallest cone residual (which is zero up to rounding
    for an exact point).
    """
    rp, k = 1, 1
    p_net = {}
    q_net = {}
    for b in system.buses:
        p_net[b.id] = -system.demand.p(rp, k, b.id)
        q_net[b.id] = -system.demand.q(rp, k, b.id)
    for t in system.thermal:
        p_net[t.bus] += p_set[t.id]
        q_net[t.bus] += q_set[t.id]
    vmag, theta = newton_ac_power_flow(system, p_net, q_net)
    injections = ac_bus_injections(system, vmag, theta)
    flows = ac_line_flows(system, vmag, theta)

    slack = system.slack_bus
    balancer = system.renewables[0]
    p_balance = injections[slack][0] + system.demand.p(rp, k, slack)
    q_balance = injections[slack][1] + system.demand.q(rp, k, slack)
    if p_balance < -1e-9:
        raise OracleError(f"slack active surplus {p_balance} is negative")

    values: dict[str, float] = {}
    for t in system.thermal:
        values[f"build[{t.id}]"] = 0.0
        for key in ("commit", "startup", "shutdown"):
            values[f"{key}[{t.id},{rp},{k}]"] = 1.0 if key == "commit" else 0.0
        values[f"p_thermal[{t.id},{rp},{k}]"] = p_set[t.id]
        values[f"p_above[{t.id},{rp},{k}]"] = p_set[t.id]
        values[f"q_thermal[{t.id},{rp},{k}]"] = q_set[t.id]
        values[f"res_up_th[{t.id},{rp},{k}]"] = 0.0
        values[f"res_dn_th[{t.id},{rp},{k}]"] = 0.0
    values[f"build[{balancer.id}]"] = 0.0
    values[f"p_renew[{balancer.id},{rp},{k}]"] = max(p_balance, 0.0)
    values[f"q_renew[{balancer.id},{rp},{k}]"] = q_balance
    for b in system.buses:
        values[f"unserved[{b.id},{rp},{k}]"] = 0.0
        values[f"cii[{b.id},{rp},{k}]"] = vmag[b.id] ** 2
    pairs = {tuple(sorted((l.from_bus, l.to_bus))) for l in system.lines}
    min_residual = math.inf
    for a, c in sorted(pairs):
        prod = vmag[a] * vmag[c]
        lead = theta[c] - theta[a]
        cij = prod * math.cos(lead)
        sij = prod * math.sin(lead)
        values[f"cij[{a},{c},{rp},{k}]"] = cij
        values[f"sij[{a},{c},{rp},{k}]"] = sij
        min_residual = min(
            min_residual, vmag[a] ** 2 * vmag[c] ** 2 - cij**2 - sij**2
        )
    for (tail, head, circuit), (p, q) in flows.items():
        values[f"fp[{tail},{head},{circuit},{rp},{k}]"] = p
        values[f"fq[{tail},{head},{circuit},{rp},{k}]"] = q
    return values, min_residual


def campaign_ac_feasibility(n: int = 50, seed: int = 4) -> CampaignResult:
    result = CampaignResult(name="acflows")
    for i in range(n):
        system, p_set, q_set = random_ac_instance(_instance_seed(seed, i))
        temporal = build_hourly_identity(1)
        result.runs += 1
        try:
            values, min_residual = socp_point_from_power_flow(
                system, temporal, p_set, q_set
            )
        except OracleError as exc:
            result.failures.append(f"instance {i}: power flow failed: {exc}")
            continue
        model = assemble_case(CaseSpec(kind="rc"), system, temporal)
        dense = [0.0] * len(model.variables)
        for v in model.variables:
            if v.name not in values:
                result.failures.append(f"instance {i}: no value built for {v.name}")
                break
            dense[v.index] = values[v.name]
        else:
            worst, name = model.max_violation(dense)
            result.checks += len(model.linear_rows) + len(model.quad_rows)
            if worst > 1e-7:
                result.failures.append(
                    f"instance {i}: row {name} violated by {worst:.3e} "
                    "at an exact power-flow point"
                )
            if min_residual < -1e-7:
                result.failures.append(
                    f"instance {i}: cone residual {min_residual!r} below -1e-7"
                )
    return result


# -- campaign driver -------------------------------------------------------------


CAMPAIGNS = ("linearization", "bruteforce-bc", "bruteforce-ic", "dcflows", "acflows")


def run_campaign(name: str, n: int, seed: int) -> CampaignResult:
    if name == "linearization":
        return campaign_linearization(n, seed)
    if name == "bruteforce-bc":
        return campaign_bruteforce("bc", n, seed)
    if name == "bruteforce-ic":
        return campaign_bruteforce("ic", n, seed)
    if name == "dcflows":
        return campaign_dc_flows(n, seed)
    if name == "acflows":
        return campaign_ac_feasibility(n, seed)
    raise ValueError(f"unknown campaign {name!r}; expected one of {CAMPAIGNS}")
