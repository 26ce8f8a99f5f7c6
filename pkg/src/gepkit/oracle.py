"""Independent oracles that certify the model builders on small instances.

Nothing here reuses the branch-and-bound search or the sensitivity-matrix
path being checked: mixed-integer optima come from exhaustive enumeration of
the integer assignments with a continuous solve per assignment, linearized
network flows come from a direct angle solve, and the conic block is checked
against a Newton power-flow solve of the original nonlinear equations.

Everything is sized for toy instances; refuse rather than grind when an
enumeration would explode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .inertia import evaluate_inertia
from .model import LinearExpr, ModelInstance
from .solvers import Solution, SolverRequest, fix_variables, solve
from .system import SystemData
from .temporal import TemporalStructure


class OracleError(RuntimeError):
    """Raised when an oracle cannot produce a trustworthy answer."""


# -- exhaustive mixed-integer reference ----------------------------------------

_ENUMERATED = ("build", "commit", "discharge_mode")
_DERIVED = ("startup", "shutdown", "build_bit")


def _minimal_switching(
    commits: dict[tuple, int], temporal: TemporalStructure
) -> dict[str, float]:
    """Start/stop counts implied by a commitment pattern, cyclic per period.

    Minimal switching is weakly optimal: start costs are nonnegative and both
    counters only ever tighten output caps, so any optimum with extra
    on/off churn has an equally good quiet twin.
    """
    fixes: dict[str, float] = {}
    for (unit, rp, k), now in commits.items():
        prev = commits[(unit, rp, temporal.prev_cyclic(k))]
        fixes[f"startup[{unit},{rp},{k}]"] = float(max(0, now - prev))
        fixes[f"shutdown[{unit},{rp},{k}]"] = float(max(0, prev - now))
    return fixes


def _bit_fixes(model: ModelInstance, builds: dict[str, int]) -> dict[str, float]:
    fixes: dict[str, float] = {}
    for bit in model.family_vars("build_bit"):
        unit, b = bit.key
        fixes[bit.name] = float((builds[unit] >> b) & 1)
    return fixes


def enumerate_assignments(model: ModelInstance, temporal: TemporalStructure, limit: int):
    """Yield complete integer fixings of the model, derived families included."""
    build_vars = model.family_vars("build")
    commit_vars = model.family_vars("commit")
    mode_vars = model.family_vars("discharge_mode")
    ranges = [
        range(int(v.lower), int(v.upper) + 1)
        for v in build_vars + commit_vars + mode_vars
    ]
    total = 1
    for r in ranges:
        total *= len(r)
        if total > limit:
            raise OracleError(
                f"{total}+ integer assignments exceed the enumeration limit {limit}"
            )
    for combo in product(*ranges):
        at = 0
        fixes: dict[str, float] = {}
        builds: dict[str, int] = {}
        for v in build_vars:
            builds[v.key[0]] = combo[at]
            fixes[v.name] = float(combo[at])
            at += 1
        commits: dict[tuple, int] = {}
        for v in commit_vars:
            commits[v.key] = combo[at]
            fixes[v.name] = float(combo[at])
            at += 1
        for v in mode_vars:
            fixes[v.name] = float(combo[at])
            at += 1
        fixes.update(_minimal_switching(commits, temporal))
        fixes.update(_bit_fixes(model, builds))
        yield fixes


def _continuous_solve(model: ModelInstance, fixes: dict[str, float]) -> Solution:
    pinned = fix_variables(model, fixes)
    loose = [
        v.name
        for v in pinned.variables
        if v.is_integral() and v.lower != v.upper
    ]
    if loose:
        raise OracleError(f"integer variables left free after fixing: {loose[:5]}")
    solver = "clarabel" if pinned.quad_rows else "highs"
    return solve(pinned, solver=solver, request=SolverRequest())


def brute_force_optimum(
    model: ModelInstance,
    temporal: TemporalStructure,
    limit: int = 65536,
) -> tuple[float, dict[str, float]] | tuple[None, None]:
    """Best objective over every integer assignment, or (None, None).

    Enumerates commitment, investment, and mode decisions outright; start
    and stop counters and investment bits follow from those, so the
    continuous subproblem per assignment has no free integers and one plain
    LP or cone solve decides it. Independent of any branch-and-bound search.
    """
    best: float | None = None
    best_values: dict[str, float] | None = None
    for fixes in enumerate_assignments(model, temporal, limit):
        sol = _continuous_solve(model, fixes)
        if not sol.is_optimal():
            continue
        if best is None or sol.objective < best - 0.0:
            best = sol.objective
            best_values = dict(sol.values)
    if best is None:
        return None, None
    return best, best_values


# -- linearization exactness ----------------------------------------------------


@dataclass
class LinearizationReport:
    assignments: int = 0
    feasible: int = 0
    points_checked: int = 0
    mismatches: list[str] = field(default_factory=list)

    def ok(self) -> bool:
        return not self.mismatches


_DISPATCH_FAMILIES = ("p_thermal", "p_above", "p_renew", "p_storage", "charge",
                      "res_up_th", "res_dn_th", "res_up_st", "res_dn_st",
                      "unserved", "spill")


def check_linearization(
    model: ModelInstance,
    system: SystemData,
    temporal: TemporalStructure,
    config,
    limit: int = 4096,
    tol: float = 1e-6,
) -> LinearizationReport:
    """Certify that the inertia block's products are exact, assignment by assignment.

    For each integer assignment: solve once for any feasible dispatch, then
    pin that dispatch and probe every inertia quantity with a minimize and a
    maximize solve. Exactness means zero freedom: both probes must land on
    the nonlinear re-evaluation of the pinned point.
    """
    report = LinearizationReport()
    targets_cache: list | None = None
    for fixes in enumerate_assignments(model, temporal, limit):
        report.assignments += 1
        sol = _continuous_solve(model, fixes)
        if not sol.is_optimal():
            continue
        report.feasible += 1

        pin = dict(fixes)
        for family in _DISPATCH_FAMILIES:
            for v in model.family_vars(family):
                pin[v.name] = sol.value(v)
        pinned = fix_variables(model, pin)

        records = {
            (r.rp, r.k): r for r in evaluate_inertia(sol, system, temporal, config)
        }
        if targets_cache is None:
            targets_cache = []
            for rp, k in temporal.step_pairs():
                for t in system.thermal:
                    targets_cache.append(("sync_share", (t.id, rp, k), None))
                for v in system.vi_units():
                    targets_cache.append(("vi_share", (v.id, rp, k), None))
                targets_cache.append(("sync_inertia", (rp, k), "sync_inertia"))
                targets_cache.append(("vi_inertia", (rp, k), "vi_inertia"))
                targets_cache.append(("avg_inertia", (rp, k), "avg_inertia"))

        for family, key, attr in targets_cache:
            var = model.var(family, *key)
            rp, k = key[-2], key[-1]
            record = records[(rp, k)]
            if attr is not None:
                want = getattr(record, attr)
            else:
                want = _nonlinear_share(family, key, sol, system, temporal, config)
            for sense in (1.0, -1.0):
                probe = pinned.with_variable_bounds({})
                probe.set_objective(LinearExpr().add(var, sense))
                probe_sol = solve(probe, solver="clarabel" if probe.quad_rows else "highs")
                report.points_checked += 1
                if not probe_sol.is_optimal():
                    report.mismatches.append(
                        f"{var.name}: probe became {probe_sol.status} after pinning"
                    )
                    continue
                got = probe_sol.value(var)
                if abs(got - want) > tol:
                    word = "min" if sense > 0 else "max"
                    report.mismatches.append(
                        f"{var.name}: {word} probe gives {got!r}, nonlinear "
                        f"evaluation gives {want!r} (fixes {sorted(fixes.items())[:6]}...)"
                    )
    return report


def _nonlinear_share(
    family: str, key: tuple, sol: Solution, system: SystemData,
    temporal: TemporalStructure, config
) -> float:
    """Share of one unit at one step, straight from the ratio definitions."""
    unit_id, rp, k = key
    if family == "sync_share":
        total = sum(
            t.p_max * round(sol.value(f"commit[{t.id},{rp},{k}]"))
            for t in system.thermal
        )
        if total <= 0:
            return 0.0
        unit = next(t for t in system.thermal if t.id == unit_id)
        return unit.p_max * round(sol.value(f"commit[{unit_id},{rp},{k}]")) / total
    total = sum(
        v.unit_size
        * system.availability(rp, k, v)
        * (round(sol.value(f"build[{v.id}]")) + v.existing)
        for v in system.vi_units()
    )
    if total <= 0:
        return 0.0
    unit = next(v for v in system.vi_units() if v.id == unit_id)
    if config.vi_gain_numerator == "thermal_sum":
        num = sum(sol.value(f"p_thermal[{t.id},{rp},{k}]") for t in system.thermal)
    else:
        family_name = "p_renew" if unit in system.renewables else "p_storage"
        num = sol.value(f"{family_name}[{unit_id},{rp},{k}]")
    return num / total


# -- linearized network flows, the direct way -----------------------------------


def dc_flows_from_angles(
    system: SystemData, injections: dict[str, float]
) -> dict[tuple[str, str, int], float]:
    """Line flows from a bus-angle solve of the susceptance network.

    Solves the reduced angle system directly (slack angle zero, slack
    absorbs any imbalance) and reads each line's flow off its angle
    difference. Shares nothing with the sensitivity-matrix construction.
    """
    buses = [b.id for b in system.buses]
    pos = {b: i for i, b in enumerate(buses)}
    slack = pos[system.slack_bus]
    n = len(buses)
    lap = np.zeros((n, n))
    for line in system.lines:
        b_ser = 1.0 / line.reactance
        i, j = pos[line.from_bus], pos[line.to_bus]
        lap[i, i] += b_ser
        lap[j, j] += b_ser
        lap[i, j] -= b_ser
        lap[j, i] -= b_ser
    keep = [i for i in range(n) if i != slack]
    rhs = np.array([injections.get(buses[i], 0.0) for i in keep])
    theta = np.zeros(n)
    theta[keep] = np.linalg.solve(lap[np.ix_(keep, keep)], rhs)
    return {
        line.key: (theta[pos[line.from_bus]] - theta[pos[line.to_bus]])
        / line.reactance
        for line in system.lines
    }


# -- Newton power flow and phasor-space line flows -------------------------------


def _ybus(system: SystemData) -> tuple[np.ndarray, list[str]]:
    buses = [b.id for b in system.buses]
    pos = {b: i for i, b in enumerate(buses)}
    y = np.zeros((len(buses), len(buses)), dtype=complex)
    for line in system.lines:
        series = line.conductance + 1j * line.susceptance
        i, j = pos[line.from_bus], pos[line.to_bus]
        y[i, i] += series + 0.5j * line.charging
        y[j, j] += series + 0.5j * line.charging
        y[i, j] -= series
        y[j, i] -= series
    for b in system.buses:
        y[pos[b.id], pos[b.id]] += b.shunt_conductance + 1j * b.shunt_susceptance
    return y, buses


def newton_ac_power_flow(
    system: SystemData,
    p_net: dict[str, float],
    q_net: dict[str, float],
    slack_vmag: float = 1.0,
    tol: float = 1e-11,
    max_iter: int = 60,
) -> tuple[dict[str, float], dict[str, float]]:
    """Solve the nonlinear power-flow equations for fixed net injections.

    Every non-slack bus is treated as a PQ bus with the given net active and
    reactive injections (GW / GVar); the slack bus holds ``slack_vmag`` at
    angle zero and absorbs the residual. Newton iteration with a finite-
    difference Jacobian; raises when it fails to converge, since a silent
    bad point would poison any comparison built on top.
    """
    ybus, buses = _ybus(system)
    sb = system.base_power / 1000.0
    pos = {b: i for i, b in enumerate(buses)}
    slack = pos[system.slack_bus]
    others = [i for i in range(len(buses)) if i != slack]
    if not others:
        return {buses[slack]: slack_vmag}, {buses[slack]: 0.0}
    target = np.array(
        [p_net.get(buses[i], 0.0) / sb for i in others]
        + [q_net.get(buses[i], 0.0) / sb for i in others]
    )

    def residual(z: np.ndarray) -> np.ndarray:
        theta = np.zeros(len(buses))
        vmag = np.full(len(buses), slack_vmag)
        theta[others] = z[: len(others)]
        vmag[others] = z[len(others):]
        volts = vmag * np.exp(1j * theta)
        s_inj = volts * np.conj(ybus @ volts)
        return np.concatenate(
            (s_inj.real[others], s_inj.imag[others])
        ) - target

    z = np.concatenate((np.zeros(len(others)), np.ones(len(others))))
    for _ in range(max_iter):
        res = residual(z)
        if np.max(np.abs(res)) < tol:
            theta = np.zeros(len(buses))
            vmag = np.full(len(buses), slack_vmag)
            theta[others] = z[: len(others)]
            vmag[others] = z[len(others):]
            return (
                {b: float(vmag[pos[b]]) for b in buses},
                {b: float(theta[pos[b]]) for b in buses},
            )
        jac = np.zeros((len(res), len(z)))
        bump = 1e-7
        for col in range(len(z)):
            step = z.copy()
            step[col] += bump
            jac[:, col] = (residual(step) - res) / bump
        z = z - np.linalg.solve(jac, res)
    raise OracleError("power flow failed to converge; injections may be infeasible")


def ac_line_flows(
    system: SystemData,
    vmag: dict[str, float],
    theta: dict[str, float],
) -> dict[tuple[str, str, int], tuple[float, float]]:
    """Directed (P, Q) in GW/GVar on every line orientation, from phasors."""
    sb = system.base_power / 1000.0
    flows: dict[tuple[str, str, int], tuple[float, float]] = {}
    for line in system.lines:
        g, b_ser, b_ch = line.conductance, line.susceptance, line.charging
        for tail, head in ((line.from_bus, line.to_bus), (line.to_bus, line.from_bus)):
            vt, vh = vmag[tail], vmag[head]
            lead = theta[head] - theta[tail]
            cos_part = vt * vh * math.cos(lead)
            sin_part = vt * vh * math.sin(lead)
            p = sb * (g * vt**2 - g * cos_part + b_ser * sin_part)
            q = sb * (-(b_ser + b_ch / 2.0) * vt**2 + g * sin_part + b_ser * cos_part)
            flows[(tail, head, line.circuit)] = (p, q)
    return flows


def ac_bus_injections(
    system: SystemData,
    vmag: dict[str, float],
    theta: dict[str, float],
) -> dict[str, tuple[float, float]]:
    """Net complex power injection (P GW, Q GVar) at every bus, from phasors.

    Computed through the admittance matrix, shunts included, so it is the
    balance-side counterpart of :func:`ac_line_flows`.
    """
    y, buses = _ybus(system)
    v = np.array(
        [vmag[b] * complex(math.cos(theta[b]), math.sin(theta[b])) for b in buses]
    )
    s = v * np.conj(y @ v) * (system.base_power / 1000.0)
    return {b: (float(s[i].real), float(s[i].imag)) for i, b in enumerate(buses)}
