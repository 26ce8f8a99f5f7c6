"""Conic network block: assembly rules, cone diagnostics, AC cross-checks."""

import dataclasses
import math

import pytest

from gepkit.blocks import (
    BuildContext,
    build_dc_network,
    build_general,
    build_objective,
    build_renewable_policy,
    build_storage,
    build_thermal,
)
from gepkit.isf import NetworkError
from gepkit.oracle import ac_line_flows, newton_ac_power_flow
from gepkit.socp import (
    build_socp,
    cone_residual,
    conic_pairs,
    format_cone_report,
    format_voltage_report,
    recover_voltages,
)
from gepkit.solvers.interface import solve
from gepkit.system import Bus, Line
from gepkit.temporal import build_hourly_identity

from conftest import two_bus_ac


def assemble_conic(system, temporal, kappa=0.0, apparent_cone=False):
    ctx = BuildContext(system=system, temporal=temporal, kappa=kappa)
    build_general(ctx)
    build_storage(ctx)
    build_thermal(ctx)
    build_renewable_policy(ctx)
    build_socp(ctx, apparent_cone=apparent_cone)
    build_objective(ctx)
    return ctx


@pytest.fixture(scope="module")
def solved_two_bus():
    system = two_bus_ac()
    temporal = build_hourly_identity(1)
    ctx = assemble_conic(system, temporal)
    sol = solve(ctx.model)
    assert sol.is_optimal()
    return system, temporal, ctx, sol


def test_conic_pairs_canonical_and_deduplicated():
    mk = lambda f, t, c: Line(f, t, c, 1.0, -10.0, 0.0, 5.0, 800.0, 0.1)
    system = dataclasses.replace(
        two_bus_ac(),
        lines=[mk("b2", "b1", 1), mk("b1", "b2", 2), mk("b2", "b1", 3)],
    )
    assert conic_pairs(system) == [("b1", "b2")]


def test_conic_block_refuses_linearized_company():
    system = two_bus_ac()
    temporal = build_hourly_identity(1)
    ctx = BuildContext(system=system, temporal=temporal, kappa=0.0)
    build_general(ctx)
    build_storage(ctx)
    build_thermal(ctx)
    build_renewable_policy(ctx)
    build_dc_network(ctx)
    with pytest.raises(NetworkError, match="replaces"):
        build_socp(ctx)


def test_angle_cap_must_leave_cone_room():
    system = dataclasses.replace(two_bus_ac(), max_angle_diff=1.6)
    temporal = build_hourly_identity(1)
    ctx = BuildContext(system=system, temporal=temporal, kappa=0.0)
    build_general(ctx)
    build_storage(ctx)
    build_thermal(ctx)
    with pytest.raises(NetworkError, match="pi/2"):
        build_socp(ctx)


def test_reactive_variable_bounds(solved_two_bus):
    _, _, ctx, _ = solved_two_bus
    m = ctx.model
    q_gas = m.var("q_thermal", "gas", 1, 1)
    assert (q_gas.lower, q_gas.upper) == (-0.5, 0.6)
    q_svc = m.var("q_facts", "svc2", 1, 1)
    assert (q_svc.lower, q_svc.upper) == (-0.3, 0.3)
    # voltage products live inside the voltage box of the leading bus
    cii = m.var("cii", "b2", 1, 1)
    assert cii.lower == pytest.approx(0.95**2)
    assert cii.upper == pytest.approx(1.05**2)
    sij = m.var("sij", "b1", "b2", 1, 1)
    assert sij.lower == pytest.approx(-(1.05**2))


def test_zero_range_units_add_no_cap_rows():
    system = two_bus_ac()
    no_q = dataclasses.replace(
        system, thermal=[dataclasses.replace(system.thermal[0], q_min=0.0, q_max=0.0)]
    )
    ctx = assemble_conic(no_q, build_hourly_identity(1))
    census = ctx.model.row_census()
    assert "q_thermal_cap_hi" not in census
    assert "q_facts_cap_hi" in census  # facts rows stay


def test_apparent_cone_adds_rows():
    system = two_bus_ac()
    temporal = build_hourly_identity(1)
    plain = assemble_conic(system, temporal).model.row_census()
    capped = assemble_conic(system, temporal, apparent_cone=True).model.row_census()
    assert "apparent_cap" not in plain
    assert capped["apparent_cap"] == 2  # one per direction of the single line


def test_solution_is_feasible_and_lossy(solved_two_bus):
    system, temporal, ctx, sol = solved_two_bus
    worst, name = ctx.model.max_violation(sol.dense(ctx.model))
    assert worst < 1e-7, name
    fp_fwd = sol.value("fp[b1,b2,1,1,1]")
    fp_rev = sol.value("fp[b2,b1,1,1,1]")
    # resistive line: the two directed flows burn real power
    assert fp_fwd + fp_rev > 1e-6
    assert fp_fwd > 0.4  # delivery toward the load bus


def test_reactive_balance_at_load_bus(solved_two_bus):
    system, temporal, ctx, sol = solved_two_bus
    q_facts = sol.value("q_facts[svc2,1,1]")
    fq_out = sol.value("fq[b2,b1,1,1,1]")
    cii2 = sol.value("cii[b2,1,1]")
    uns = sol.value("unserved[b2,1,1]")
    # facts + unserved credit - outflow + shunt support must meet 0.12 GVar
    resid = q_facts + 0.3 * uns - fq_out + 0.1 * cii2 * 0.05 - 0.12
    assert abs(resid) < 1e-6


def test_cone_residuals_nonnegative_and_tight(solved_two_bus):
    system, temporal, _, sol = solved_two_bus
    gaps = cone_residual(sol, system, temporal)
    assert len(gaps) == 1
    for g in gaps:
        assert g.residual > -1e-7
    report = format_cone_report(gaps)
    assert report.splitlines()[0] == "rp,k,from_bus,to_bus,residual"
    assert "b1,b2" in report


def test_voltage_recovery_radial(solved_two_bus):
    system, temporal, _, sol = solved_two_bus
    rec = recover_voltages(sol, system, temporal)
    assert rec.cycle_error == 0.0  # single line, no loops to close
    v2 = rec.magnitudes[(1, 1, "b2")]
    assert 0.95 <= v2 <= 1.05
    assert rec.angles[(1, 1, "b1")] == 0.0  # slack pinned
    assert rec.angles[(1, 1, "b2")] < 0.0  # load bus lags
    report = format_voltage_report(rec)
    assert report.startswith("rp,k,bus,vmag_pu")


def test_conic_point_matches_newton_power_flow(solved_two_bus):
    system, temporal, _, sol = solved_two_bus
    gaps = cone_residual(sol, system, temporal)
    tight = max(abs(g.residual) for g in gaps)
    uns = sol.value("unserved[b2,1,1]")
    q_facts = sol.value("q_facts[svc2,1,1]")
    p2 = -0.42 + uns
    q2 = q_facts - 0.12 + 0.3 * uns
    vslack = math.sqrt(sol.value("cii[b1,1,1]"))
    vmag, theta = newton_ac_power_flow(system, {"b2": p2}, {"b2": q2},
                                       slack_vmag=vslack)
    flows = ac_line_flows(system, vmag, theta)
    rec = recover_voltages(sol, system, temporal)
    assert tight < 1e-7  # minimization closes the cone on this instance
    assert sol.value("fp[b1,b2,1,1,1]") == pytest.approx(
        flows[("b1", "b2", 1)][0], abs=1e-5
    )
    assert sol.value("fq[b1,b2,1,1,1]") == pytest.approx(
        flows[("b1", "b2", 1)][1], abs=1e-5
    )
    assert sol.value("fp[b2,b1,1,1,1]") == pytest.approx(
        flows[("b2", "b1", 1)][0], abs=1e-5
    )
    assert vmag["b2"] == pytest.approx(rec.magnitudes[(1, 1, "b2")], abs=1e-5)


def test_relaxation_never_beats_ac_point(solved_two_bus):
    """The conic optimum bounds any AC-exact operating point from below."""
    system, temporal, ctx, sol = solved_two_bus
    # the AC point from the Newton solve, evaluated with the model's recipe:
    # identical dispatch except losses can only be higher at exactness
    uns = sol.value("unserved[b2,1,1]")
    p_gas_conic = sol.value("p_thermal[gas,1,1]")
    vslack = math.sqrt(sol.value("cii[b1,1,1]"))
    q_facts = sol.value("q_facts[svc2,1,1]")
    vmag, theta = newton_ac_power_flow(
        system, {"b2": -0.42 + uns}, {"b2": q_facts - 0.12 + 0.3 * uns},
        slack_vmag=vslack,
    )
    flows = ac_line_flows(system, vmag, theta)
    shunt_draw = 0.0  # b1 has no shunt conductance
    p_gas_ac = flows[("b1", "b2", 1)][0] + shunt_draw
    assert p_gas_conic <= p_gas_ac + 1e-6
