"""Formulation blocks on hand-sized systems: row counts and arithmetic."""

import dataclasses

import pytest

from gepkit.blocks import (
    BuildContext,
    build_dc_network,
    build_general,
    build_objective,
    build_renewable_policy,
    build_storage,
    build_thermal,
    bus_injection_expr,
    soc_mode,
)
from gepkit.solvers.interface import solve
from gepkit.temporal import build_hourly_identity, build_representative

from conftest import assemble_linear, tiny_bc_system


def test_general_block_variables(tiny_bc):
    system, temporal, ctx = tiny_bc
    m = ctx.model
    census = m.var_census()
    # build: gas + pv + batt; unserved: 3 buses x 2 steps
    assert census["build"] == 3
    assert census["unserved"] == 6
    assert m.var("build", "gas").upper == 1.0
    assert m.var("build", "pv").upper == 0.0  # existing only, no expansion
    # unserved demand is capped by the demand itself
    assert m.var("unserved", "b2", 1, 1).upper == pytest.approx(0.25)
    assert m.var("unserved", "b1", 1, 1).upper == 0.0


def test_thermal_row_census(tiny_bc):
    _, temporal, ctx = tiny_bc
    census = ctx.model.row_census()
    n = len(temporal.step_pairs())
    for family in (
        "thermal_output_def",
        "thermal_above_start_cap",
        "thermal_above_stop_cap",
        "thermal_res_dn_cap",
        "commit_link",
        "commit_cap",
        "thermal_max_cap",
        "thermal_min_floor",
    ):
        assert census[family] == n, family
    # infinite ramps on the toy unit mean no ramp rows at all
    assert "ramp_up" not in census
    assert "ramp_dn" not in census


def test_ramp_rows_appear_when_finite():
    system = tiny_bc_system(2)
    system.thermal[0] = dataclasses.replace(
        system.thermal[0], ramp_up=0.1, ramp_down=0.2
    )
    temporal = build_hourly_identity(2)
    ctx = assemble_linear(system, temporal)
    census = ctx.model.row_census()
    assert census["ramp_up"] == 2
    assert census["ramp_dn"] == 2


def test_reserve_rows_only_when_requested():
    system = tiny_bc_system(2)
    temporal = build_hourly_identity(2)
    ctx = assemble_linear(system, temporal)
    assert "reserve_req_up" not in ctx.model.row_census()

    with_res = dataclasses.replace(system, reserve_up=0.05, reserve_down=0.02)
    ctx2 = assemble_linear(with_res, temporal)
    census = ctx2.model.row_census()
    assert census["reserve_req_up"] == 2
    assert census["reserve_req_dn"] == 2
    row = next(r for r in ctx2.model.linear_rows if r.family == "reserve_req_up")
    assert row.rhs == pytest.approx(0.05 * 0.40)  # 5% of the 0.40 GW step demand


def test_storage_soc_mode_follows_temporal_and_kind(tiny_bc):
    system, _, _ = tiny_bc
    batt = system.storages[0]
    hourly = build_hourly_identity(4)
    rep = build_representative([(1, 1), (2, 1)], steps_per_rp=2)
    assert soc_mode(batt, hourly) == "intra"
    assert soc_mode(batt, rep) == "intra"
    hydro = dataclasses.replace(batt, is_hydro=True)
    assert soc_mode(hydro, rep) == "inter"
    assert soc_mode(hydro, hourly) == "intra"


def test_storage_balance_round_trips_efficiency():
    system = tiny_bc_system(4)
    temporal = build_hourly_identity(4)
    ctx = assemble_linear(system, temporal)
    m = ctx.model
    fixes = {}
    for rp, k in temporal.step_pairs():
        fixes[("charge", k)] = 0.1 if k <= 2 else 0.0
        fixes[("p_storage", k)] = 0.0 if k <= 2 else 0.1 * 0.95 * 0.95
    # walk the intra balance by hand: two charging steps then two draining
    soc = {}
    level = 0.0
    for rp, k in temporal.step_pairs():
        level += 0.95 * fixes[("charge", k)]
        level -= fixes[("p_storage", k)] / 0.95
        soc[k] = level
    assert soc[4] == pytest.approx(0.0)  # cycle closes

    point = [0.0] * len(m.variables)
    for rp, k in temporal.step_pairs():
        point[m.var("charge", "batt", rp, k).index] = fixes[("charge", k)]
        point[m.var("p_storage", "batt", rp, k).index] = fixes[("p_storage", k)]
        point[m.var("soc_intra", "batt", rp, k).index] = soc[k]
    for row in m.linear_rows:
        if row.family == "soc_intra_balance":
            assert row.violation(point) <= 1e-12, row.name


def test_storage_gate_blocks_simultaneous_charge_discharge():
    system = tiny_bc_system(2)
    temporal = build_hourly_identity(2)
    ctx = assemble_linear(system, temporal)
    m = ctx.model
    gate = m.var("discharge_mode", "batt", 1, 1)
    p_out = m.var("p_storage", "batt", 1, 1)
    p_in = m.var("charge", "batt", 1, 1)
    point = [0.0] * len(m.variables)
    point[p_out.index] = 0.05
    point[p_in.index] = 0.05
    for g in (0.0, 1.0):
        point[gate.index] = g
        nailed = max(
            row.violation(point)
            for row in m.linear_rows
            if row.family in ("discharge_gate", "charge_gate")
            and row.key[:1] == ("batt",) and row.key[1:] == (1, 1)
        )
        assert nailed > 0.0  # one of the two gates trips either way


def test_renewable_cap_scales_with_availability(tiny_bc):
    system, temporal, ctx = tiny_bc
    m = ctx.model
    rows = {r.key: r for r in m.linear_rows if r.family == "renew_cap"}
    point = [0.0] * len(m.variables)
    # one existing pv unit, zero build: cap is size * profile
    point[m.var("p_renew", "pv", 1, 1).index] = 0.3 * 0.9 + 1e-6
    assert rows[("pv", 1, 1)].violation(point) == pytest.approx(1e-6, abs=1e-9)
    point[m.var("p_renew", "pv", 1, 1).index] = 0.3 * 0.9
    assert rows[("pv", 1, 1)].violation(point) == 0.0


def test_fossil_cap_arithmetic():
    system = tiny_bc_system(2)
    temporal = build_hourly_identity(2)
    ctx = assemble_linear(system, temporal, kappa=0.25)
    row = next(
        r for r in ctx.model.linear_rows if r.family == "fossil_energy_cap"
    )
    # two steps, 0.40 GW demand each, kappa 0.25: thermal may serve 0.6
    assert row.rhs == pytest.approx(0.75 * 0.80)
    assert len(row.terms) == 2  # one thermal unit, two steps


def test_bus_injection_expr_signs(tiny_bc):
    system, temporal, ctx = tiny_bc
    expr = bus_injection_expr(ctx, "b2", 1, 1)
    m = ctx.model
    assert expr.constant == pytest.approx(-0.25)
    coefs = {m.variables[i].name: c for i, c in expr.terms.items()}
    assert coefs["p_storage[batt,1,1]"] == 1.0
    assert coefs["charge[batt,1,1]"] == -1.0
    assert coefs["unserved[b2,1,1]"] == 1.0
    assert "p_thermal[gas,1,1]" not in coefs  # gas sits at b1


def test_dc_network_balance_and_flow_rows(tiny_bc):
    system, temporal, ctx = tiny_bc
    census = ctx.model.row_census()
    n = len(temporal.step_pairs())
    assert census["power_balance"] == 3 * n
    assert census["flow_def"] == 3 * n
    flow = ctx.model.var("flow", "b1", "b2", 1, 1, 1)
    assert flow.lower == -5.0 and flow.upper == 5.0


def test_objective_recipe_hand_check():
    system = tiny_bc_system(1)
    temporal = build_hourly_identity(1)
    ctx = assemble_linear(system, temporal)
    m = ctx.model
    point = [0.0] * len(m.variables)
    point[m.var("build", "gas").index] = 1.0
    point[m.var("commit", "gas", 1, 1).index] = 1.0
    point[m.var("startup", "gas", 1, 1).index] = 1.0
    point[m.var("p_thermal", "gas", 1, 1).index] = 0.3
    point[m.var("unserved", "b3", 1, 1).index] = 0.1
    want = (
        2.0 * 0.4      # investment: cost_inv * p_max
        + 0.01         # one committed hour
        + 0.02         # one start
        + 0.05 * 0.3   # energy cost
        + 10.0 * 0.1   # unserved energy
    )
    assert m.objective_value(point) == pytest.approx(want)


def test_representative_weights_scale_objective():
    system = tiny_bc_system(2)
    rep = build_representative([(1, 1), (2, 1), (3, 1)], steps_per_rp=2)
    ctx = assemble_linear(system, rep)
    m = ctx.model
    point = [0.0] * len(m.variables)
    point[m.var("p_thermal", "gas", 1, 1).index] = 0.2
    # the step stands for three days, so its energy cost triples
    assert m.objective_value(point) == pytest.approx(3.0 * 0.05 * 0.2)


def test_assembled_toy_solves_to_sane_dispatch(tiny_bc):
    system, temporal, ctx = tiny_bc
    sol = solve(ctx.model)
    assert sol.is_optimal()
    assert sol.objective is not None and sol.objective > 0
    served = sum(
        sol.value(f"unserved[{b.id},1,{k}]")
        for b in system.buses for k in (1, 2)
    )
    assert served <= 1e-9  # cheap gas covers everything
    assert ctx.model.max_violation(sol.dense(ctx.model))[0] <= 1e-7
