"""Shared fixtures: shipped datasets and hand-sized toy systems."""

from pathlib import Path

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
from gepkit.inertia import InertiaConfig, build_inertia
from gepkit.system import (
    Bus,
    DemandSeries,
    FactsDevice,
    Line,
    RenewableUnit,
    StorageUnit,
    SystemData,
    ThermalUnit,
    load_system,
    load_temporal,
)
from gepkit.temporal import build_hourly_identity

REPO = Path(__file__).resolve().parents[1]
MINI3 = REPO / "datasets" / "mini3"
NINEBUS = REPO / "datasets" / "ninebus"


@pytest.fixture(scope="session")
def mini3():
    return load_system(MINI3), load_temporal(MINI3)


@pytest.fixture(scope="session")
def ninebus():
    return load_system(NINEBUS), load_temporal(NINEBUS)


def tiny_bc_system(n_steps: int) -> SystemData:
    """Three buses in a loop, one of everything, no reactive data."""
    buses = [Bus(id="b1", is_slack=True), Bus(id="b2"), Bus(id="b3")]
    lines = [
        Line("b1", "b2", 1, 0.0, -10.0, 0.0, 5.0, 800.0, 0.1),
        Line("b2", "b3", 1, 0.0, -5.0, 0.0, 5.0, 800.0, 0.2),
        Line("b1", "b3", 1, 0.0, -8.0, 0.0, 5.0, 800.0, 0.125),
    ]
    thermal = [
        ThermalUnit(
            id="gas", bus="b1", p_min=0.1, p_max=0.4, q_min=0.0, q_max=0.0,
            inertia=4.0, cost_startup=0.02, cost_commit=0.01, cost_var=0.05,
            cost_inv=2.0, ramp_up=float("inf"), ramp_down=float("inf"),
            existing=0, build_max=1,
        ),
    ]
    renewables = [
        RenewableUnit(
            id="pv", bus="b3", unit_size=0.3, inertia=0.0, cost_om=0.0,
            cost_inv=1.0, existing=1, build_max=0, profile_key="sun",
        ),
    ]
    storages = [
        StorageUnit(
            id="batt", bus="b2", unit_size=0.2, energy_to_power=2.0,
            eff_charge=0.95, eff_discharge=0.95, min_soc=0.0, max_soc=1.0,
            inertia=0.0, cost_om=0.001, cost_inv=1.5, existing=0, build_max=1,
            initial_reserve=0.0, is_hydro=False,
        ),
    ]
    active = {}
    profiles = {}
    sun = [0.9, 0.1, 0.5, 0.7]
    for k in range(1, n_steps + 1):
        active[(1, k, "b2")] = 0.25
        active[(1, k, "b3")] = 0.15
        profiles[(1, k, "sun")] = sun[(k - 1) % len(sun)]
    return SystemData(
        buses=buses, lines=lines, thermal=thermal, renewables=renewables,
        storages=storages, facts=[], demand=DemandSeries(active=active),
        profiles=profiles, inflows={}, base_power=100.0, max_angle_diff=0.6,
        reserve_up=0.0, reserve_down=0.0, reserve_up_cost=0.0,
        reserve_down_cost=0.0, ens_cost=10.0, kappa_default=0.0,
        inertia_settings={},
    )


def inertia_toy(n_steps: int) -> SystemData:
    """One synchronous unit, one virtual-inertia candidate, two buses."""
    buses = [Bus(id="b1", is_slack=True), Bus(id="b2")]
    lines = [Line("b1", "b2", 1, 0.0, -10.0, 0.0, 5.0, 800.0, 0.1)]
    thermal = [
        ThermalUnit(
            id="nuke", bus="b1", p_min=0.2, p_max=0.772, q_min=0.0, q_max=0.0,
            inertia=8.0, cost_startup=0.01, cost_commit=0.005, cost_var=0.02,
            cost_inv=100.0, ramp_up=float("inf"), ramp_down=float("inf"),
            existing=1, build_max=0,
        ),
    ]
    renewables = [
        RenewableUnit(
            id="windvi", bus="b2", unit_size=0.2, inertia=10.0, cost_om=0.005,
            cost_inv=8.0, existing=0, build_max=3, profile_key="wind",
        ),
    ]
    active = {}
    profiles = {}
    for k in range(1, n_steps + 1):
        active[(1, k, "b1")] = 0.3
        active[(1, k, "b2")] = 0.2
        profiles[(1, k, "wind")] = 0.8
    return SystemData(
        buses=buses, lines=lines, thermal=thermal, renewables=renewables,
        storages=[], facts=[], demand=DemandSeries(active=active),
        profiles=profiles, inflows={}, base_power=100.0, max_angle_diff=0.6,
        reserve_up=0.0, reserve_down=0.0, reserve_up_cost=0.0,
        reserve_down_cost=0.0, ens_cost=10.0, kappa_default=0.0,
        inertia_settings={},
    )


def two_bus_ac() -> SystemData:
    """Lossy single line, shunt and charging, one thermal, one compensator."""
    buses = [
        Bus(id="b1", is_slack=True),
        Bus(id="b2", shunt_susceptance=0.05, reactive_ratio=0.3),
    ]
    r, x = 0.01, 0.10
    g = r / (r * r + x * x)
    b = -x / (r * r + x * x)
    lines = [Line("b1", "b2", 1, g, b, 0.02, 5.0, 5000.0, x)]
    thermal = [
        ThermalUnit(
            id="gas", bus="b1", p_min=0.05, p_max=0.9, q_min=-0.5, q_max=0.6,
            inertia=4.0, cost_startup=0.002, cost_commit=0.001, cost_var=0.03,
            cost_inv=45.0, ramp_up=float("inf"), ramp_down=float("inf"),
            existing=1, build_max=0,
        ),
    ]
    facts = [FactsDevice(id="svc2", bus="b2", q_min=-0.3, q_max=0.3,
                         cost_inv=0.5, build_max=1)]
    demand = DemandSeries(active={(1, 1, "b2"): 0.42},
                          reactive={(1, 1, "b2"): 0.12})
    return SystemData(
        buses=buses, lines=lines, thermal=thermal, renewables=[], storages=[],
        facts=facts, demand=demand, profiles={}, inflows={}, base_power=100.0,
        max_angle_diff=0.6, reserve_up=0.0, reserve_down=0.0,
        reserve_up_cost=0.0, reserve_down_cost=0.0, ens_cost=10.0,
        kappa_default=0.0, inertia_settings={},
    )


def assemble_linear(system: SystemData, temporal, kappa: float = 0.0,
                    inertia: InertiaConfig | None = None) -> BuildContext:
    """Linear-network assembly used by the toy-system tests."""
    ctx = BuildContext(system=system, temporal=temporal, kappa=kappa)
    build_general(ctx)
    build_storage(ctx)
    build_thermal(ctx)
    build_renewable_policy(ctx)
    build_dc_network(ctx)
    if inertia is not None:
        build_inertia(ctx, inertia)
    build_objective(ctx)
    return ctx


@pytest.fixture
def tiny_bc():
    system = tiny_bc_system(2)
    temporal = build_hourly_identity(2)
    return system, temporal, assemble_linear(system, temporal)
