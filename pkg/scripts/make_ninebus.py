"""Generate the 9-bus planning dataset.

A year compressed to 7 representative days (365 assigned calendar days), a
meshed 13-line grid, one existing nuclear unit and one existing pumped-hydro
plant, and candidate gas, coal, fueloil, wind, solar, battery, and FACTS
investments. Numbers are hand-picked to give the planner real trade-offs at
clean-production targets between a third and one.
"""

from __future__ import annotations

import csv
import math
import random
from pathlib import Path

from gepkit.system import (
    Bus,
    DemandSeries,
    FactsDevice,
    Line,
    RenewableUnit,
    StorageUnit,
    SystemData,
    ThermalUnit,
    save_system,
)

N_RP = 7
N_STEPS = 24
RP_DAYS = [52, 52, 52, 52, 52, 52, 53]  # sums to 365

# share of system demand consumed at each bus
DEMAND_SHARE = {
    "b1": 0.12, "b2": 0.10, "b3": 0.12, "b4": 0.14, "b5": 0.02,
    "b6": 0.25, "b7": 0.10, "b8": 0.01, "b9": 0.14,
}
PEAK_GW = 6.0
Q_RATIO = 0.30

# ring plus four chords: 13 circuits
LINE_ENDS = [
    ("b1", "b2"), ("b2", "b3"), ("b3", "b4"), ("b4", "b5"), ("b5", "b6"),
    ("b6", "b7"), ("b7", "b8"), ("b8", "b9"), ("b9", "b1"),
    ("b1", "b4"), ("b2", "b6"), ("b4", "b6"), ("b5", "b7"),
]
LINE_X = [0.06, 0.08, 0.07, 0.10, 0.09, 0.06, 0.11, 0.12, 0.08, 0.10, 0.09, 0.07, 0.12]


def line(a: str, b: str, x: float) -> Line:
    r = x / 8.0
    mag2 = r * r + x * x
    return Line(
        from_bus=a, to_bus=b, circuit=1,
        conductance=r / mag2, susceptance=-x / mag2, charging=0.0,
        flow_limit=0.8, apparent_limit=800.0, reactance=x,
    )


def thermal(tid, bus, pmin, pmax, qr, h, su, cvar, cup, cinv, existing=0):
    build_max = 0 if existing else 1
    return ThermalUnit(
        id=tid, bus=bus, p_min=pmin, p_max=pmax, q_min=-qr, q_max=qr,
        inertia=h, cost_startup=su, cost_commit=cup, cost_var=cvar,
        cost_inv=cinv, ramp_up=pmax, ramp_down=pmax,
        existing=existing, build_max=build_max,
    )


def demand_shape(rng: random.Random, rp: int) -> list[float]:
    """Fraction-of-peak curve for one representative day."""
    season = 0.85 + 0.15 * math.cos(2 * math.pi * (rp - 1) / N_RP)
    out = []
    for k in range(1, N_STEPS + 1):
        base = 0.62
        morning = 0.18 * math.exp(-((k - 9) ** 2) / 8.0)
        evening = 0.30 * math.exp(-((k - 20) ** 2) / 10.0)
        night = -0.12 * math.exp(-((k - 4) ** 2) / 12.0)
        noise = rng.uniform(-0.02, 0.02)
        out.append(round(season * (base + morning + evening + night) + noise, 4))
    return out


def wind_shape(rng: random.Random, rp: int) -> list[float]:
    windy = 0.35 + 0.40 * math.sin(2 * math.pi * (rp - 0.3) / N_RP) ** 2
    out = []
    for k in range(1, N_STEPS + 1):
        diurnal = 0.12 * math.cos(2 * math.pi * (k - 3) / N_STEPS)
        value = windy + diurnal + rng.uniform(-0.06, 0.06)
        out.append(round(min(1.0, max(0.05, value)), 4))
    return out


def solar_shape(rng: random.Random, rp: int) -> list[float]:
    clear = 0.75 + 0.20 * math.cos(2 * math.pi * (rp - 1) / N_RP)
    out = []
    for k in range(1, N_STEPS + 1):
        sun = max(0.0, math.sin(math.pi * (k - 6) / 14.0)) if 6 <= k <= 20 else 0.0
        value = clear * sun * (1.0 + rng.uniform(-0.04, 0.04))
        out.append(round(min(1.0, max(0.0, value)), 4))
    return out


def build() -> SystemData:
    buses = [Bus(id=f"b{i}", v_min=0.9, v_max=1.1, is_slack=(i == 1)) for i in range(1, 10)]
    lines = [line(a, b, x) for (a, b), x in zip(LINE_ENDS, LINE_X)]

    thermals = [
        thermal("nuclear", "b7", 0.772, 0.772, 0.0, 8.0, 0.0, 0.015, 0.0, 0.0, existing=1),
        thermal("ccgt1", "b1", 0.134, 0.668, 0.2, 4.0, 0.03, 0.028, 0.009, 45.5),
        thermal("ccgt3", "b3", 0.100, 0.500, 0.267, 4.0, 0.03, 0.039, 0.009, 20.1),
        thermal("ccgt4", "b4", 0.100, 0.500, 0.267, 4.0, 0.03, 0.039, 0.009, 20.1),
        thermal("ccgt6", "b6", 0.100, 0.500, 0.267, 4.0, 0.03, 0.039, 0.009, 20.1),
        thermal("ocgt2", "b2", 0.040, 0.400, 0.18, 2.5, 0.06, 0.064, 0.003, 9.9),
        thermal("ocgt4", "b4", 0.040, 0.400, 0.18, 2.5, 0.06, 0.064, 0.003, 9.9),
        thermal("ocgt6", "b6", 0.040, 0.400, 0.18, 2.5, 0.06, 0.064, 0.003, 9.9),
        thermal("coal1", "b1", 0.150, 0.350, 0.15, 5.0, 0.05, 0.042, 0.008, 58.0),
        thermal("coal2", "b2", 0.150, 0.350, 0.15, 5.0, 0.05, 0.042, 0.008, 58.0),
        thermal("coal3", "b3", 0.150, 0.350, 0.15, 5.0, 0.05, 0.042, 0.008, 58.0),
        thermal("coal4", "b4", 0.150, 0.350, 0.15, 5.0, 0.05, 0.042, 0.008, 58.0),
        thermal("fueloil9", "b9", 0.050, 0.200, 0.10, 4.0, 0.02, 0.090, 0.004, 30.0),
    ]

    renewables = [
        RenewableUnit(id="wind5", bus="b5", unit_size=0.1, inertia=0.0,
                      cost_om=0.002, cost_inv=7.3, existing=0, build_max=30,
                      profile_key="wind"),
        RenewableUnit(id="windvi5", bus="b5", unit_size=0.1, inertia=2.0,
                      cost_om=0.005, cost_inv=8.0, existing=0, build_max=30,
                      profile_key="wind"),
        RenewableUnit(id="solar6", bus="b6", unit_size=0.1, inertia=0.0,
                      cost_om=0.0, cost_inv=8.4, existing=0, build_max=20,
                      profile_key="solar"),
        RenewableUnit(id="solar8", bus="b8", unit_size=0.1, inertia=0.0,
                      cost_om=0.0, cost_inv=8.4, existing=0, build_max=20,
                      profile_key="solar"),
    ]

    storages = [
        StorageUnit(id="phydro3", bus="b3", unit_size=0.6, energy_to_power=8.0,
                    eff_charge=0.9, eff_discharge=0.9, min_soc=0.0, max_soc=1.0,
                    inertia=0.0, cost_om=0.001, cost_inv=0.0, existing=1,
                    build_max=0, initial_reserve=2.4, is_hydro=True),
    ]
    for i in (1, 4, 5, 6):
        storages.append(StorageUnit(
            id=f"bess{i}", bus=f"b{i}", unit_size=0.1, energy_to_power=4.0,
            eff_charge=0.95, eff_discharge=0.95, min_soc=0.0, max_soc=1.0,
            inertia=0.0, cost_om=0.004, cost_inv=3.2, existing=0,
            build_max=10, initial_reserve=0.0, is_hydro=False))
        storages.append(StorageUnit(
            id=f"bessvi{i}", bus=f"b{i}", unit_size=0.1, energy_to_power=4.0,
            eff_charge=0.95, eff_discharge=0.95, min_soc=0.0, max_soc=1.0,
            inertia=10.0, cost_om=0.010, cost_inv=3.4, existing=0,
            build_max=10, initial_reserve=0.0, is_hydro=False))

    facts = [FactsDevice(id=f"svc{i}", bus=f"b{i}", q_min=-0.5, q_max=0.5,
                         cost_inv=0.5, build_max=1) for i in range(1, 10)]

    rng = random.Random(2024)
    demand = DemandSeries()
    profiles: dict[tuple[int, int, str], float] = {}
    for rp in range(1, N_RP + 1):
        dshape = demand_shape(rng, rp)
        wshape = wind_shape(rng, rp)
        sshape = solar_shape(rng, rp)
        for k in range(1, N_STEPS + 1):
            total = PEAK_GW * dshape[k - 1]
            for bus, share in DEMAND_SHARE.items():
                p = round(total * share, 6)
                demand.active[(rp, k, bus)] = p
                demand.reactive[(rp, k, bus)] = round(p * Q_RATIO, 6)
            profiles[(rp, k, "wind")] = wshape[k - 1]
            profiles[(rp, k, "solar")] = sshape[k - 1]

    return SystemData(
        buses=buses, lines=lines, thermal=thermals, renewables=renewables,
        storages=storages, facts=facts, demand=demand, profiles=profiles,
        inflows={}, base_power=1000.0, max_angle_diff=0.6,
        reserve_up=0.03, reserve_down=0.03,
        reserve_up_cost=0.25, reserve_down_cost=0.15,
        ens_cost=10.0, kappa_default=0.33,
        inertia_settings={
            "f_base_hz": 50.0,
            "rocof_limit_hz_s": 1.0,
            "inertia_cap_s": 30.0,
            "disturbance_pu": 0.12,
        },
    )


def main() -> None:
    root = Path(__file__).resolve().parents[1] / "datasets" / "ninebus"
    save_system(build(), root, temporal_section={
        "mode": "representative",
        "steps_per_rp": N_STEPS,
        "assignments_file": "assignments.csv",
    })
    with open(root / "assignments.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["day", "rp"])
        day = 0
        for rp, n_days in enumerate(RP_DAYS, start=1):
            for _ in range(n_days):
                day += 1
                w.writerow([day, rp])
    print(f"wrote {root}")


if __name__ == "__main__":
    main()
