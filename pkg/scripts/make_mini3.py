"""Generate the shipped 3-bus mini dataset.

Small enough that every case kind solves in seconds, rich enough to carry
the whole workflow story: a clean-energy sweep, an inertia retrofit, and a
reactive-support retrofit.

Design intent, so the numbers are not mysterious:

* One cheap synchronous candidate (gas) wins at kappa=0.
* One large plain-wind unit is the cheapest clean plan, so the linear
  network case picks it at kappa=1 and ends up with zero inertia.
* Small virtual-inertia wind units are the patch: forced clean operation is
  infeasible without them, and adding them on top of the locked-in plain
  unit costs more than planning with inertia in mind from the start.
* Reactive demand is positive everywhere while no generator can produce
  reactive power, so the conic cases must build shunt compensators.
"""

from __future__ import annotations

import csv
from pathlib import Path

from gepkit.system import (
    Bus,
    DemandSeries,
    FactsDevice,
    Line,
    RenewableUnit,
    SystemData,
    ThermalUnit,
    save_system,
)


def series_admittance(r: float, x: float) -> tuple[float, float]:
    mag2 = r * r + x * x
    return r / mag2, -x / mag2


def build() -> SystemData:
    buses = [
        Bus(id="b1", is_slack=True),
        Bus(id="b2"),
        Bus(id="b3"),
    ]

    def line(a: str, b: str, r: float, x: float) -> Line:
        g, susc = series_admittance(r, x)
        return Line(
            from_bus=a, to_bus=b, circuit=1,
            conductance=g, susceptance=susc, charging=0.0,
            flow_limit=1.0, apparent_limit=1000.0, reactance=x,
        )

    # The two circuits reaching b3 are deliberately high-loss: exporting bulk
    # wind from b3 is free in the linearized network but expensive in the
    # conic one, which is what separates the investment plans of the two.
    lines = [
        line("b1", "b2", 0.005, 0.10),
        line("b2", "b3", 0.080, 0.15),
        line("b1", "b3", 0.080, 0.15),
    ]

    thermal = [
        ThermalUnit(
            id="gas", bus="b1", p_min=0.0, p_max=0.5, q_min=0.0, q_max=0.0,
            inertia=5.0, cost_startup=0.01, cost_commit=0.005, cost_var=0.03,
            cost_inv=12.0, ramp_up=1.0, ramp_down=1.0, existing=0, build_max=1,
        ),
    ]

    renewables = [
        RenewableUnit(
            id="wind", bus="b3", unit_size=0.5, inertia=0.0,
            cost_om=0.002, cost_inv=28.0, existing=0, build_max=2,
            profile_key="wind",
        ),
        RenewableUnit(
            id="windvi", bus="b2", unit_size=0.1, inertia=2.0,
            cost_om=0.003, cost_inv=30.0, existing=0, build_max=6,
            profile_key="wind",
        ),
    ]

    facts = [
        FactsDevice(id=f"svc{i}", bus=f"b{i}", q_min=-0.2, q_max=0.2,
                    cost_inv=0.002, build_max=2)
        for i in (1, 2, 3)
    ]

    demand = DemandSeries()
    active = {
        (1, 1, "b1"): 0.10, (1, 1, "b2"): 0.18, (1, 1, "b3"): 0.08,
        (1, 2, "b1"): 0.08, (1, 2, "b2"): 0.13, (1, 2, "b3"): 0.06,
    }
    reactive = {
        (1, 1, "b1"): 0.04, (1, 1, "b2"): 0.05, (1, 1, "b3"): 0.03,
        (1, 2, "b1"): 0.03, (1, 2, "b2"): 0.04, (1, 2, "b3"): 0.02,
    }
    demand.active.update(active)
    demand.reactive.update(reactive)

    profiles = {
        (1, 1, "wind"): 0.8,
        (1, 2, "wind"): 0.6,
    }

    return SystemData(
        buses=buses, lines=lines, thermal=thermal, renewables=renewables,
        storages=[], facts=facts, demand=demand, profiles=profiles,
        inflows={}, base_power=100.0, max_angle_diff=0.6,
        reserve_up=0.0, reserve_down=0.0,
        reserve_up_cost=0.0, reserve_down_cost=0.0,
        ens_cost=20.0, kappa_default=0.0,
        inertia_settings={
            "f_base_hz": 50.0,
            "rocof_limit_hz_s": 1.0,
            "inertia_cap_s": 30.0,
        },
        disturbances={(1, 1): 0.15, (1, 2): 0.15},
    )


N_DAYS = 100


def main() -> None:
    root = Path(__file__).resolve().parents[1] / "datasets" / "mini3"
    system = build()
    save_system(system, root, temporal_section={
        "mode": "representative",
        "steps_per_rp": 2,
        "assignments_file": "assignments.csv",
    })
    with open(root / "assignments.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["day", "rp"])
        w.writerows([day, 1] for day in range(1, N_DAYS + 1))
    print(f"wrote {root}")


if __name__ == "__main__":
    main()
