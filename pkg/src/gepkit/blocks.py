"""Constraint-block builders for the expansion-planning model.

Each builder adds one thematic block of variables and rows to a shared
:class:`~gepkit.model.ModelInstance`. Case assembly composes blocks, so every
family name here doubles as the census key used to verify which blocks a case
contains.

Power flows in GW, stored energy in GWh, money in million EUR. A step is one
``(rp, k)`` pair of the temporal structure; operating terms are weighted by
``weight(rp, k)`` in the objective and by the step weight in energy balances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .isf import system_isf
from .model import BINARY, EQ, GE, INTEGER, LE, LinearExpr, ModelInstance
from .system import StorageUnit, SystemData
from .temporal import TemporalStructure


@dataclass
class BuildContext:
    system: SystemData
    temporal: TemporalStructure
    kappa: float
    model: ModelInstance = field(default_factory=ModelInstance)

    def steps(self) -> list[tuple[int, int]]:
        return self.temporal.step_pairs()

    def weight(self, rp: int, k: int) -> float:
        return self.temporal.weight(rp, k)

    def invest_expr(self, unit) -> LinearExpr:
        """Installed unit count: the build variable plus existing units."""
        expr = LinearExpr(float(getattr(unit, "existing", 0)))
        expr.add(self.model.var("build", unit.id), 1.0)
        return expr

    def max_units(self, unit) -> int:
        return getattr(unit, "existing", 0) + unit.build_max


def soc_mode(unit: StorageUnit, temporal: TemporalStructure) -> str:
    """Storage balance layout: checkpoint-linked or cyclic within a period."""
    if temporal.chronological:
        return "intra"
    return "inter" if unit.is_hydro else "intra"


# -- general: investments and unserved demand --------------------------------


def build_general(ctx: BuildContext) -> None:
    m = ctx.model
    for unit in ctx.system.invest_units():
        m.add_var("build", (unit.id,), kind=INTEGER, upper=float(unit.build_max))
    for bus in ctx.system.buses:
        for rp, k in ctx.steps():
            m.add_var(
                "unserved",
                (bus.id, rp, k),
                upper=ctx.system.demand.p(rp, k, bus.id),
            )


# -- thermal commitment block -------------------------------------------------


def build_thermal(ctx: BuildContext) -> None:
    m, system = ctx.model, ctx.system
    for t in system.thermal:
        cap = float(ctx.max_units(t))
        for rp, k in ctx.steps():
            m.add_var("commit", (t.id, rp, k), kind=INTEGER, upper=cap)
            m.add_var("startup", (t.id, rp, k), kind=INTEGER, upper=cap)
            m.add_var("shutdown", (t.id, rp, k), kind=INTEGER, upper=cap)
            m.add_var("p_above", (t.id, rp, k))
            m.add_var("p_thermal", (t.id, rp, k))
            m.add_var("res_up_th", (t.id, rp, k))
            m.add_var("res_dn_th", (t.id, rp, k))

    for t in system.thermal:
        band = t.p_max - t.p_min
        for rp, k in ctx.steps():
            commit = m.var("commit", t.id, rp, k)
            startup = m.var("startup", t.id, rp, k)
            shutdown = m.var("shutdown", t.id, rp, k)
            above = m.var("p_above", t.id, rp, k)
            total = m.var("p_thermal", t.id, rp, k)
            res_up = m.var("res_up_th", t.id, rp, k)
            res_dn = m.var("res_dn_th", t.id, rp, k)
            k_prev = ctx.temporal.prev_cyclic(k)
            k_next = ctx.temporal.next_cyclic(k)

            # total output above the committed minimum
            m.add_row(
                "thermal_output_def",
                (t.id, rp, k),
                LinearExpr().add(total, 1.0).add(above, -1.0).add(commit, -t.p_min),
                EQ,
                0.0,
            )
            # headroom shrinks while units start up or are about to stop
            m.add_row(
                "thermal_above_start_cap",
                (t.id, rp, k),
                LinearExpr()
                .add(above, 1.0)
                .add(res_up, 1.0)
                .add(commit, -band)
                .add(startup, band),
                LE,
                0.0,
            )
            m.add_row(
                "thermal_above_stop_cap",
                (t.id, rp, k),
                LinearExpr()
                .add(above, 1.0)
                .add(res_up, 1.0)
                .add(commit, -band)
                .add(m.var("shutdown", t.id, rp, k_next), band),
                LE,
                0.0,
            )
            # downward reserve rides on output above minimum
            m.add_row(
                "thermal_res_dn_cap",
                (t.id, rp, k),
                LinearExpr().add(res_dn, 1.0).add(above, -1.0),
                LE,
                0.0,
            )
            # commitment continuity, cyclic within the period
            m.add_row(
                "commit_link",
                (t.id, rp, k),
                LinearExpr()
                .add(commit, 1.0)
                .add(m.var("commit", t.id, rp, k_prev), -1.0)
                .add(startup, -1.0)
                .add(shutdown, 1.0),
                EQ,
                0.0,
            )
            m.add_row(
                "commit_cap",
                (t.id, rp, k),
                LinearExpr().add(commit, 1.0).add_expr(ctx.invest_expr(t), -1.0),
                LE,
                0.0,
            )
            if t.ramp_up != float("inf"):
                m.add_row(
                    "ramp_up",
                    (t.id, rp, k),
                    LinearExpr()
                    .add(above, 1.0)
                    .add(res_up, 1.0)
                    .add(m.var("p_above", t.id, rp, k_prev), -1.0)
                    .add(commit, -t.ramp_up),
                    LE,
                    0.0,
                )
            if t.ramp_down != float("inf"):
                m.add_row(
                    "ramp_dn",
                    (t.id, rp, k),
                    LinearExpr()
                    .add(m.var("p_above", t.id, rp, k_prev), 1.0)
                    .add(above, -1.0)
                    .add(res_dn, 1.0)
                    .add(m.var("commit", t.id, rp, k_prev), -t.ramp_down),
                    LE,
                    0.0,
                )
            # capacity ceiling and committed floor against installed units
            ceiling = LinearExpr().add(total, 1.0).add(res_up, 1.0)
            ceiling.add_expr(ctx.invest_expr(t), -t.p_max)
            m.add_row("thermal_max_cap", (t.id, rp, k), ceiling, LE, 0.0)
            m.add_row(
                "thermal_min_floor",
                (t.id, rp, k),
                LinearExpr().add(total, 1.0).add(res_dn, -1.0).add(commit, -t.p_min),
                GE,
                0.0,
            )

    _build_reserve_requirements(ctx)


def _build_reserve_requirements(ctx: BuildContext) -> None:
    m, system = ctx.model, ctx.system
    if system.reserve_up <= 0 and system.reserve_down <= 0:
        return
    if not system.thermal and not system.storages:
        return
    for rp, k in ctx.steps():
        total_demand = sum(
            system.demand.p(rp, k, b.id) for b in system.buses
        )
        up = LinearExpr()
        dn = LinearExpr()
        for t in system.thermal:
            up.add(m.var("res_up_th", t.id, rp, k), 1.0)
            dn.add(m.var("res_dn_th", t.id, rp, k), 1.0)
        for s in system.storages:
            if m.has_var("res_up_st", s.id, rp, k):
                up.add(m.var("res_up_st", s.id, rp, k), 1.0)
                dn.add(m.var("res_dn_st", s.id, rp, k), 1.0)
        if system.reserve_up > 0:
            m.add_row(
                "reserve_req_up", (rp, k), up, GE, system.reserve_up * total_demand
            )
        if system.reserve_down > 0:
            m.add_row(
                "reserve_req_dn", (rp, k), dn, GE, system.reserve_down * total_demand
            )


# -- storage block -------------------------------------------------------------


def build_storage(ctx: BuildContext) -> None:
    m, system, temporal = ctx.model, ctx.system, ctx.temporal
    for s in system.storages:
        for rp, k in ctx.steps():
            m.add_var("p_storage", (s.id, rp, k))
            m.add_var("charge", (s.id, rp, k))
            m.add_var("res_up_st", (s.id, rp, k))
            m.add_var("res_dn_st", (s.id, rp, k))
            m.add_var("discharge_mode", (s.id, rp, k), kind=BINARY)
            if s.is_hydro:
                m.add_var("spill", (s.id, rp, k))
        if soc_mode(s, temporal) == "inter":
            for p in temporal.checkpoints():
                m.add_var("soc_inter", (s.id, p))
        else:
            for rp, k in ctx.steps():
                m.add_var("soc_intra", (s.id, rp, k))

    for s in system.storages:
        energy_cap = s.energy_cap_per_unit()
        big_m = s.unit_size * ctx.max_units(s)
        mode = soc_mode(s, temporal)

        if mode == "inter":
            checkpoints = temporal.checkpoints()
            for i, p in enumerate(checkpoints):
                expr = LinearExpr().add(m.var("soc_inter", s.id, p), 1.0)
                rhs = 0.0
                if i == 0:
                    rhs += s.initial_reserve
                else:
                    expr.add(m.var("soc_inter", s.id, checkpoints[i - 1]), -1.0)
                for rp, k in temporal.window_members(p):
                    expr.add_expr(_soc_step_expr(ctx, s, rp, k), -1.0)
                m.add_row("soc_inter_balance", (s.id, p), expr, EQ, rhs)

                level = LinearExpr().add(m.var("soc_inter", s.id, p), 1.0)
                floor = level.copy().add_expr(
                    ctx.invest_expr(s), -s.min_soc * energy_cap
                )
                m.add_row("soc_inter_min", (s.id, p), floor, GE, 0.0)
                ceil = level.copy().add_expr(ctx.invest_expr(s), -s.max_soc * energy_cap)
                m.add_row("soc_inter_max", (s.id, p), ceil, LE, 0.0)
            if checkpoints:
                m.add_row(
                    "soc_final_floor",
                    (s.id,),
                    LinearExpr().add(m.var("soc_inter", s.id, checkpoints[-1]), 1.0),
                    GE,
                    s.initial_reserve,
                )
        else:
            for rp, k in ctx.steps():
                k_prev = temporal.prev_cyclic(k)
                expr = (
                    LinearExpr()
                    .add(m.var("soc_intra", s.id, rp, k), 1.0)
                    .add(m.var("soc_intra", s.id, rp, k_prev), -1.0)
                )
                expr.add_expr(_soc_step_expr(ctx, s, rp, k), -1.0)
                m.add_row("soc_intra_balance", (s.id, rp, k), expr, EQ, 0.0)

                level = LinearExpr().add(m.var("soc_intra", s.id, rp, k), 1.0)
                floor = level.copy().add_expr(
                    ctx.invest_expr(s), -s.min_soc * energy_cap
                )
                m.add_row("soc_intra_min", (s.id, rp, k), floor, GE, 0.0)
                ceil = level.copy().add_expr(ctx.invest_expr(s), -s.max_soc * energy_cap)
                m.add_row("soc_intra_max", (s.id, rp, k), ceil, LE, 0.0)

                # reserve activation for one step must fit inside the band
                w = temporal.weight_k[k]
                res_floor = (
                    LinearExpr()
                    .add(m.var("soc_intra", s.id, rp, k), 1.0)
                    .add(m.var("res_up_st", s.id, rp, k), -w / s.eff_discharge)
                )
                res_floor.add_expr(ctx.invest_expr(s), -s.min_soc * energy_cap)
                m.add_row("soc_res_up_floor", (s.id, rp, k), res_floor, GE, 0.0)
                res_ceil = (
                    LinearExpr()
                    .add(m.var("soc_intra", s.id, rp, k), 1.0)
                    .add(m.var("res_dn_st", s.id, rp, k), w * s.eff_charge)
                )
                res_ceil.add_expr(ctx.invest_expr(s), -s.max_soc * energy_cap)
                m.add_row("soc_res_dn_ceiling", (s.id, rp, k), res_ceil, LE, 0.0)

        for rp, k in ctx.steps():
            p_out = m.var("p_storage", s.id, rp, k)
            p_in = m.var("charge", s.id, rp, k)
            res_up = m.var("res_up_st", s.id, rp, k)
            res_dn = m.var("res_dn_st", s.id, rp, k)
            gate = m.var("discharge_mode", s.id, rp, k)

            head = LinearExpr().add(p_out, 1.0).add(res_up, 1.0)
            head.add_expr(ctx.invest_expr(s), -s.unit_size)
            m.add_row("storage_headroom_up", (s.id, rp, k), head, LE, 0.0)
            m.add_row(
                "storage_res_dn_cap",
                (s.id, rp, k),
                LinearExpr().add(res_dn, 1.0).add(p_out, -1.0),
                LE,
                0.0,
            )
            # one binary keeps simultaneous charge and discharge out
            m.add_row(
                "discharge_gate",
                (s.id, rp, k),
                LinearExpr().add(p_out, 1.0).add(gate, -big_m),
                LE,
                0.0,
            )
            m.add_row(
                "charge_gate",
                (s.id, rp, k),
                LinearExpr().add(p_in, 1.0).add(gate, big_m),
                LE,
                big_m,
            )
            out_cap = LinearExpr().add(p_out, 1.0)
            out_cap.add_expr(ctx.invest_expr(s), -s.unit_size)
            m.add_row("p_storage_cap", (s.id, rp, k), out_cap, LE, 0.0)
            in_cap = LinearExpr().add(p_in, 1.0)
            in_cap.add_expr(ctx.invest_expr(s), -s.unit_size)
            m.add_row("charge_cap", (s.id, rp, k), in_cap, LE, 0.0)
            if s.is_hydro:
                sp_cap = LinearExpr().add(m.var("spill", s.id, rp, k), 1.0)
                sp_cap.add_expr(
                    ctx.invest_expr(s), -(1.0 - s.max_soc) * energy_cap
                )
                m.add_row("spill_cap", (s.id, rp, k), sp_cap, LE, 0.0)


def _soc_step_expr(ctx: BuildContext, s: StorageUnit, rp: int, k: int) -> LinearExpr:
    """Net stored-energy change over one step of unit ``s``."""
    m = ctx.model
    w = ctx.temporal.weight_k[k]
    expr = LinearExpr(ctx.system.inflow(rp, k, s.id) * w)
    expr.add(m.var("charge", s.id, rp, k), w * s.eff_charge)
    expr.add(m.var("p_storage", s.id, rp, k), -w / s.eff_discharge)
    if s.is_hydro:
        expr.add(m.var("spill", s.id, rp, k), -1.0)
    return expr


# -- renewables and the clean-energy policy -----------------------------------


def build_renewable_policy(ctx: BuildContext) -> None:
    m, system = ctx.model, ctx.system
    for r in system.renewables:
        for rp, k in ctx.steps():
            m.add_var("p_renew", (r.id, rp, k))
    for r in system.renewables:
        for rp, k in ctx.steps():
            factor = system.profile(rp, k, r.profile_key)
            cap = LinearExpr().add(m.var("p_renew", r.id, rp, k), 1.0)
            cap.add_expr(ctx.invest_expr(r), -r.unit_size * factor)
            m.add_row("renew_cap", (r.id, rp, k), cap, LE, 0.0)

    # thermal share of served energy may not exceed (1 - kappa)
    fossil = LinearExpr()
    weighted_demand = 0.0
    for rp, k in ctx.steps():
        w = ctx.weight(rp, k)
        for t in system.thermal:
            fossil.add(m.var("p_thermal", t.id, rp, k), w)
        weighted_demand += w * sum(
            system.demand.p(rp, k, b.id) for b in system.buses
        )
    m.add_row(
        "fossil_energy_cap", (), fossil, LE, (1.0 - ctx.kappa) * weighted_demand
    )


# -- linearized network ---------------------------------------------------------


def bus_injection_expr(ctx: BuildContext, bus_id: str, rp: int, k: int) -> LinearExpr:
    """Net active injection at a bus: generation minus charging plus unserved,
    minus demand as the expression constant."""
    m, system = ctx.model, ctx.system
    expr = LinearExpr(-system.demand.p(rp, k, bus_id))
    for t in system.thermal:
        if t.bus == bus_id:
            expr.add(m.var("p_thermal", t.id, rp, k), 1.0)
    for r in system.renewables:
        if r.bus == bus_id:
            expr.add(m.var("p_renew", r.id, rp, k), 1.0)
    for s in system.storages:
        if s.bus == bus_id:
            expr.add(m.var("p_storage", s.id, rp, k), 1.0)
            expr.add(m.var("charge", s.id, rp, k), -1.0)
    expr.add(m.var("unserved", bus_id, rp, k), 1.0)
    return expr


def build_dc_network(ctx: BuildContext) -> None:
    m, system = ctx.model, ctx.system
    isf = system_isf(system)
    for line in system.lines:
        for rp, k in ctx.steps():
            m.add_var(
                "flow",
                (line.from_bus, line.to_bus, line.circuit, rp, k),
                lower=-line.flow_limit,
                upper=line.flow_limit,
            )

    for rp, k in ctx.steps():
        injections = {
            bus.id: bus_injection_expr(ctx, bus.id, rp, k) for bus in system.buses
        }
        for bus in system.buses:
            balance = injections[bus.id].copy()
            for line in system.lines:
                f = m.var("flow", line.from_bus, line.to_bus, line.circuit, rp, k)
                if line.to_bus == bus.id:
                    balance.add(f, 1.0)
                elif line.from_bus == bus.id:
                    balance.add(f, -1.0)
            m.add_row("power_balance", (bus.id, rp, k), balance, EQ, 0.0)

        for e, line in enumerate(system.lines):
            expr = LinearExpr().add(
                m.var("flow", line.from_bus, line.to_bus, line.circuit, rp, k), 1.0
            )
            for b_pos, bus_id in enumerate(isf.bus_ids):
                coef = isf.values[e, b_pos]
                if coef != 0.0:
                    expr.add_expr(injections[bus_id], -coef)
            m.add_row(
                "flow_def",
                (line.from_bus, line.to_bus, line.circuit, rp, k),
                expr,
                EQ,
                0.0,
            )


# -- objective -------------------------------------------------------------------


def build_objective(ctx: BuildContext) -> None:
    m, system = ctx.model, ctx.system
    obj = LinearExpr()
    for unit in system.generation_units():
        size = unit.p_max if hasattr(unit, "p_max") else unit.unit_size
        obj.add(m.var("build", unit.id), unit.cost_inv * size)
    for f in system.facts:
        obj.add(m.var("build", f.id), f.cost_inv)

    for rp, k in ctx.steps():
        w = ctx.weight(rp, k)
        for t in system.thermal:
            obj.add(m.var("startup", t.id, rp, k), w * t.cost_startup)
            obj.add(m.var("commit", t.id, rp, k), w * t.cost_commit)
            obj.add(m.var("p_thermal", t.id, rp, k), w * t.cost_var)
            obj.add(
                m.var("res_up_th", t.id, rp, k),
                w * t.cost_var * system.reserve_up_cost,
            )
            obj.add(
                m.var("res_dn_th", t.id, rp, k),
                w * t.cost_var * system.reserve_down_cost,
            )
        for r in system.renewables:
            obj.add(m.var("p_renew", r.id, rp, k), w * r.cost_om)
        for s in system.storages:
            obj.add(m.var("p_storage", s.id, rp, k), w * s.cost_om)
            obj.add(
                m.var("res_up_st", s.id, rp, k),
                w * s.cost_om * system.reserve_up_cost,
            )
            obj.add(
                m.var("res_dn_st", s.id, rp, k),
                w * s.cost_om * system.reserve_down_cost,
            )
        for bus in system.buses:
            obj.add(m.var("unserved", bus.id, rp, k), w * system.ens_cost)
    m.set_objective(obj)
