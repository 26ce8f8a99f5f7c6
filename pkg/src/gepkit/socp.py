"""Conic network block: a second-order cone relaxation of AC power flow.

Replaces the linearized network block when reactive power and voltage levels
matter. Per step and bus the block carries the squared voltage magnitude; per
undirected bus pair it carries the two voltage-product variables (cosine and
sine channels) tied together by a rotated cone; per line it carries all four
directed flow variables (active and reactive, both directions), so losses are
explicit and opposite flows need not cancel.

Conventions: line conductance/susceptance are the series values in per unit,
susceptance signed (negative for inductive lines); the sine-channel variable
of a pair ``(a, b)`` with ``a < b`` follows the angle difference
``theta_b - theta_a``. Bus pairs are canonicalized that way regardless of how
a line row is oriented, so parallel circuits written in either direction
share one voltage-product pair. Flows are in GW / GVar; per-unit quantities
scale by the system base power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .blocks import BuildContext, bus_injection_expr
from .isf import NetworkError, check_connected
from .model import EQ, GE, LE, LinearExpr, canonical_name
from .system import SystemData
from .temporal import TemporalStructure


def conic_pairs(system: SystemData) -> list[tuple[str, str]]:
    """Undirected bus pairs carrying at least one line, each in (low, high) order."""
    seen: list[tuple[str, str]] = []
    for line in system.lines:
        pair = tuple(sorted((line.from_bus, line.to_bus)))
        if pair not in seen:
            seen.append(pair)
    return seen


def _pair_and_sign(line) -> tuple[tuple[str, str], float]:
    """Canonical pair of a line and the sine-channel sign of its orientation."""
    if line.from_bus < line.to_bus:
        return (line.from_bus, line.to_bus), 1.0
    return (line.to_bus, line.from_bus), -1.0


def build_socp(ctx: BuildContext, apparent_cone: bool = False) -> None:
    """Add the conic power-flow block.

    ``apparent_cone`` additionally caps each directed flow's apparent power
    by the line's MVA rating through a circular cone; the default keeps the
    plain per-channel boxes only. Rows are independent across steps.
    """
    m = ctx.model
    system = ctx.system
    if m.family_vars("flow"):
        raise NetworkError(
            "model already has a linearized network block; the conic block "
            "replaces it rather than adding to it"
        )
    check_connected(system.buses, system.lines)
    if system.max_angle_diff >= math.pi / 2:
        raise NetworkError(
            f"max angle difference {system.max_angle_diff} rad must stay "
            "below pi/2 for the angle box"
        )
    tan_cap = math.tan(system.max_angle_diff)
    sb = system.base_power / 1000.0  # per-unit power to GW
    pairs = conic_pairs(system)
    bus = {b.id: b for b in system.buses}

    units_at: dict[str, dict[str, list]] = {
        "q_thermal": {},
        "q_renew": {},
        "q_storage": {},
        "q_facts": {},
    }
    for family, units in (
        ("q_thermal", system.thermal),
        ("q_renew", system.renewables),
        ("q_storage", system.storages),
        ("q_facts", system.facts),
    ):
        for u in units:
            units_at[family].setdefault(u.bus, []).append(u)

    for rp, k in ctx.steps():
        for b in system.buses:
            m.add_var("cii", (b.id, rp, k), lower=b.v_min**2, upper=b.v_max**2)
        for a, c in pairs:
            lead = bus[a]
            m.add_var("cij", (a, c, rp, k), lower=lead.v_min**2, upper=lead.v_max**2)
            m.add_var("sij", (a, c, rp, k), lower=-lead.v_max**2, upper=lead.v_max**2)
        for line in system.lines:
            cap_q = line.apparent_limit / 1000.0  # MVA rating as GVar box
            for tail, head in ((line.from_bus, line.to_bus), (line.to_bus, line.from_bus)):
                key = (tail, head, line.circuit, rp, k)
                m.add_var("fp", key, lower=-line.flow_limit, upper=line.flow_limit)
                m.add_var("fq", key, lower=-cap_q, upper=cap_q)

        for family, sized in (("q_thermal", system.thermal),
                              ("q_renew", system.renewables),
                              ("q_storage", system.storages),
                              ("q_facts", system.facts)):
            for u in sized:
                top = ctx.max_units(u)
                m.add_var(
                    family,
                    (u.id, rp, k),
                    lower=min(0.0, u.q_min * top),
                    upper=max(0.0, u.q_max * top),
                )

        # Voltage-product cone and angle box per bus pair.
        for a, c in pairs:
            cij = m.var("cij", a, c, rp, k)
            sij = m.var("sij", a, c, rp, k)
            cii_a = m.var("cii", a, rp, k)
            cii_c = m.var("cii", c, rp, k)
            m.add_quad_row(
                "voltage_cone",
                (a, c, rp, k),
                [(cij, cij, 1.0), (sij, sij, 1.0), (cii_a, cii_c, -1.0)],
                LinearExpr(),
                LE,
                0.0,
            )
            hi = LinearExpr().add(sij, 1.0).add(cij, -tan_cap)
            m.add_row("angle_box_hi", (a, c, rp, k), hi, LE, 0.0)
            lo = LinearExpr().add(sij, 1.0).add(cij, tan_cap)
            m.add_row("angle_box_lo", (a, c, rp, k), lo, GE, 0.0)

        # Directed flow definitions from the shared voltage products.
        for line in system.lines:
            (a, c), sign = _pair_and_sign(line)
            cij = m.var("cij", a, c, rp, k)
            sij = m.var("sij", a, c, rp, k)
            g, b_ser, b_ch = line.conductance, line.susceptance, line.charging
            for tail, head, s_dir in (
                (line.from_bus, line.to_bus, sign),
                (line.to_bus, line.from_bus, -sign),
            ):
                key = (tail, head, line.circuit, rp, k)
                cii_tail = m.var("cii", tail, rp, k)
                fp_def = LinearExpr().add(m.var("fp", *key), 1.0)
                fp_def.add(cii_tail, -sb * g)
                fp_def.add(cij, sb * g)
                fp_def.add(sij, -sb * s_dir * b_ser)
                m.add_row("fp_def", key, fp_def, EQ, 0.0)
                fq_def = LinearExpr().add(m.var("fq", *key), 1.0)
                fq_def.add(cii_tail, sb * (b_ser + b_ch / 2.0))
                fq_def.add(sij, -sb * s_dir * g)
                fq_def.add(cij, -sb * b_ser)
                m.add_row("fq_def", key, fq_def, EQ, 0.0)
                if apparent_cone and math.isfinite(line.apparent_limit):
                    rating = line.apparent_limit / 1000.0
                    m.add_quad_row(
                        "apparent_cap",
                        key,
                        [(m.var("fp", *key), m.var("fp", *key), 1.0),
                         (m.var("fq", *key), m.var("fq", *key), 1.0)],
                        LinearExpr(),
                        LE,
                        rating**2,
                    )

        # Reactive capability tied to commitment or installed count.
        for t in system.thermal:
            if t.q_min == 0.0 and t.q_max == 0.0:
                continue
            q = m.var("q_thermal", t.id, rp, k)
            u = m.var("commit", t.id, rp, k)
            m.add_row("q_thermal_cap_hi", (t.id, rp, k),
                      LinearExpr().add(q, 1.0).add(u, -t.q_max), LE, 0.0)
            m.add_row("q_thermal_cap_lo", (t.id, rp, k),
                      LinearExpr().add(q, 1.0).add(u, -t.q_min), GE, 0.0)
        for family, sized in (("q_renew", system.renewables),
                              ("q_storage", system.storages)):
            for u in sized:
                if u.q_min == 0.0 and u.q_max == 0.0:
                    continue
                q = m.var(family, u.id, rp, k)
                hi = LinearExpr().add(q, 1.0)
                hi.add_expr(ctx.invest_expr(u), -u.q_max)
                m.add_row(f"{family}_cap_hi", (u.id, rp, k), hi, LE, 0.0)
                lo = LinearExpr().add(q, 1.0)
                lo.add_expr(ctx.invest_expr(u), -u.q_min)
                m.add_row(f"{family}_cap_lo", (u.id, rp, k), lo, GE, 0.0)
        for f in system.facts:
            q = m.var("q_facts", f.id, rp, k)
            x = m.var("build", f.id)
            m.add_row("q_facts_cap_hi", (f.id, rp, k),
                      LinearExpr().add(q, 1.0).add(x, -f.q_max), LE, 0.0)
            m.add_row("q_facts_cap_lo", (f.id, rp, k),
                      LinearExpr().add(q, 1.0).add(x, -f.q_min), GE, 0.0)

        # Nodal balances. Active power sees the shunt conductance drain;
        # reactive power sees shunt support and a credit for unserved demand.
        for b in system.buses:
            p_bal = bus_injection_expr(ctx, b.id, rp, k)
            p_bal.add(m.var("cii", b.id, rp, k), -sb * b.shunt_conductance)
            q_bal = LinearExpr(-system.demand.q(rp, k, b.id))
            q_bal.add(m.var("cii", b.id, rp, k), sb * b.shunt_susceptance)
            if b.reactive_ratio:
                q_bal.add(m.var("unserved", b.id, rp, k), b.reactive_ratio)
            for family in ("q_thermal", "q_renew", "q_storage", "q_facts"):
                for u in units_at[family].get(b.id, ()):
                    q_bal.add(m.var(family, u.id, rp, k), 1.0)
            for line in system.lines:
                for tail, head in ((line.from_bus, line.to_bus),
                                   (line.to_bus, line.from_bus)):
                    if tail != b.id:
                        continue
                    key = (tail, head, line.circuit, rp, k)
                    p_bal.add(m.var("fp", *key), -1.0)
                    q_bal.add(m.var("fq", *key), -1.0)
            m.add_row("ac_balance_p", (b.id, rp, k), p_bal, EQ, 0.0)
            m.add_row("ac_balance_q", (b.id, rp, k), q_bal, EQ, 0.0)


# -- diagnostics ---------------------------------------------------------------


@dataclass(frozen=True)
class ConeGap:
    rp: int
    k: int
    from_bus: str
    to_bus: str
    residual: float  # cii_i*cii_j - cij^2 - sij^2; negative means violated


def cone_residual(
    solution, system: SystemData, temporal: TemporalStructure
) -> list[ConeGap]:
    """Per-step slack of every voltage-product cone; zero means tight."""
    values = dict(solution) if isinstance(solution, Mapping) else solution.values

    def val(family: str, *key) -> float:
        return values[canonical_name(family, tuple(key))]

    out = []
    for rp, k in temporal.step_pairs():
        for a, c in conic_pairs(system):
            gap = (
                val("cii", a, rp, k) * val("cii", c, rp, k)
                - val("cij", a, c, rp, k) ** 2
                - val("sij", a, c, rp, k) ** 2
            )
            out.append(ConeGap(rp=rp, k=k, from_bus=a, to_bus=c, residual=gap))
    return out


def format_cone_report(gaps: list[ConeGap]) -> str:
    lines = ["rp,k,from_bus,to_bus,residual"]
    for g in gaps:
        lines.append(f"{g.rp},{g.k},{g.from_bus},{g.to_bus},{g.residual!r}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class VoltageRecovery:
    magnitudes: dict  # (rp, k, bus) -> |V| in p.u.
    angles: dict  # (rp, k, bus) -> theta in rad, slack pinned at zero
    angle_diffs: dict  # (rp, k, a, b) -> theta_b - theta_a per conic pair
    cycle_error: float  # worst loop-closure mismatch across all steps, rad


def recover_voltages(
    solution,
    system: SystemData,
    temporal: TemporalStructure,
    tol: float = 1e-6,
) -> VoltageRecovery:
    """Read voltage magnitudes and angles back out of the conic variables.

    Angles come from a spanning tree rooted at the slack bus; every off-tree
    pair then checks loop closure, so ``cycle_error`` stays near zero exactly
    when the cone solution is consistent with a single voltage phasor set
    (radial grids trivially give zero).
    """
    values = dict(solution) if isinstance(solution, Mapping) else solution.values

    def val(family: str, *key) -> float:
        return values[canonical_name(family, tuple(key))]

    pairs = conic_pairs(system)
    neighbors: dict[str, list[tuple[str, tuple[str, str]]]] = {}
    for a, c in pairs:
        neighbors.setdefault(a, []).append((c, (a, c)))
        neighbors.setdefault(c, []).append((a, (a, c)))

    magnitudes: dict = {}
    angles: dict = {}
    diffs: dict = {}
    worst = 0.0
    slack = system.slack_bus
    for rp, k in temporal.step_pairs():
        for b in system.buses:
            cii = val("cii", b.id, rp, k)
            if cii < -tol:
                raise NetworkError(
                    f"squared voltage at {b.id} is {cii} at rp={rp}, k={k}"
                )
            magnitudes[(rp, k, b.id)] = math.sqrt(max(cii, 0.0))
        step_diff: dict[tuple[str, str], float] = {}
        for a, c in pairs:
            d = math.atan2(val("sij", a, c, rp, k), val("cij", a, c, rp, k))
            step_diff[(a, c)] = d
            diffs[(rp, k, a, c)] = d

        theta = {slack: 0.0}
        tree_pairs = set()
        queue = [slack]
        while queue:
            here = queue.pop()
            for there, pair in neighbors.get(here, ()):
                if there in theta:
                    continue
                step = step_diff[pair]
                theta[there] = theta[here] + (step if here == pair[0] else -step)
                tree_pairs.add(pair)
                queue.append(there)
        missing = [b.id for b in system.buses if b.id not in theta]
        if missing:
            raise NetworkError(f"buses unreachable from the slack: {missing}")
        for pair, d in step_diff.items():
            if pair in tree_pairs:
                continue
            worst = max(worst, abs(theta[pair[1]] - theta[pair[0]] - d))
        for b in system.buses:
            angles[(rp, k, b.id)] = theta[b.id]

    return VoltageRecovery(
        magnitudes=magnitudes, angles=angles, angle_diffs=diffs, cycle_error=worst
    )


def format_voltage_report(recovery: VoltageRecovery) -> str:
    lines = ["rp,k,bus,vmag_pu"]
    for (rp, k, b), v in sorted(recovery.magnitudes.items()):
        lines.append(f"{rp},{k},{b},{v!r}")
    return "\n".join(lines) + "\n"
