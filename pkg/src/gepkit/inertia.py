"""Frequency-security block: system inertia tied to commitment and investment.

The block gives every step a system inertia level computed as a capacity-
weighted average over two pools: synchronous inertia from committed thermal
units and converter-based ("virtual") inertia from inertia-capable renewable
or storage units. A rate-of-change-of-frequency requirement then puts a floor
on that average for any step with a nonzero sizing disturbance.

All ratio definitions are cleared of denominators, and every resulting
bilinear term pairs a continuous variable with a 0/1 variable (commitment
states, or bits of a binary-expanded unit count), so the mixed-integer
linearization is exact: at any feasible integer point each auxiliary variable
equals the product it stands for. Products of two continuous quantities never
arise.

Seconds everywhere for inertia constants, GW for capacities, per-unit for the
sizing disturbance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .blocks import BuildContext
from .model import (
    BINARY,
    EQ,
    GE,
    LE,
    LinearExpr,
    ModelInstance,
    VariableHandle,
    canonical_name,
)
from .system import RenewableUnit, SystemData
from .temporal import TemporalStructure


class InertiaError(ValueError):
    """Raised for invalid inertia configuration or unbuildable block input."""


_NUMERATOR_MODES = ("own_output", "thermal_sum")


@dataclass(frozen=True)
class InertiaConfig:
    """Frequency-security settings.

    ``disturbance`` is the fallback sizing power loss (per unit) for steps
    without an entry in the dataset's per-step disturbance table. The default
    of zero keeps the requirement inert until a dataset opts in.

    ``vi_gain_numerator`` selects what drives a converter unit's inertia
    gain: its own power output (``own_output``, the default) or the total
    thermal output of the step (``thermal_sum``). The alternative ties every
    virtual gain to aggregate thermal production and can make steps with
    thermal output but no available virtual capacity infeasible, which is why
    it is not the default.
    """

    f_base: float = 50.0  # Hz
    rocof_limit: float = 1.0  # Hz/s
    inertia_cap: float = 30.0  # s
    disturbance: float = 0.0  # per-unit power
    vi_gain_numerator: str = "own_output"

    def __post_init__(self) -> None:
        if not self.f_base > 0:
            raise InertiaError(f"f_base must be positive, got {self.f_base}")
        if not self.rocof_limit > 0:
            raise InertiaError(f"rocof_limit must be positive, got {self.rocof_limit}")
        if not self.inertia_cap > 0:
            raise InertiaError(f"inertia_cap must be positive, got {self.inertia_cap}")
        if self.disturbance < 0:
            raise InertiaError(f"disturbance must be nonnegative, got {self.disturbance}")
        if self.vi_gain_numerator not in _NUMERATOR_MODES:
            raise InertiaError(
                f"vi_gain_numerator must be one of {_NUMERATOR_MODES}, "
                f"got {self.vi_gain_numerator!r}"
            )

    def required_inertia(self, disturbance: float) -> float:
        """Average inertia (s) needed to ride through a given power loss."""
        return disturbance * self.f_base / self.rocof_limit

    @classmethod
    def from_settings(cls, settings: Mapping) -> "InertiaConfig":
        """Build from the scalar-file ``[inertia]`` table; unknown keys error."""
        known = {
            "f_base_hz": "f_base",
            "rocof_limit_hz_s": "rocof_limit",
            "inertia_cap_s": "inertia_cap",
            "disturbance_pu": "disturbance",
            "vi_gain_numerator": "vi_gain_numerator",
        }
        kwargs = {}
        for key, value in settings.items():
            if key not in known:
                raise InertiaError(f"unknown inertia setting {key!r}")
            kwargs[known[key]] = value if key == "vi_gain_numerator" else float(value)
        return cls(**kwargs)

    @classmethod
    def from_system(cls, system: SystemData) -> "InertiaConfig":
        return cls.from_settings(system.inertia_settings)


# -- exact product linearization ----------------------------------------------


def linearize_binary_product(
    model: ModelInstance,
    family: str,
    key: tuple,
    cont: VariableHandle,
    switch: VariableHandle,
    upper: float | None = None,
) -> VariableHandle:
    """Add ``aux = cont * switch`` for a 0/1 ``switch``, exactly.

    Three rows pin the auxiliary at every integer point: ``aux <= U*switch``
    (off forces zero), ``aux <= cont``, and ``cont - aux <= U*(1 - switch)``
    (on forces equality). ``U`` defaults to the continuous variable's upper
    bound and must be finite.
    """
    if upper is None:
        upper = cont.upper
    if not math.isfinite(upper) or upper < 0:
        raise InertiaError(
            f"cannot linearize product over {cont.name}: needs a finite "
            f"nonnegative upper bound, got {upper}"
        )
    if cont.lower < 0:
        raise InertiaError(
            f"cannot linearize product over {cont.name}: variable may go "
            f"negative (lower bound {cont.lower})"
        )
    if not switch.is_integral() or switch.lower < 0 or switch.upper > 1:
        raise InertiaError(
            f"product partner {switch.name} must be a 0/1 variable"
        )
    aux = model.add_var(family, key, upper=upper)
    gate = LinearExpr().add(aux, 1.0).add(switch, -upper)
    model.add_row(f"{family}_gate", key, gate, LE, 0.0)
    below = LinearExpr().add(aux, 1.0).add(cont, -1.0)
    model.add_row(f"{family}_below", key, below, LE, 0.0)
    tight = LinearExpr().add(cont, 1.0).add(aux, -1.0).add(switch, upper)
    model.add_row(f"{family}_tight", key, tight, LE, upper)
    return aux


def binary_expand_integer(
    model: ModelInstance, var: VariableHandle
) -> list[VariableHandle]:
    """Write an integer variable as a weighted sum of fresh binary bits.

    Adds ``ceil(log2(upper + 1))`` bits named ``<family>_bit`` and one
    linking equality ``var = sum_b 2^b bit_b``. The variable keeps its own
    upper bound, so bit patterns above it stay infeasible.
    """
    if not var.is_integral():
        raise InertiaError(f"{var.name} is not an integer variable")
    if var.lower != 0:
        raise InertiaError(f"{var.name} must have lower bound 0 to bit-expand")
    if not math.isfinite(var.upper) or var.upper < 1:
        raise InertiaError(
            f"{var.name} needs a finite upper bound of at least 1 to bit-expand"
        )
    cap = int(round(var.upper))
    bits = [
        model.add_var(f"{var.family}_bit", var.key + (b,), kind=BINARY)
        for b in range(cap.bit_length())
    ]
    link = LinearExpr().add(var, 1.0)
    for b, bit in enumerate(bits):
        link.add(bit, -float(2**b))
    model.add_row(f"{var.family}_bits", var.key, link, EQ, 0.0)
    return bits


# -- block builder -------------------------------------------------------------


def _vi_capacity(unit) -> float:
    return unit.unit_size


def build_inertia(ctx: BuildContext, config: InertiaConfig | None = None) -> None:
    """Add inertia shares, pooled inertia levels, and the frequency floor.

    Per step: one share variable per thermal unit and per inertia-capable
    converter unit, pooled synchronous / virtual / average inertia levels,
    and the auxiliary products that make every cleared ratio definition
    linear. Rows are independent across steps, so builds could run per step
    in parallel; this builder just loops.
    """
    if config is None:
        config = InertiaConfig.from_system(ctx.system)
    m = ctx.model
    system = ctx.system
    thermal = system.thermal
    vi = system.vi_units()
    cap = config.inertia_cap

    for t in thermal:
        if ctx.max_units(t) > 1:
            raise InertiaError(
                f"thermal unit {t.id} can reach {ctx.max_units(t)} units; the "
                "inertia block needs single-unit thermal rows (commitment as a "
                "0/1 state). Split the row into identical single-unit entries."
            )

    # Bits of each converter unit's build count; empty when nothing can be built.
    bits: dict[str, list[VariableHandle]] = {}
    for v in vi:
        build = m.var("build", v.id)
        bits[v.id] = binary_expand_integer(m, build) if v.build_max >= 1 else []

    for rp, k in ctx.steps():
        for t in thermal:
            m.add_var("sync_share", (t.id, rp, k), upper=1.0)
        for v in vi:
            m.add_var("vi_share", (v.id, rp, k), upper=1.0)
        sync_level = m.add_var("sync_inertia", (rp, k), upper=cap)
        vi_level = m.add_var("vi_inertia", (rp, k), upper=cap)
        avg_level = m.add_var("avg_inertia", (rp, k), upper=cap)

        commit = {t.id: m.var("commit", t.id, rp, k) for t in thermal}
        avail = {v.id: system.availability(rp, k, v) for v in vi}

        # share_commit[t, tt] = sync_share[t] * commit[tt]
        share_commit: dict[tuple[str, str], VariableHandle] = {}
        for t in thermal:
            share = m.var("sync_share", t.id, rp, k)
            for tt in thermal:
                share_commit[(t.id, tt.id)] = linearize_binary_product(
                    m, "sync_share_commit", (t.id, tt.id, rp, k), share, commit[tt.id]
                )

        # share_bit[v, vv, b] = vi_share[v] * bit_b(build[vv])
        share_bit: dict[tuple[str, str, int], VariableHandle] = {}
        for v in vi:
            share = m.var("vi_share", v.id, rp, k)
            for vv in vi:
                for b, bit in enumerate(bits[vv.id]):
                    share_bit[(v.id, vv.id, b)] = linearize_binary_product(
                        m, "vi_share_bit", (v.id, vv.id, b, rp, k), share, bit
                    )

        # Products of pooled levels with each 0/1 state, for the cleared average.
        level_commit = {
            tt.id: linearize_binary_product(
                m, "inertia_commit", (tt.id, rp, k), avg_level, commit[tt.id]
            )
            for tt in thermal
        }
        sync_commit = {
            tt.id: linearize_binary_product(
                m, "sync_inertia_commit", (tt.id, rp, k), sync_level, commit[tt.id]
            )
            for tt in thermal
        }
        level_bit: dict[tuple[str, int], VariableHandle] = {}
        vi_level_bit: dict[tuple[str, int], VariableHandle] = {}
        for vv in vi:
            for b, bit in enumerate(bits[vv.id]):
                level_bit[(vv.id, b)] = linearize_binary_product(
                    m, "inertia_bit", (vv.id, b, rp, k), avg_level, bit
                )
                vi_level_bit[(vv.id, b)] = linearize_binary_product(
                    m, "vi_inertia_bit", (vv.id, b, rp, k), vi_level, bit
                )

        # Cleared share definition: share[t] * (sum_tt cap_tt u_tt) = cap_t u_t.
        for t in thermal:
            expr = LinearExpr()
            for tt in thermal:
                expr.add(share_commit[(t.id, tt.id)], tt.p_max)
            expr.add(commit[t.id], -t.p_max)
            m.add_row("sync_share_def", (t.id, rp, k), expr, EQ, 0.0)
            # Off units hold no share, including when nothing is committed.
            off = LinearExpr().add(m.var("sync_share", t.id, rp, k), 1.0)
            off.add(commit[t.id], -1.0)
            m.add_row("sync_share_off", (t.id, rp, k), off, LE, 0.0)

        # Cleared converter share definition over available virtual capacity.
        for v in vi:
            share = m.var("vi_share", v.id, rp, k)
            expr = LinearExpr()
            for vv in vi:
                weight = _vi_capacity(vv) * avail[vv.id]
                if weight == 0.0:
                    continue
                for b in range(len(bits[vv.id])):
                    expr.add(share_bit[(v.id, vv.id, b)], weight * 2**b)
                if vv.existing:
                    expr.add(share, weight * vv.existing)
            if config.vi_gain_numerator == "own_output":
                out_family = "p_renew" if isinstance(v, RenewableUnit) else "p_storage"
                expr.add(m.var(out_family, v.id, rp, k), -1.0)
            else:
                for t in thermal:
                    expr.add(m.var("p_thermal", t.id, rp, k), -1.0)
            m.add_row("vi_share_def", (v.id, rp, k), expr, EQ, 0.0)

            # No available virtual capacity at this step forces a zero share.
            gate = LinearExpr().add(share, 1.0)
            rhs = 0.0
            for vv in vi:
                if avail[vv.id] > 0.0:
                    gate.add(m.var("build", vv.id), -1.0)
                    rhs += vv.existing
            m.add_row("vi_share_avail", (v.id, rp, k), gate, LE, rhs)

        # Pooled synchronous inertia: twice the share-weighted constants.
        sync_def = LinearExpr().add(sync_level, 1.0)
        for t in thermal:
            sync_def.add(m.var("sync_share", t.id, rp, k), -2.0 * t.inertia)
        m.add_row("sync_inertia_def", (rp, k), sync_def, EQ, 0.0)

        # Pooled virtual inertia counts newly built units through their bits.
        vi_def = LinearExpr().add(vi_level, 1.0)
        for v in vi:
            for b in range(len(bits[v.id])):
                vi_def.add(share_bit[(v.id, v.id, b)], -2.0 * v.inertia * 2**b)
        m.add_row("vi_inertia_def", (rp, k), vi_def, EQ, 0.0)

        # Cleared capacity-weighted average of the two pools.
        avg_def = LinearExpr()
        for tt in thermal:
            avg_def.add(level_commit[tt.id], tt.p_max)
            avg_def.add(sync_commit[tt.id], -tt.p_max)
        for vv in vi:
            weight = _vi_capacity(vv) * avail[vv.id]
            if weight == 0.0:
                continue
            for b in range(len(bits[vv.id])):
                avg_def.add(level_bit[(vv.id, b)], weight * 2**b)
                avg_def.add(vi_level_bit[(vv.id, b)], -weight * 2**b)
            if vv.existing:
                avg_def.add(avg_level, weight * vv.existing)
                avg_def.add(vi_level, -weight * vv.existing)
        m.add_row("avg_inertia_def", (rp, k), avg_def, EQ, 0.0)

        # Zero average when nothing contributes; otherwise capped by the pools.
        gate = LinearExpr().add(avg_level, 1.0)
        rhs = 0.0
        for tt in thermal:
            gate.add(commit[tt.id], -cap)
        for vv in vi:
            if avail[vv.id] > 0.0:
                gate.add(m.var("build", vv.id), -cap)
                rhs += cap * vv.existing
        m.add_row("inertia_avail", (rp, k), gate, LE, rhs)

        # Frequency floor: enough average inertia to contain the sizing loss.
        need = LinearExpr().add(avg_level, config.rocof_limit / config.f_base)
        loss = system.disturbance(rp, k, config.disturbance)
        m.add_row("rocof_req", (rp, k), need, GE, loss)


# -- nonlinear re-evaluation ----------------------------------------------------


@dataclass(frozen=True)
class InertiaRecord:
    rp: int
    k: int
    sync_inertia: float  # s
    vi_inertia: float  # s
    avg_inertia: float  # s
    disturbance: float  # per-unit power
    rocof_ok: bool


def evaluate_inertia(
    solution,
    system: SystemData,
    temporal: TemporalStructure,
    config: InertiaConfig | None = None,
) -> list[InertiaRecord]:
    """Recompute per-step inertia from the original ratio definitions.

    Works straight off solution values (no model needed), applying the
    zero-when-empty convention to every denominator. Serves as the
    independent check on the linearized block: on a feasible point its
    numbers must match the model's inertia variables. Pure function, safe to
    call from multiple threads.
    """
    if config is None:
        config = InertiaConfig.from_system(system)
    values = dict(solution) if isinstance(solution, Mapping) else solution.values

    def val(family: str, *key) -> float:
        return values.get(canonical_name(family, tuple(key)), 0.0)

    vi = system.vi_units()
    records = []
    for rp, k in temporal.step_pairs():
        committed = {t.id: round(val("commit", t.id, rp, k)) for t in system.thermal}
        sync_weight = sum(t.p_max * committed[t.id] for t in system.thermal)
        sync = 0.0
        if sync_weight > 0:
            for t in system.thermal:
                gain = t.p_max * committed[t.id] / sync_weight
                sync += 2.0 * t.inertia * gain

        built = {v.id: round(val("build", v.id)) for v in vi}
        vi_weight = sum(
            _vi_capacity(v) * system.availability(rp, k, v) * (built[v.id] + v.existing)
            for v in vi
        )
        virtual = 0.0
        if vi_weight > 0:
            if config.vi_gain_numerator == "thermal_sum":
                total_thermal = sum(
                    val("p_thermal", t.id, rp, k) for t in system.thermal
                )
            for v in vi:
                if config.vi_gain_numerator == "own_output":
                    family = "p_renew" if isinstance(v, RenewableUnit) else "p_storage"
                    num = val(family, v.id, rp, k)
                else:
                    num = total_thermal
                gain = num / vi_weight
                virtual += 2.0 * v.inertia * gain * built[v.id]

        total_weight = sync_weight + vi_weight
        if total_weight > 0:
            avg = (sync * sync_weight + virtual * vi_weight) / total_weight
        else:
            avg = 0.0
        loss = system.disturbance(rp, k, config.disturbance)
        ok = config.rocof_limit / config.f_base * avg >= loss - 1e-9
        records.append(
            InertiaRecord(
                rp=rp,
                k=k,
                sync_inertia=sync,
                vi_inertia=virtual,
                avg_inertia=avg,
                disturbance=loss,
                rocof_ok=ok,
            )
        )
    return records


def format_inertia_report(records: list[InertiaRecord]) -> str:
    """Delimited text table of per-step inertia levels and the floor check."""
    lines = ["rp,k,sync_inertia_s,vi_inertia_s,avg_inertia_s,rocof_ok"]
    for r in records:
        ok = "true" if r.rocof_ok else "false"
        lines.append(
            f"{r.rp},{r.k},{r.sync_inertia!r},{r.vi_inertia!r},{r.avg_inertia!r},{ok}"
        )
    return "\n".join(lines) + "\n"
