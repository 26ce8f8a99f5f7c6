"""Power-system dataset: typed records, loading, validation, serialization.

A dataset directory holds delimited text tables with unit-bearing headers
plus one scalar config file:

    buses.csv      lines.csv      thermal.csv    renewable.csv
    storage.csv    facts.csv      demand.csv     profiles.csv
    inflows.csv (optional)        disturbances.csv (optional)
    assignments.csv (representative mode)
    system.toml

Power is in GW, energy in GWh, reactive power in GVar, costs in million EUR,
network quantities in per-unit on ``base_power_mva``. Line susceptance is the
signed series susceptance (negative for inductive lines); the paired angle
variable of the conic network block follows the same orientation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .temporal import TemporalStructure, build_hourly_identity, build_representative, read_assignments


class DataError(ValueError):
    """Raised for malformed or inconsistent dataset content."""


# -- record types -----------------------------------------------------------


@dataclass(frozen=True)
class Bus:
    id: str
    shunt_conductance: float = 0.0  # p.u.
    shunt_susceptance: float = 0.0  # p.u.
    reactive_ratio: float = 0.0  # GVar credited per GW of unserved demand
    v_min: float = 0.95  # p.u.
    v_max: float = 1.05  # p.u.
    is_slack: bool = False


@dataclass(frozen=True)
class Line:
    from_bus: str
    to_bus: str
    circuit: int
    conductance: float  # p.u. series
    susceptance: float  # p.u. series, signed (negative for inductive)
    charging: float  # p.u. total line charging
    flow_limit: float  # GW, active power per direction
    apparent_limit: float  # MVA, reactive flow box in the conic block
    reactance: float  # p.u., linearized network only

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.from_bus, self.to_bus, self.circuit)


@dataclass(frozen=True)
class ThermalUnit:
    id: str
    bus: str
    p_min: float  # GW per unit
    p_max: float  # GW per unit
    q_min: float  # GVar per unit
    q_max: float  # GVar per unit
    inertia: float  # s
    cost_startup: float  # MEUR per start
    cost_commit: float  # MEUR per committed hour
    cost_var: float  # MEUR per GWh
    cost_inv: float  # MEUR per GW-year
    ramp_up: float  # GW per hour
    ramp_down: float  # GW per hour
    existing: int
    build_max: int


@dataclass(frozen=True)
class RenewableUnit:
    id: str
    bus: str
    unit_size: float  # GW
    inertia: float  # s, positive marks virtual-inertia capability
    cost_om: float  # MEUR per GWh
    cost_inv: float  # MEUR per GW-year
    existing: int
    build_max: int
    profile_key: str
    q_min: float = 0.0
    q_max: float = 0.0


@dataclass(frozen=True)
class StorageUnit:
    id: str
    bus: str
    unit_size: float  # GW
    energy_to_power: float  # h of storage at rated power
    eff_charge: float
    eff_discharge: float
    min_soc: float  # fraction of energy capacity
    max_soc: float  # fraction of energy capacity
    inertia: float  # s, positive marks virtual-inertia capability
    cost_om: float  # MEUR per GWh
    cost_inv: float  # MEUR per GW-year
    existing: int
    build_max: int
    initial_reserve: float  # GWh seeded at the first checkpoint
    is_hydro: bool
    q_min: float = 0.0
    q_max: float = 0.0

    def energy_cap_per_unit(self) -> float:
        return self.unit_size * self.energy_to_power


@dataclass(frozen=True)
class FactsDevice:
    id: str
    bus: str
    q_min: float  # GVar per unit, <= 0
    q_max: float  # GVar per unit, >= 0
    cost_inv: float  # MEUR per unit-year
    build_max: int


@dataclass
class DemandSeries:
    """Active/reactive demand per (rp, k, bus); absent entries read as zero."""

    active: dict[tuple[int, int, str], float] = field(default_factory=dict)
    reactive: dict[tuple[int, int, str], float] = field(default_factory=dict)

    def p(self, rp: int, k: int, bus: str) -> float:
        return self.active.get((rp, k, bus), 0.0)

    def q(self, rp: int, k: int, bus: str) -> float:
        return self.reactive.get((rp, k, bus), 0.0)

    def total_p(self, rp: int, k: int) -> float:
        return sum(v for (r, s, _), v in self.active.items() if r == rp and s == k)


@dataclass
class SystemData:
    buses: list[Bus]
    lines: list[Line]
    thermal: list[ThermalUnit]
    renewables: list[RenewableUnit]
    storages: list[StorageUnit]
    facts: list[FactsDevice]
    demand: DemandSeries
    profiles: dict[tuple[int, int, str], float]
    inflows: dict[tuple[int, int, str], float]
    base_power: float  # MVA
    max_angle_diff: float  # rad
    reserve_up: float  # fraction of step demand
    reserve_down: float
    reserve_up_cost: float  # fraction of the unit's energy cost
    reserve_down_cost: float
    ens_cost: float  # MEUR per GWh unserved
    kappa_default: float
    inertia_settings: dict
    disturbances: dict = field(default_factory=dict)  # (rp, k) -> per-unit power loss

    # -- lookups -----------------------------------------------------------

    def bus(self, bus_id: str) -> Bus:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise DataError(f"unknown bus {bus_id}")

    @property
    def slack_bus(self) -> str:
        for b in self.buses:
            if b.is_slack:
                return b.id
        raise DataError("no slack bus declared")

    def generation_units(self):
        """Sized units in deterministic order: thermal, renewable, storage."""
        return list(self.thermal) + list(self.renewables) + list(self.storages)

    def invest_units(self):
        """Everything with an investment variable, FACTS included."""
        return self.generation_units() + list(self.facts)

    def vi_units(self):
        """Virtual-inertia providers: renewables and storage with inertia."""
        return [u for u in list(self.renewables) + list(self.storages) if u.inertia > 0]

    def profile(self, rp: int, k: int, key: str) -> float:
        try:
            return self.profiles[(rp, k, key)]
        except KeyError:
            raise DataError(f"profile {key!r} has no value at rp={rp}, k={k}") from None

    def availability(self, rp: int, k: int, unit) -> float:
        """Per-step availability factor; storage counts as fully available."""
        if isinstance(unit, RenewableUnit):
            return self.profile(rp, k, unit.profile_key)
        return 1.0

    def inflow(self, rp: int, k: int, storage_id: str) -> float:
        return self.inflows.get((rp, k, storage_id), 0.0)

    def disturbance(self, rp: int, k: int, default: float = 0.0) -> float:
        """Sizing power loss for the frequency-response requirement at a step."""
        return self.disturbances.get((rp, k), default)


# -- CSV helpers ------------------------------------------------------------


def _read_rows(path: Path, required: set[str]) -> list[dict]:
    if not path.exists():
        raise DataError(f"missing dataset file {path.name} in {path.parent}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = set(reader.fieldnames or ())
        missing = required - cols
        if missing:
            raise DataError(f"{path.name}: missing columns {sorted(missing)}")
        return list(reader)


def _num(path: str, row_no: int, row: dict, col: str, default: float | None = None) -> float:
    raw = (row.get(col) or "").strip()
    if not raw:
        if default is not None:
            return default
        raise DataError(f"{path}: row {row_no}: empty value for {col}")
    try:
        return float(raw)
    except ValueError:
        raise DataError(f"{path}: row {row_no}: bad number {raw!r} for {col}") from None


def _count(path: str, row_no: int, row: dict, col: str, default: int | None = None) -> int:
    value = _num(path, row_no, row, col, None if default is None else float(default))
    if value != int(value) or value < 0:
        raise DataError(f"{path}: row {row_no}: {col} must be a count, got {value}")
    return int(value)


def _flag(path: str, row_no: int, row: dict, col: str, default: bool = False) -> bool:
    raw = (row.get(col) or "").strip().lower()
    if not raw:
        return default
    if raw in ("1", "true", "yes"):
        return True
    if raw in ("0", "false", "no"):
        return False
    raise DataError(f"{path}: row {row_no}: bad flag {raw!r} for {col}")


# -- loading ----------------------------------------------------------------


def load_system(dataset_root: str | Path) -> SystemData:
    """Load and validate one dataset directory."""
    root = Path(dataset_root)
    if not root.is_dir():
        raise DataError(f"dataset directory {root} does not exist")
    config = _load_config(root / "system.toml")
    sys_cfg = config.get("system", {})

    buses = _load_buses(root / "buses.csv")
    bus_ids = {b.id for b in buses}
    lines = _load_lines(root / "lines.csv", bus_ids)
    thermal = _load_thermal(root / "thermal.csv", bus_ids)
    renewables = _load_renewables(root / "renewable.csv", bus_ids)
    storages = _load_storages(root / "storage.csv", bus_ids)
    facts = _load_facts(root / "facts.csv", bus_ids)
    demand = _load_demand(root / "demand.csv", bus_ids)
    profiles = _load_profiles(root / "profiles.csv")
    inflows = _load_inflows(root / "inflows.csv", {s.id for s in storages})

    seen: dict[str, str] = {}
    for kind, units in (
        ("thermal", thermal),
        ("renewable", renewables),
        ("storage", storages),
        ("facts", facts),
    ):
        for u in units:
            if u.id in seen:
                raise DataError(
                    f"unit id {u.id!r} appears in both {seen[u.id]} and {kind}"
                )
            seen[u.id] = kind

    for r in renewables:
        if not any(key == r.profile_key for (_, _, key) in profiles):
            raise DataError(
                f"renewable.csv: unit {r.id}: profile {r.profile_key!r} not in profiles.csv"
            )

    system = SystemData(
        buses=buses,
        lines=lines,
        thermal=thermal,
        renewables=renewables,
        storages=storages,
        facts=facts,
        demand=demand,
        profiles=profiles,
        inflows=inflows,
        base_power=float(sys_cfg.get("base_power_mva", 100.0)),
        max_angle_diff=float(sys_cfg.get("max_angle_diff_rad", 0.6)),
        reserve_up=float(sys_cfg.get("reserve_up_frac", 0.0)),
        reserve_down=float(sys_cfg.get("reserve_down_frac", 0.0)),
        reserve_up_cost=float(sys_cfg.get("reserve_up_cost_frac", 0.0)),
        reserve_down_cost=float(sys_cfg.get("reserve_down_cost_frac", 0.0)),
        ens_cost=float(sys_cfg.get("ens_cost_meur_gwh", 10.0)),
        kappa_default=float(sys_cfg.get("kappa_default", 0.0)),
        inertia_settings=dict(config.get("inertia", {})),
        disturbances=_load_disturbances(root / "disturbances.csv"),
    )
    _validate_scalars(system)
    return system


def load_temporal(dataset_root: str | Path) -> TemporalStructure:
    """Build the temporal structure declared in system.toml."""
    root = Path(dataset_root)
    config = _load_config(root / "system.toml")
    tcfg = config.get("temporal", {})
    mode = tcfg.get("mode", "hourly")
    window = tcfg.get("moving_window")
    if mode == "hourly":
        return build_hourly_identity(
            int(tcfg.get("n_hours", 8760)),
            moving_window=int(window) if window is not None else None,
        )
    if mode == "representative":
        assignments = read_assignments(root / tcfg.get("assignments_file", "assignments.csv"))
        return build_representative(
            assignments,
            int(tcfg["steps_per_rp"]),
            moving_window=int(window) if window is not None else None,
        )
    raise DataError(f"system.toml: unknown temporal mode {mode!r}")


def _load_config(path: Path) -> dict:
    if not path.exists():
        raise DataError(f"missing dataset file {path.name} in {path.parent}")
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise DataError(f"{path.name}: {exc}") from None


def _load_buses(path: Path) -> list[Bus]:
    rows = _read_rows(path, {"id"})
    buses: list[Bus] = []
    seen = set()
    for n, row in enumerate(rows, start=2):
        bid = (row["id"] or "").strip()
        if not bid:
            raise DataError(f"{path.name}: row {n}: empty bus id")
        if bid in seen:
            raise DataError(f"{path.name}: row {n}: duplicate bus {bid}")
        seen.add(bid)
        v_min = _num(path.name, n, row, "v_min_pu", 0.95)
        v_max = _num(path.name, n, row, "v_max_pu", 1.05)
        if not 0 < v_min <= v_max:
            raise DataError(f"{path.name}: row {n}: bad voltage band [{v_min}, {v_max}]")
        buses.append(
            Bus(
                id=bid,
                shunt_conductance=_num(path.name, n, row, "shunt_conductance_pu", 0.0),
                shunt_susceptance=_num(path.name, n, row, "shunt_susceptance_pu", 0.0),
                reactive_ratio=_num(path.name, n, row, "reactive_ratio", 0.0),
                v_min=v_min,
                v_max=v_max,
                is_slack=_flag(path.name, n, row, "is_slack"),
            )
        )
    slack_count = sum(1 for b in buses if b.is_slack)
    if slack_count != 1:
        raise DataError(f"{path.name}: exactly one slack bus required, found {slack_count}")
    return buses


def _load_lines(path: Path, bus_ids: set[str]) -> list[Line]:
    rows = _read_rows(path, {"from_bus", "to_bus", "reactance_pu"})
    lines: list[Line] = []
    seen = set()
    for n, row in enumerate(rows, start=2):
        frm, to = (row["from_bus"] or "").strip(), (row["to_bus"] or "").strip()
        for endpoint in (frm, to):
            if endpoint not in bus_ids:
                raise DataError(f"{path.name}: row {n}: unknown bus {endpoint!r}")
        if frm == to:
            raise DataError(f"{path.name}: row {n}: line endpoints coincide at {frm}")
        circuit = _count(path.name, n, row, "circuit", 1)
        if (frm, to, circuit) in seen or (to, frm, circuit) in seen:
            raise DataError(f"{path.name}: row {n}: duplicate line {frm}-{to} circuit {circuit}")
        seen.add((frm, to, circuit))
        reactance = _num(path.name, n, row, "reactance_pu")
        if reactance == 0.0:
            raise DataError(f"{path.name}: row {n}: zero reactance on {frm}-{to}")
        flow_limit = _num(path.name, n, row, "flow_limit_gw", float("inf"))
        apparent = _num(path.name, n, row, "apparent_limit_mva", float("inf"))
        if flow_limit <= 0 or apparent <= 0:
            raise DataError(f"{path.name}: row {n}: limits must be positive")
        lines.append(
            Line(
                from_bus=frm,
                to_bus=to,
                circuit=circuit,
                conductance=_num(path.name, n, row, "conductance_pu", 0.0),
                susceptance=_num(path.name, n, row, "susceptance_pu", -1.0 / reactance),
                charging=_num(path.name, n, row, "charging_pu", 0.0),
                flow_limit=flow_limit,
                apparent_limit=apparent,
                reactance=reactance,
            )
        )
    return lines


def _load_thermal(path: Path, bus_ids: set[str]) -> list[ThermalUnit]:
    rows = _read_rows(path, {"id", "bus", "p_min_gw", "p_max_gw"})
    units = []
    for n, row in enumerate(rows, start=2):
        uid, bus = (row["id"] or "").strip(), (row["bus"] or "").strip()
        if bus not in bus_ids:
            raise DataError(f"{path.name}: row {n}: unknown bus {bus!r}")
        p_min = _num(path.name, n, row, "p_min_gw")
        p_max = _num(path.name, n, row, "p_max_gw")
        if not 0 <= p_min <= p_max:
            raise DataError(f"{path.name}: row {n}: need 0 <= p_min <= p_max, got [{p_min}, {p_max}]")
        q_min = _num(path.name, n, row, "q_min_gvar", 0.0)
        q_max = _num(path.name, n, row, "q_max_gvar", 0.0)
        if q_min > q_max:
            raise DataError(f"{path.name}: row {n}: q_min exceeds q_max")
        unit = ThermalUnit(
            id=uid,
            bus=bus,
            p_min=p_min,
            p_max=p_max,
            q_min=q_min,
            q_max=q_max,
            inertia=_num(path.name, n, row, "inertia_s", 0.0),
            cost_startup=_num(path.name, n, row, "c_startup_meur", 0.0),
            cost_commit=_num(path.name, n, row, "c_commit_meur_h", 0.0),
            cost_var=_num(path.name, n, row, "c_var_meur_gwh", 0.0),
            cost_inv=_num(path.name, n, row, "c_inv_meur_gw_y", 0.0),
            ramp_up=_num(path.name, n, row, "ramp_up_gw_h", float("inf")),
            ramp_down=_num(path.name, n, row, "ramp_down_gw_h", float("inf")),
            existing=_count(path.name, n, row, "existing_units", 0),
            build_max=_count(path.name, n, row, "build_max", 0),
        )
        _check_unit_costs(path.name, n, unit.cost_startup, unit.cost_commit, unit.cost_var, unit.cost_inv)
        if unit.inertia < 0:
            raise DataError(f"{path.name}: row {n}: negative inertia")
        if unit.ramp_up < 0 or unit.ramp_down < 0:
            raise DataError(f"{path.name}: row {n}: negative ramp limit")
        units.append(unit)
    return units


def _load_renewables(path: Path, bus_ids: set[str]) -> list[RenewableUnit]:
    rows = _read_rows(path, {"id", "bus", "unit_size_gw", "profile_key"})
    units = []
    for n, row in enumerate(rows, start=2):
        bus = (row["bus"] or "").strip()
        if bus not in bus_ids:
            raise DataError(f"{path.name}: row {n}: unknown bus {bus!r}")
        size = _num(path.name, n, row, "unit_size_gw")
        if size <= 0:
            raise DataError(f"{path.name}: row {n}: unit size must be positive")
        unit = RenewableUnit(
            id=(row["id"] or "").strip(),
            bus=bus,
            unit_size=size,
            inertia=_num(path.name, n, row, "inertia_s", 0.0),
            cost_om=_num(path.name, n, row, "c_om_meur_gwh", 0.0),
            cost_inv=_num(path.name, n, row, "c_inv_meur_gw_y", 0.0),
            existing=_count(path.name, n, row, "existing_units", 0),
            build_max=_count(path.name, n, row, "build_max", 0),
            profile_key=(row["profile_key"] or "").strip(),
            q_min=_num(path.name, n, row, "q_min_gvar", 0.0),
            q_max=_num(path.name, n, row, "q_max_gvar", 0.0),
        )
        if unit.inertia < 0 or unit.cost_om < 0 or unit.cost_inv < 0:
            raise DataError(f"{path.name}: row {n}: negative parameter")
        if not unit.profile_key:
            raise DataError(f"{path.name}: row {n}: empty profile_key")
        if unit.q_min > unit.q_max:
            raise DataError(f"{path.name}: row {n}: q_min exceeds q_max")
        units.append(unit)
    return units


def _load_storages(path: Path, bus_ids: set[str]) -> list[StorageUnit]:
    rows = _read_rows(path, {"id", "bus", "unit_size_gw", "energy_to_power_h"})
    units = []
    for n, row in enumerate(rows, start=2):
        bus = (row["bus"] or "").strip()
        if bus not in bus_ids:
            raise DataError(f"{path.name}: row {n}: unknown bus {bus!r}")
        size = _num(path.name, n, row, "unit_size_gw")
        etp = _num(path.name, n, row, "energy_to_power_h")
        if size <= 0 or etp <= 0:
            raise DataError(f"{path.name}: row {n}: size and energy-to-power must be positive")
        eff_c = _num(path.name, n, row, "eff_charge", 1.0)
        eff_d = _num(path.name, n, row, "eff_discharge", 1.0)
        if not (0 < eff_c <= 1 and 0 < eff_d <= 1):
            raise DataError(f"{path.name}: row {n}: efficiencies must lie in (0, 1]")
        min_soc = _num(path.name, n, row, "min_soc_frac", 0.0)
        max_soc = _num(path.name, n, row, "max_soc_frac", 1.0)
        if not 0 <= min_soc <= max_soc <= 1:
            raise DataError(f"{path.name}: row {n}: need 0 <= min_soc <= max_soc <= 1")
        unit = StorageUnit(
            id=(row["id"] or "").strip(),
            bus=bus,
            unit_size=size,
            energy_to_power=etp,
            eff_charge=eff_c,
            eff_discharge=eff_d,
            min_soc=min_soc,
            max_soc=max_soc,
            inertia=_num(path.name, n, row, "inertia_s", 0.0),
            cost_om=_num(path.name, n, row, "c_om_meur_gwh", 0.0),
            cost_inv=_num(path.name, n, row, "c_inv_meur_gw_y", 0.0),
            existing=_count(path.name, n, row, "existing_units", 0),
            build_max=_count(path.name, n, row, "build_max", 0),
            initial_reserve=_num(path.name, n, row, "initial_reserve_gwh", 0.0),
            is_hydro=_flag(path.name, n, row, "is_hydro"),
            q_min=_num(path.name, n, row, "q_min_gvar", 0.0),
            q_max=_num(path.name, n, row, "q_max_gvar", 0.0),
        )
        if unit.inertia < 0 or unit.cost_om < 0 or unit.cost_inv < 0 or unit.initial_reserve < 0:
            raise DataError(f"{path.name}: row {n}: negative parameter")
        if unit.q_min > unit.q_max:
            raise DataError(f"{path.name}: row {n}: q_min exceeds q_max")
        units.append(unit)
    return units


def _load_facts(path: Path, bus_ids: set[str]) -> list[FactsDevice]:
    rows = _read_rows(path, {"id", "bus", "q_min_gvar", "q_max_gvar"})
    units = []
    for n, row in enumerate(rows, start=2):
        bus = (row["bus"] or "").strip()
        if bus not in bus_ids:
            raise DataError(f"{path.name}: row {n}: unknown bus {bus!r}")
        q_min = _num(path.name, n, row, "q_min_gvar")
        q_max = _num(path.name, n, row, "q_max_gvar")
        if not q_min <= 0 <= q_max:
            raise DataError(f"{path.name}: row {n}: reactive range must straddle zero")
        units.append(
            FactsDevice(
                id=(row["id"] or "").strip(),
                bus=bus,
                q_min=q_min,
                q_max=q_max,
                cost_inv=_num(path.name, n, row, "c_inv_meur_y", 0.0),
                build_max=_count(path.name, n, row, "build_max", 0),
            )
        )
    return units


def _load_demand(path: Path, bus_ids: set[str]) -> DemandSeries:
    rows = _read_rows(path, {"rp", "k", "bus", "demand_p_gw"})
    demand = DemandSeries()
    for n, row in enumerate(rows, start=2):
        bus = (row["bus"] or "").strip()
        if bus not in bus_ids:
            raise DataError(f"{path.name}: row {n}: unknown bus {bus!r}")
        key = (int(row["rp"]), int(row["k"]), bus)
        if key in demand.active:
            raise DataError(f"{path.name}: row {n}: duplicate demand entry {key}")
        d_p = _num(path.name, n, row, "demand_p_gw")
        if d_p < 0:
            raise DataError(f"{path.name}: row {n}: negative active demand")
        demand.active[key] = d_p
        demand.reactive[key] = _num(path.name, n, row, "demand_q_gvar", 0.0)
    return demand


def _load_profiles(path: Path) -> dict[tuple[int, int, str], float]:
    rows = _read_rows(path, {"rp", "k", "profile_key", "value"})
    profiles: dict[tuple[int, int, str], float] = {}
    for n, row in enumerate(rows, start=2):
        key = (int(row["rp"]), int(row["k"]), (row["profile_key"] or "").strip())
        if key in profiles:
            raise DataError(f"{path.name}: row {n}: duplicate profile entry {key}")
        value = _num(path.name, n, row, "value")
        if not 0.0 <= value <= 1.0:
            raise DataError(f"{path.name}: row {n}: profile value {value} outside [0, 1]")
        profiles[key] = value
    return profiles


def _load_inflows(path: Path, storage_ids: set[str]) -> dict[tuple[int, int, str], float]:
    if not path.exists():
        return {}
    rows = _read_rows(path, {"rp", "k", "storage", "inflow_gwh"})
    inflows: dict[tuple[int, int, str], float] = {}
    for n, row in enumerate(rows, start=2):
        sid = (row["storage"] or "").strip()
        if sid not in storage_ids:
            raise DataError(f"{path.name}: row {n}: unknown storage {sid!r}")
        value = _num(path.name, n, row, "inflow_gwh")
        if value < 0:
            raise DataError(f"{path.name}: row {n}: negative inflow")
        inflows[(int(row["rp"]), int(row["k"]), sid)] = value
    return inflows


def _load_disturbances(path: Path) -> dict[tuple[int, int], float]:
    if not path.exists():
        return {}
    rows = _read_rows(path, {"rp", "k", "disturbance_pu"})
    out: dict[tuple[int, int], float] = {}
    for n, row in enumerate(rows, start=2):
        key = (int(row["rp"]), int(row["k"]))
        if key in out:
            raise DataError(f"{path.name}: row {n}: duplicate step {key}")
        value = _num(path.name, n, row, "disturbance_pu")
        if value < 0:
            raise DataError(f"{path.name}: row {n}: negative disturbance")
        out[key] = value
    return out


def _check_unit_costs(fname: str, row_no: int, *costs: float) -> None:
    for c in costs:
        if c < 0:
            raise DataError(f"{fname}: row {row_no}: negative cost {c}")


def _validate_scalars(system: SystemData) -> None:
    if system.base_power <= 0:
        raise DataError("system.toml: base_power_mva must be positive")
    if system.max_angle_diff <= 0:
        raise DataError("system.toml: max_angle_diff_rad must be positive")
    if not 0.0 <= system.kappa_default <= 1.0:
        raise DataError("system.toml: kappa_default outside [0, 1]")
    for label, value in (
        ("reserve_up_frac", system.reserve_up),
        ("reserve_down_frac", system.reserve_down),
        ("reserve_up_cost_frac", system.reserve_up_cost),
        ("reserve_down_cost_frac", system.reserve_down_cost),
        ("ens_cost_meur_gwh", system.ens_cost),
    ):
        if value < 0:
            raise DataError(f"system.toml: {label} must be nonnegative")


def validate_coverage(system: SystemData, temporal: TemporalStructure) -> None:
    """Check that profiles and demand keys line up with the temporal grid."""
    grid = set(temporal.step_pairs())
    for (rp, k, bus) in system.demand.active:
        if (rp, k) not in grid:
            raise DataError(f"demand entry at rp={rp}, k={k} outside the temporal grid")
    for r in system.renewables:
        for rp, k in grid:
            if (rp, k, r.profile_key) not in system.profiles:
                raise DataError(
                    f"profile {r.profile_key!r} missing value at rp={rp}, k={k}"
                )
    for (rp, k, _sid) in system.inflows:
        if (rp, k) not in grid:
            raise DataError(f"inflow entry at rp={rp}, k={k} outside the temporal grid")
    for (rp, k) in system.disturbances:
        if (rp, k) not in grid:
            raise DataError(
                f"disturbance entry at rp={rp}, k={k} outside the temporal grid"
            )


# -- serialization ----------------------------------------------------------


def save_system(system: SystemData, dataset_root: str | Path, temporal_section: dict | None = None) -> None:
    """Write a dataset directory that loads back to the same semantic content."""
    root = Path(dataset_root)
    root.mkdir(parents=True, exist_ok=True)

    def write(name: str, header: list[str], rows: list[list]) -> None:
        with open(root / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)

    write(
        "buses.csv",
        ["id", "shunt_conductance_pu", "shunt_susceptance_pu", "reactive_ratio",
         "v_min_pu", "v_max_pu", "is_slack"],
        [[b.id, b.shunt_conductance, b.shunt_susceptance, b.reactive_ratio,
          b.v_min, b.v_max, int(b.is_slack)] for b in system.buses],
    )
    write(
        "lines.csv",
        ["from_bus", "to_bus", "circuit", "conductance_pu", "susceptance_pu",
         "charging_pu", "flow_limit_gw", "apparent_limit_mva", "reactance_pu"],
        [[l.from_bus, l.to_bus, l.circuit, l.conductance, l.susceptance,
          l.charging, l.flow_limit, l.apparent_limit, l.reactance] for l in system.lines],
    )
    write(
        "thermal.csv",
        ["id", "bus", "p_min_gw", "p_max_gw", "q_min_gvar", "q_max_gvar", "inertia_s",
         "c_startup_meur", "c_commit_meur_h", "c_var_meur_gwh", "c_inv_meur_gw_y",
         "ramp_up_gw_h", "ramp_down_gw_h", "existing_units", "build_max"],
        [[t.id, t.bus, t.p_min, t.p_max, t.q_min, t.q_max, t.inertia,
          t.cost_startup, t.cost_commit, t.cost_var, t.cost_inv,
          t.ramp_up, t.ramp_down, t.existing, t.build_max] for t in system.thermal],
    )
    write(
        "renewable.csv",
        ["id", "bus", "unit_size_gw", "inertia_s", "c_om_meur_gwh", "c_inv_meur_gw_y",
         "existing_units", "build_max", "profile_key", "q_min_gvar", "q_max_gvar"],
        [[r.id, r.bus, r.unit_size, r.inertia, r.cost_om, r.cost_inv,
          r.existing, r.build_max, r.profile_key, r.q_min, r.q_max] for r in system.renewables],
    )
    write(
        "storage.csv",
        ["id", "bus", "unit_size_gw", "energy_to_power_h", "eff_charge", "eff_discharge",
         "min_soc_frac", "max_soc_frac", "inertia_s", "c_om_meur_gwh", "c_inv_meur_gw_y",
         "existing_units", "build_max", "initial_reserve_gwh", "is_hydro",
         "q_min_gvar", "q_max_gvar"],
        [[s.id, s.bus, s.unit_size, s.energy_to_power, s.eff_charge, s.eff_discharge,
          s.min_soc, s.max_soc, s.inertia, s.cost_om, s.cost_inv,
          s.existing, s.build_max, s.initial_reserve, int(s.is_hydro),
          s.q_min, s.q_max] for s in system.storages],
    )
    write(
        "facts.csv",
        ["id", "bus", "q_min_gvar", "q_max_gvar", "c_inv_meur_y", "build_max"],
        [[f.id, f.bus, f.q_min, f.q_max, f.cost_inv, f.build_max] for f in system.facts],
    )
    write(
        "demand.csv",
        ["rp", "k", "bus", "demand_p_gw", "demand_q_gvar"],
        [[rp, k, bus, system.demand.active[(rp, k, bus)],
          system.demand.reactive.get((rp, k, bus), 0.0)]
         for (rp, k, bus) in sorted(system.demand.active)],
    )
    write(
        "profiles.csv",
        ["rp", "k", "profile_key", "value"],
        [[rp, k, key, system.profiles[(rp, k, key)]]
         for (rp, k, key) in sorted(system.profiles)],
    )
    if system.inflows:
        write(
            "inflows.csv",
            ["rp", "k", "storage", "inflow_gwh"],
            [[rp, k, sid, system.inflows[(rp, k, sid)]]
             for (rp, k, sid) in sorted(system.inflows)],
        )
    if system.disturbances:
        write(
            "disturbances.csv",
            ["rp", "k", "disturbance_pu"],
            [[rp, k, system.disturbances[(rp, k)]]
             for (rp, k) in sorted(system.disturbances)],
        )

    lines = ["[system]"]
    for key, value in (
        ("base_power_mva", system.base_power),
        ("max_angle_diff_rad", system.max_angle_diff),
        ("reserve_up_frac", system.reserve_up),
        ("reserve_down_frac", system.reserve_down),
        ("reserve_up_cost_frac", system.reserve_up_cost),
        ("reserve_down_cost_frac", system.reserve_down_cost),
        ("ens_cost_meur_gwh", system.ens_cost),
        ("kappa_default", system.kappa_default),
    ):
        lines.append(f"{key} = {value}")
    if temporal_section:
        lines.append("")
        lines.append("[temporal]")
        for key, value in temporal_section.items():
            lines.append(f'{key} = "{value}"' if isinstance(value, str) else f"{key} = {value}")
    if system.inertia_settings:
        lines.append("")
        lines.append("[inertia]")
        for key, value in system.inertia_settings.items():
            lines.append(f'{key} = "{value}"' if isinstance(value, str) else f"{key} = {value}")
    (root / "system.toml").write_text("\n".join(lines) + "\n")
