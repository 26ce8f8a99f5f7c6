import numpy as np
import pytest

from gepkit.isf import NetworkError, check_connected, compute_isf, system_isf
from gepkit.oracle import dc_flows_from_angles
from gepkit.system import Bus, DemandSeries, Line, SystemData

from conftest import tiny_bc_system


def line(f, t, x, circuit=1):
    return Line(f, t, circuit, 0.0, -1.0 / x, 0.0, 10.0, 1000.0, x)


def test_two_bus_sign_convention():
    buses = [Bus(id="a", is_slack=True), Bus(id="b")]
    isf = compute_isf(buses, [line("a", "b", 0.1)])
    # injecting at b pushes flow from b toward a: negative in a->b orientation
    assert isf.column("b")[0] == pytest.approx(-1.0)
    assert isf.column("a")[0] == 0.0
    assert isf.slack == "a"


def test_slack_column_is_zero():
    system = tiny_bc_system(1)
    isf = system_isf(system)
    assert np.allclose(isf.column(system.slack_bus), 0.0)
    assert isf.line_keys == tuple(l.key for l in system.lines)


def test_matches_angle_solve_on_triangle():
    system = tiny_bc_system(1)
    isf = system_isf(system)
    injections = {"b1": 0.3, "b2": -0.25, "b3": -0.05}
    via_isf = isf.flows(injections)
    via_angles = dc_flows_from_angles(system, injections)
    for e, key in enumerate(isf.line_keys):
        assert via_isf[e] == pytest.approx(via_angles[key], abs=1e-12)


def test_flows_absorb_imbalance_at_slack():
    system = tiny_bc_system(1)
    isf = system_isf(system)
    # unbalanced withdrawal: the implied makeup power comes from the slack
    alone = isf.flows({"b3": -0.2})
    paired = isf.flows({"b3": -0.2, "b1": 0.2})
    assert np.allclose(alone, paired)


def test_superposition():
    system = tiny_bc_system(1)
    isf = system_isf(system)
    f1 = isf.flows({"b2": -0.1})
    f2 = isf.flows({"b3": -0.3})
    both = isf.flows({"b2": -0.1, "b3": -0.3})
    assert np.allclose(f1 + f2, both)


def test_explicit_slack_override():
    buses = [Bus(id="a", is_slack=True), Bus(id="b"), Bus(id="c")]
    lines = [line("a", "b", 0.1), line("b", "c", 0.2), line("a", "c", 0.3)]
    by_default = compute_isf(buses, lines)
    moved = compute_isf(buses, lines, slack="c")
    assert by_default.slack == "a" and moved.slack == "c"
    assert np.allclose(moved.column("c"), 0.0)
    # flows of a balanced transfer do not depend on the slack choice
    transfer = {"a": 1.0, "b": -1.0}
    assert np.allclose(by_default.flows(transfer), moved.flows(transfer))


def test_parallel_circuits_split_by_susceptance():
    buses = [Bus(id="a", is_slack=True), Bus(id="b")]
    lines = [line("a", "b", 0.1, circuit=1), line("a", "b", 0.3, circuit=2)]
    isf = compute_isf(buses, lines)
    col = isf.column("b")
    # 0.1 and 0.3 reactances in parallel carry 75% / 25% of the transfer
    assert col[0] == pytest.approx(-0.75)
    assert col[1] == pytest.approx(-0.25)


def test_island_detection():
    buses = [Bus(id="a", is_slack=True), Bus(id="b"), Bus(id="c"), Bus(id="d")]
    lines = [line("a", "b", 0.1), line("c", "d", 0.1)]
    with pytest.raises(NetworkError, match="islands"):
        check_connected(buses, lines)
    with pytest.raises(NetworkError, match="islands"):
        compute_isf(buses, lines)


def test_slack_bookkeeping_errors():
    buses = [Bus(id="a"), Bus(id="b")]
    lines = [line("a", "b", 0.1)]
    with pytest.raises(NetworkError, match="slack"):
        compute_isf(buses, lines)
    both = [Bus(id="a", is_slack=True), Bus(id="b", is_slack=True)]
    with pytest.raises(NetworkError, match="slack"):
        compute_isf(both, lines)
    with pytest.raises(NetworkError, match="slack"):
        compute_isf([Bus(id="a", is_slack=True), Bus(id="b")], lines, slack="z")


def test_random_networks_match_angle_oracle():
    rng = np.random.default_rng(7)
    for trial in range(10):
        n = int(rng.integers(3, 12))
        buses = [Bus(id=f"n{i}", is_slack=(i == 0)) for i in range(n)]
        lines = []
        for i in range(1, n):  # spanning tree first, then extra chords
            j = int(rng.integers(0, i))
            lines.append(line(f"n{j}", f"n{i}", float(rng.uniform(0.05, 0.4))))
        for _ in range(int(rng.integers(0, n))):
            i, j = rng.choice(n, size=2, replace=False)
            lines.append(
                line(f"n{i}", f"n{j}", float(rng.uniform(0.05, 0.4)),
                     circuit=len(lines) + 1)
            )
        injections = {f"n{i}": float(rng.normal(0, 0.3)) for i in range(1, n)}
        shell = SystemData(
            buses=buses, lines=lines, thermal=[], renewables=[], storages=[],
            facts=[], demand=DemandSeries(), profiles={}, inflows={},
            base_power=100.0, max_angle_diff=0.6, reserve_up=0.0,
            reserve_down=0.0, reserve_up_cost=0.0, reserve_down_cost=0.0,
            ens_cost=10.0, kappa_default=0.0, inertia_settings={},
        )
        isf = compute_isf(buses, lines)
        got = isf.flows(injections)
        want = dc_flows_from_angles(shell, injections)
        for e, key in enumerate(isf.line_keys):
            assert got[e] == pytest.approx(want[key], abs=1e-9)
