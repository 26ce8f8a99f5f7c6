import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gepkit.temporal import (
    TemporalError,
    TemporalStructure,
    build_hourly_identity,
    build_representative,
)


def test_hourly_identity_basic():
    t = build_hourly_identity(8760)
    assert t.n_periods == 8760
    assert t.rps == (1,)
    assert t.steps == tuple(range(1, 8761))
    assert t.chronological
    assert t.weight(1, 1) == 1.0
    assert t.gamma[0] == (1, 1)
    assert t.gamma[-1] == (1, 8760)


def test_hourly_identity_cyclic_wrap():
    t = build_hourly_identity(24)
    assert t.prev_cyclic(1) == 24
    assert t.next_cyclic(24) == 1
    assert t.prev_cyclic(13) == 12
    assert t.next_cyclic(13) == 14


def test_hourly_identity_single_window_by_default():
    t = build_hourly_identity(48)
    assert t.moving_window == 48
    assert t.checkpoints() == [48]
    assert t.window_members(48) == [(1, k) for k in range(1, 49)]


def test_moving_window_checkpoints():
    t = build_hourly_identity(24, moving_window=6)
    assert t.checkpoints() == [6, 12, 18, 24]
    assert t.is_checkpoint(12)
    assert not t.is_checkpoint(13)
    assert t.window_members(6) == [(1, k) for k in range(1, 7)]
    assert t.window_members(24) == [(1, k) for k in range(19, 25)]
    with pytest.raises(TemporalError):
        t.window_members(7)


def test_moving_window_must_divide_horizon():
    with pytest.raises(TemporalError):
        build_hourly_identity(24, moving_window=7)


def test_hourly_identity_rejects_empty():
    with pytest.raises(TemporalError):
        build_hourly_identity(0)


def test_representative_weights_are_day_counts():
    assignments = [(1, 1), (2, 1), (3, 2), (4, 1)]
    t = build_representative(assignments, steps_per_rp=3)
    assert t.rps == (1, 2)
    assert t.steps == (1, 2, 3)
    assert t.weight_rp == {1: 3.0, 2: 1.0}
    assert t.n_periods == 12
    assert not t.chronological
    # weighting a step multiplies day count by the per-step weight of one
    assert t.weight(1, 2) == 3.0
    assert t.weight(2, 3) == 1.0


def test_representative_gamma_is_chronological():
    assignments = [(1, 2), (2, 1)]
    t = build_representative(assignments, steps_per_rp=2)
    assert t.gamma == ((2, 1), (2, 2), (1, 1), (1, 2))
    # default window is one day, so each checkpoint sees one day's steps
    assert t.moving_window == 2
    assert t.checkpoints() == [2, 4]
    assert t.window_members(2) == [(2, 1), (2, 2)]
    assert t.window_members(4) == [(1, 1), (1, 2)]


def test_representative_rejects_day_gaps():
    with pytest.raises(TemporalError):
        build_representative([(1, 1), (3, 1)], steps_per_rp=2)
    with pytest.raises(TemporalError):
        build_representative([], steps_per_rp=2)
    with pytest.raises(TemporalError):
        build_representative([(1, 1)], steps_per_rp=0)


def test_structure_rejects_bad_weight_total():
    with pytest.raises(TemporalError):
        TemporalStructure(
            n_periods=4,
            rps=(1,),
            steps=(1, 2),
            weight_rp={1: 1.0},
            weight_k={1: 1.0, 2: 1.0},
            gamma=((1, 1), (1, 2), (1, 1), (1, 2)),
            moving_window=4,
        )


def test_structure_rejects_unmapped_step():
    with pytest.raises(TemporalError):
        TemporalStructure(
            n_periods=2,
            rps=(1,),
            steps=(1, 2),
            weight_rp={1: 1.0},
            weight_k={1: 1.0, 2: 1.0},
            gamma=((1, 1), (1, 3)),
            moving_window=2,
        )


@settings(max_examples=40, deadline=None)
@given(
    rp_of_day=st.lists(st.integers(min_value=1, max_value=5), min_size=1, max_size=40),
    steps_per_rp=st.integers(min_value=1, max_value=8),
)
def test_representative_weights_cover_horizon(rp_of_day, steps_per_rp):
    assignments = [(d, rp) for d, rp in enumerate(rp_of_day, start=1)]
    t = build_representative(assignments, steps_per_rp=steps_per_rp)
    covered = sum(t.weight(rp, k) for rp in t.rps for k in t.steps)
    assert covered == pytest.approx(t.n_periods)
    # every chronological period maps to a declared step
    assert len(t.gamma) == t.n_periods
    for rp, k in t.gamma:
        assert rp in t.rps and k in t.steps


@settings(max_examples=30, deadline=None)
@given(n=st.integers(min_value=1, max_value=60))
def test_cyclic_walk_returns_home(n):
    t = build_hourly_identity(n)
    k = t.steps[0]
    for _ in range(n):
        k = t.next_cyclic(k)
    assert k == t.steps[0]
