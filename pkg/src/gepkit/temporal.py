"""Temporal structure: chronological periods mapped onto representative steps.

The planning horizon is a sequence of chronological periods ``p`` (hours).
Each period maps to one step ``k`` of one representative period ``rp``.
Operating terms are weighted by ``weight_rp[rp] * weight_k[k]``; storage
carried between windows is reconciled at checkpoints every ``moving_window``
periods using the multiset of mapped steps inside the window.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path


class TemporalError(ValueError):
    """Raised for inconsistent temporal definitions."""


@dataclass(frozen=True)
class TemporalStructure:
    n_periods: int
    rps: tuple[int, ...]
    steps: tuple[int, ...]
    weight_rp: dict[int, float]
    weight_k: dict[int, float]
    gamma: tuple[tuple[int, int], ...]  # gamma[p-1] = (rp, k)
    moving_window: int
    chronological: bool = False
    _window_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.n_periods <= 0:
            raise TemporalError("horizon must contain at least one period")
        if len(self.gamma) != self.n_periods:
            raise TemporalError("gamma must map every period")
        if self.moving_window <= 0:
            raise TemporalError("moving window must be positive")
        if self.n_periods % self.moving_window != 0:
            raise TemporalError(
                f"horizon of {self.n_periods} periods is not a multiple of the "
                f"moving window {self.moving_window}"
            )
        rp_set, k_set = set(self.rps), set(self.steps)
        for p, (rp, k) in enumerate(self.gamma, start=1):
            if rp not in rp_set or k not in k_set:
                raise TemporalError(f"period {p} maps to unknown step ({rp},{k})")
        total_weight = sum(self.weight_rp[rp] for rp in self.rps) * sum(
            self.weight_k[k] for k in self.steps
        )
        if abs(total_weight - self.n_periods) > 1e-6 * max(1.0, self.n_periods):
            raise TemporalError(
                f"weights cover {total_weight} periods, horizon has {self.n_periods}"
            )

    # -- cyclic step arithmetic (within a representative period) -----------

    def prev_cyclic(self, k: int) -> int:
        pos = self.steps.index(k)
        return self.steps[pos - 1]

    def next_cyclic(self, k: int) -> int:
        pos = self.steps.index(k)
        return self.steps[(pos + 1) % len(self.steps)]

    # -- moving-window checkpoints ------------------------------------------

    def checkpoints(self) -> list[int]:
        return list(range(self.moving_window, self.n_periods + 1, self.moving_window))

    def is_checkpoint(self, p: int) -> bool:
        return 1 <= p <= self.n_periods and p % self.moving_window == 0

    def window_members(self, p: int) -> list[tuple[int, int]]:
        """Mapped steps of the periods in ``(p - moving_window, p]``.

        Returned with multiplicity: a step mapped by several chronological
        periods inside the window appears once per period.
        """
        if not self.is_checkpoint(p):
            raise TemporalError(f"period {p} is not a checkpoint")
        cached = self._window_cache.get(p)
        if cached is None:
            cached = [self.gamma[pp - 1] for pp in range(p - self.moving_window + 1, p + 1)]
            self._window_cache[p] = cached
        return list(cached)

    def step_pairs(self) -> list[tuple[int, int]]:
        return [(rp, k) for rp in self.rps for k in self.steps]

    def weight(self, rp: int, k: int) -> float:
        return self.weight_rp[rp] * self.weight_k[k]


def build_hourly_identity(n_hours: int, moving_window: int | None = None) -> TemporalStructure:
    """Chronological structure: one representative period spanning the horizon."""
    if n_hours <= 0:
        raise TemporalError("need at least one hour")
    steps = tuple(range(1, n_hours + 1))
    return TemporalStructure(
        n_periods=n_hours,
        rps=(1,),
        steps=steps,
        weight_rp={1: 1.0},
        weight_k={k: 1.0 for k in steps},
        gamma=tuple((1, k) for k in steps),
        moving_window=moving_window if moving_window is not None else n_hours,
        chronological=True,
    )


def build_representative(
    assignments: list[tuple[int, int]],
    steps_per_rp: int,
    moving_window: int | None = None,
) -> TemporalStructure:
    """Structure from day-to-representative assignments.

    ``assignments`` lists (day, rp) pairs covering days 1..D contiguously.
    Each day contributes ``steps_per_rp`` chronological periods; the weight of
    a representative period is the number of days assigned to it.
    """
    if steps_per_rp <= 0:
        raise TemporalError("steps_per_rp must be positive")
    if not assignments:
        raise TemporalError("no day assignments given")
    days = [d for d, _ in assignments]
    if days != list(range(1, len(days) + 1)):
        raise TemporalError("day assignments must cover 1..D in order")
    rp_weight: dict[int, float] = {}
    for _, rp in assignments:
        rp_weight[rp] = rp_weight.get(rp, 0.0) + 1.0
    rps = tuple(sorted(rp_weight))
    steps = tuple(range(1, steps_per_rp + 1))
    gamma = tuple(
        (rp, k) for _, rp in assignments for k in steps
    )
    return TemporalStructure(
        n_periods=len(assignments) * steps_per_rp,
        rps=rps,
        steps=steps,
        weight_rp=rp_weight,
        weight_k={k: 1.0 for k in steps},
        gamma=gamma,
        moving_window=moving_window if moving_window is not None else steps_per_rp,
        chronological=False,
    )


def read_assignments(path: Path) -> list[tuple[int, int]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"day", "rp"} <= set(reader.fieldnames):
            raise TemporalError(f"{path}: expected columns day,rp")
        rows = [(int(r["day"]), int(r["rp"])) for r in reader]
    rows.sort(key=lambda dr: dr[0])
    return rows
