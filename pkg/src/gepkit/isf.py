"""Injection shift factors for the linearized (lossless) network.

The factor matrix maps nodal net injections, with the balancing withdrawal at
the slack bus, onto line flows oriented from ``from_bus`` to ``to_bus``. It is
dimensionless, so it applies to GW injections directly. A single injection of
1 at some bus produces flow ISF[line, bus] on each line; the slack column is
identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .system import Bus, Line, SystemData


class NetworkError(ValueError):
    """Raised for disconnected or otherwise unusable networks."""


@dataclass(frozen=True)
class IsfMatrix:
    values: np.ndarray  # shape (n_lines, n_buses)
    line_keys: tuple[tuple[str, str, int], ...]
    bus_ids: tuple[str, ...]
    slack: str

    def column(self, bus_id: str) -> np.ndarray:
        return self.values[:, self.bus_ids.index(bus_id)]

    def flows(self, injections: dict[str, float]) -> np.ndarray:
        """Line flows for a (not necessarily balanced) injection pattern.

        Any imbalance is absorbed at the slack bus, consistent with the
        zero slack column.
        """
        vec = np.zeros(len(self.bus_ids))
        for bus_id, value in injections.items():
            vec[self.bus_ids.index(bus_id)] += value
        return self.values @ vec


def check_connected(buses: list[Bus], lines: list[Line]) -> None:
    index = {b.id: i for i, b in enumerate(buses)}
    n = len(buses)
    if n == 0:
        raise NetworkError("no buses")
    rows = [index[l.from_bus] for l in lines] + [index[l.to_bus] for l in lines]
    cols = [index[l.to_bus] for l in lines] + [index[l.from_bus] for l in lines]
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    n_comp, labels = connected_components(adj, directed=False)
    if n_comp > 1:
        groups = []
        for comp in range(n_comp):
            groups.append("{" + ", ".join(b.id for b, lab in zip(buses, labels) if lab == comp) + "}")
        raise NetworkError(f"network splits into {n_comp} islands: " + "; ".join(groups))


def compute_isf(buses: list[Bus], lines: list[Line], slack: str | None = None) -> IsfMatrix:
    """Build the shift-factor matrix from line reactances and the slack bus."""
    bus_ids = tuple(b.id for b in buses)
    if slack is None:
        slacks = [b.id for b in buses if b.is_slack]
        if len(slacks) != 1:
            raise NetworkError(f"need exactly one slack bus, found {len(slacks)}")
        slack = slacks[0]
    if slack not in bus_ids:
        raise NetworkError(f"slack bus {slack!r} not in bus list")
    check_connected(buses, lines)

    index = {bid: i for i, bid in enumerate(bus_ids)}
    n, m = len(buses), len(lines)
    incidence = np.zeros((m, n))
    b_series = np.zeros(m)
    for e, line in enumerate(lines):
        incidence[e, index[line.from_bus]] = 1.0
        incidence[e, index[line.to_bus]] = -1.0
        b_series[e] = 1.0 / line.reactance

    laplacian = incidence.T @ (b_series[:, None] * incidence)
    keep = [i for i in range(n) if i != index[slack]]
    reduced = laplacian[np.ix_(keep, keep)]
    # flow sensitivity = diag(1/x) * A * theta-sensitivity
    theta_sens = np.linalg.solve(reduced, np.eye(len(keep)))
    values = np.zeros((m, n))
    values[:, keep] = (b_series[:, None] * incidence[:, keep]) @ theta_sens
    return IsfMatrix(
        values=values,
        line_keys=tuple(l.key for l in lines),
        bus_ids=bus_ids,
        slack=slack,
    )


def system_isf(system: SystemData) -> IsfMatrix:
    return compute_isf(system.buses, system.lines, system.slack_bus)
