"""Network topology: node placement and the routing tree toward the sink."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Topology:
    """A routing tree over positioned nodes.

    ``positions`` maps node id to (x, y, z) in meters, ``parents`` maps
    every non-sink node to its next hop.  Validation rejects cycles,
    orphans and links longer than ``max_link_m``.
    """

    positions: dict[str, tuple[float, float, float]]
    parents: dict[str, str]
    sink: str
    max_link_m: float = 357.0

    def __post_init__(self) -> None:
        if self.sink not in self.positions:
            raise ValueError(f"sink {self.sink!r} has no position")
        if self.sink in self.parents:
            raise ValueError("the sink must not have a parent")
        for node in self.positions:
            if node != self.sink and node not in self.parents:
                raise ValueError(f"node {node!r} has no route to the sink")
        for child, parent in self.parents.items():
            if child not in self.positions:
                raise ValueError(f"parent map names unknown node {child!r}")
            if parent not in self.positions:
                raise ValueError(f"{child!r} routes to unknown node {parent!r}")
            if child == parent:
                raise ValueError(f"{child!r} routes to itself")
        for node in self.parents:
            seen = {node}
            cursor = node
            while cursor != self.sink:
                cursor = self.parents[cursor]
                if cursor in seen:
                    raise ValueError(f"routing loop through {cursor!r}")
                seen.add(cursor)
        for child, parent in self.parents.items():
            d = self.distance(child, parent)
            if d > self.max_link_m:
                raise ValueError(
                    f"link {child!r}->{parent!r} is {d:.1f} m, "
                    f"longer than the {self.max_link_m:.1f} m maximum"
                )

    def distance(self, a: str, b: str) -> float:
        return math.dist(self.positions[a], self.positions[b])

    def links(self) -> list[tuple[str, str, float]]:
        """Directed (child, parent, distance) links, sorted by child id."""
        return [
            (child, parent, self.distance(child, parent))
            for child, parent in sorted(self.parents.items())
        ]

    def transmitters(self) -> list[str]:
        return sorted(self.parents)


def ring_topology(
    n_transmitters: int,
    inner_radius_m: float = 300.0,
    outer_gap_m: float = 330.0,
    sink_depth_m: float = -10.0,
    inner_depth_m: float = -20.0,
    outer_depth_m: float = -30.0,
    max_link_m: float = 357.0,
) -> Topology:
    """Deterministic two-ring tree around a central sink.

    The first ``ceil(n/2)`` transmitters sit on an inner ring wired
    straight to the sink; the rest sit on an outer ring, each relaying
    through the inner node at the same bearing.  Growing ``n`` therefore
    grows the sink's in-degree, which is what makes contention climb with
    network size.
    """
    if n_transmitters < 1:
        raise ValueError(f"need at least one transmitter, got {n_transmitters}")
    inner = math.ceil(n_transmitters / 2)
    outer = n_transmitters - inner
    positions: dict[str, tuple[float, float, float]] = {"sink": (0.0, 0.0, sink_depth_m)}
    parents: dict[str, str] = {}
    inner_ids = []
    for i in range(inner):
        angle = 2.0 * math.pi * i / inner
        node = f"n{i + 1:02d}"
        inner_ids.append(node)
        positions[node] = (
            inner_radius_m * math.cos(angle),
            inner_radius_m * math.sin(angle),
            inner_depth_m,
        )
        parents[node] = "sink"
    for j in range(outer):
        relay = inner_ids[j % inner]
        angle = 2.0 * math.pi * (j % inner) / inner
        radius = inner_radius_m + outer_gap_m
        node = f"n{inner + j + 1:02d}"
        positions[node] = (
            radius * math.cos(angle),
            radius * math.sin(angle),
            outer_depth_m,
        )
        parents[node] = relay
    return Topology(positions=positions, parents=parents, sink="sink", max_link_m=max_link_m)
