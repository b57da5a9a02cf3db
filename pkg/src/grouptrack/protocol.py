"""Cluster lifecycle: timer-based head election, membership, merging, splitting.

Connectivity ("can this node hear that one") is decided on true geometry;
preferences between audible cluster heads use RSSI-estimated distances,
which is all a real node could measure.  Callers own the single-threaded
state; every operation here is a deterministic transition given its rng.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# Estimated distance between two node ids, e.g. RSSI-based.
Ranging = Callable[[int, int], float]


@dataclass
class ClusterView:
    ch_id: int
    members: set[int]
    formation_time: float = 0.0

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("cluster must have at least one member")
        if self.ch_id not in self.members:
            raise ValueError("cluster head must be a member of its cluster")

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass
class MembershipState:
    node_id: int
    cluster: Optional[int] = None  # ch_id of the current cluster
    missed_updates: int = 0


@dataclass(frozen=True)
class ProtocolEvent:
    t: float
    event: str  # form | merge | leave | join
    node_id: int
    ch_id: int
    cluster_size: int


def _true_distance(positions: np.ndarray) -> Ranging:
    def dist(i: int, j: int) -> float:
        return float(np.linalg.norm(positions[i] - positions[j]))

    return dist


def form_clusters(
    positions: np.ndarray,
    comm_range: float,
    rng: np.random.Generator,
    ranging: Ranging | None = None,
    now: float = 0.0,
    node_ids: list[int] | None = None,
) -> list[ClusterView]:
    """Elect heads by random timer and attach every node to exactly one.

    A node declares itself head when its timer expires with no earlier head
    audible; timer ties resolve to the lower node id.  Non-heads join the
    audible head with the smallest estimated distance, so a node out of
    range of every head ends up as its own singleton head.
    """
    positions = np.atleast_2d(positions)
    ids = list(range(positions.shape[0])) if node_ids is None else list(node_ids)
    if ranging is None:
        ranging = _true_distance(positions)
    timers = rng.random(len(ids))
    order = sorted(range(len(ids)), key=lambda idx: (timers[idx], ids[idx]))

    heads: list[int] = []
    for idx in order:
        i = ids[idx]
        audible = any(
            np.linalg.norm(positions[i] - positions[h]) <= comm_range for h in heads
        )
        if not audible:
            heads.append(i)

    clusters = {h: ClusterView(ch_id=h, members={h}, formation_time=now) for h in heads}
    for i in sorted(ids):
        if i in clusters:
            continue
        in_range = [
            h for h in heads if np.linalg.norm(positions[i] - positions[h]) <= comm_range
        ]
        chosen = min(in_range, key=lambda h: (ranging(i, h), h))
        clusters[chosen].members.add(i)
    return [clusters[h] for h in sorted(clusters)]


def merge_clusters(a: ClusterView, b: ClusterView) -> ClusterView:
    """Bigger cluster absorbs the smaller; equal sizes go to the lower head id."""
    if a.ch_id == b.ch_id:
        return a
    winner = max((a, b), key=lambda c: (c.size, -c.ch_id))
    loser = b if winner is a else a
    return ClusterView(
        ch_id=winner.ch_id,
        members=set(winner.members) | set(loser.members),
        formation_time=winner.formation_time,
    )


def record_update_outcome(state: MembershipState, received: bool) -> MembershipState:
    """Track scheduled-update delivery; three consecutive misses evict."""
    if received:
        state.missed_updates = 0
    else:
        state.missed_updates += 1
        if state.missed_updates >= 3:
            state.missed_updates = 3
            state.cluster = None
    return state


def reassign_orphan(
    node_id: int,
    positions: np.ndarray,
    clusters: list[ClusterView],
    comm_range: float,
    ranging: Ranging | None = None,
    now: float = 0.0,
) -> ClusterView:
    """Attach a clusterless node to the nearest audible head, else make it a
    singleton cluster.  Returns the (mutated or new) cluster it ends up in."""
    if ranging is None:
        ranging = _true_distance(positions)
    in_range = [
        c
        for c in clusters
        if np.linalg.norm(positions[node_id] - positions[c.ch_id]) <= comm_range
    ]
    if in_range:
        chosen = min(in_range, key=lambda c: (ranging(node_id, c.ch_id), c.ch_id))
        chosen.members.add(node_id)
        return chosen
    return ClusterView(ch_id=node_id, members={node_id}, formation_time=now)


def check_partition(clusters: list[ClusterView], n_nodes: int) -> None:
    """Raise if the clusters are not a disjoint cover of all node ids."""
    seen: set[int] = set()
    for c in clusters:
        if c.ch_id not in c.members:
            raise AssertionError(f"head {c.ch_id} missing from its own cluster")
        overlap = seen & c.members
        if overlap:
            raise AssertionError(f"nodes {sorted(overlap)} appear in two clusters")
        seen |= c.members
    if seen != set(range(n_nodes)):
        missing = set(range(n_nodes)) - seen
        raise AssertionError(f"nodes {sorted(missing)} are in no cluster")


def write_events_csv(events: list[ProtocolEvent], path) -> None:
    """Event log: header ``t,event,node_id,ch_id,cluster_size``."""
    with open(path, "w", newline="") as fh:
        fh.write("t,event,node_id,ch_id,cluster_size\n")
        for e in events:
            fh.write(f"{e.t:g},{e.event},{e.node_id},{e.ch_id},{e.cluster_size}\n")
