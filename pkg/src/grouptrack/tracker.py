"""Multi-mode position-update engine and the two baseline policies.

At every sampling instant the cluster protocol is advanced (missed-update
bookkeeping, merges, orphan handling) and each cluster then updates its
members' position estimates according to the selected policy:

* multi-mode: cluster size above the threshold localizes everyone from a
  random anchor subset via WLSR/WLSRP; small clusters borrow one fresh GPS
  fix; singletons fall back to their own GPS and try to rejoin.
* cbt: one member per cluster refreshes via GPS round-robin and the rest
  adopt the freshest estimate audible nearby.
* individual: every node samples its own GPS at every instant.

The engine is a single-threaded deterministic state machine: a full run is
a pure function of (inputs, seeds).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import multilat
from .channel import PathLossParams, sample_gps_fix, sample_rssi_distances
from .energy import Activity, EnergyLedger, EnergyParams, charge, finalize, gps_energy
from .multilat import Method, Variant
from .protocol import (
    ClusterView,
    MembershipState,
    ProtocolEvent,
    check_partition,
    form_clusters,
    merge_clusters,
    record_update_outcome,
    reassign_orphan,
)

_MIN_LINK_DISTANCE = 1e-6  # collocated nodes would break the dBm model


class AlgorithmVariant(enum.Enum):
    MULTI_MODE_WLSR = "wlsr"
    MULTI_MODE_WLSRP = "wlsrp"
    CBT = "cbt"
    INDIVIDUAL = "individual"

    @property
    def uses_clusters(self) -> bool:
        return self is not AlgorithmVariant.INDIVIDUAL


class Mode(enum.Enum):
    MULTILATERATION = "multilateration"
    CLUSTER_BASED = "cluster_based"
    STANDALONE = "standalone"


METHOD_CODE = {m: i for i, m in enumerate(Method)}
CODE_METHOD = {i: m for m, i in METHOD_CODE.items()}


@dataclass(frozen=True)
class TrackerConfig:
    cluster_threshold: int = 10  # multilateration above this size
    n_anchors: int = 6
    sampling_interval: int = 5
    comm_range: float = 100.0
    variant: AlgorithmVariant = AlgorithmVariant.MULTI_MODE_WLSRP

    def __post_init__(self) -> None:
        if self.cluster_threshold < 1:
            raise ValueError("cluster_threshold must be at least 1")
        if not 3 <= self.n_anchors <= self.cluster_threshold:
            raise ValueError(
                f"n_anchors must be in [3, cluster_threshold], got {self.n_anchors}"
            )
        if self.sampling_interval < 1:
            raise ValueError("sampling_interval must be at least 1")


@dataclass
class NodeTrackState:
    node_id: int
    estimate: np.ndarray
    estimate_time: float
    method: Method


def select_mode(cluster_size: int, cluster_threshold: int) -> Mode:
    """Pick the update mode from the cluster census; total for size >= 1."""
    if cluster_size < 1:
        raise ValueError("cluster size must be at least 1")
    if cluster_size > cluster_threshold:
        return Mode.MULTILATERATION
    if cluster_size > 1:
        return Mode.CLUSTER_BASED
    return Mode.STANDALONE


def filter_estimate(
    estimate: np.ndarray,
    anchors: list[multilat.AnchorObservation],
    comm_range: float,
    method: Method = Method.WLSR,
) -> multilat.PositionEstimate:
    """Sanity-check one estimate against the anchors that produced it.

    An estimate strictly farther than twice the communication range from any
    anchor is discarded in favour of the position of the anchor with the
    smallest RSSI distance; otherwise the estimate passes through with its
    original ``method``.
    """
    if not anchors:
        raise ValueError("need at least one anchor")
    est = np.asarray(estimate, dtype=float)
    pos = np.array([a.pos_tilde for a in anchors])
    far = np.linalg.norm(pos - est, axis=1) > 2.0 * comm_range
    if np.any(far):
        nearest = int(np.argmin([a.d_tilde for a in anchors]))
        x, y = pos[nearest]
        return multilat.PositionEstimate(float(x), float(y), Method.NEAREST_ANCHOR)
    return multilat.PositionEstimate(float(est[0]), float(est[1]), method)


@dataclass
class RunOutput:
    """Everything a full run produces, before metric computation."""

    times: np.ndarray  # (K,) sampling instants, seconds
    estimates: np.ndarray  # (K, n, 2)
    methods: np.ndarray  # (K, n) codes into CODE_METHOD
    ledgers: list[EnergyLedger]
    events: list[ProtocolEvent]
    mode_member_instants: dict[str, int] = field(default_factory=dict)
    cluster_counts: list[int] = field(default_factory=list)


class TrackerSim:
    """One full tracking run over precomputed ground-truth positions."""

    def __init__(
        self,
        positions: np.ndarray,  # (T+1, n, 2) ground truth at 1 s steps
        sigma_a: np.ndarray,  # (n,) per-node GPS noise std
        sigma_p: np.ndarray,  # (n,) per-node RSSI noise std
        path_loss: PathLossParams,
        energy_params: EnergyParams,
        config: TrackerConfig,
        rng_channel: np.random.Generator,
        rng_protocol: np.random.Generator,
        rng_tracker: np.random.Generator,
        check_invariants: bool = False,
        record_events: bool = True,
    ) -> None:
        self.P = np.asarray(positions, dtype=float)
        self.n = self.P.shape[1]
        self.sigma_a = np.asarray(sigma_a, dtype=float)
        self.sigma_p = np.asarray(sigma_p, dtype=float)
        self.pl = path_loss
        self.ep = energy_params
        self.cfg = config
        self.rng_channel = rng_channel
        self.rng_protocol = rng_protocol
        self.rng_tracker = rng_tracker
        self.check_invariants = check_invariants
        self.record_events = record_events

        self.ledgers = [EnergyLedger(i) for i in range(self.n)]
        self.membership = [MembershipState(i) for i in range(self.n)]
        self.clusters: dict[int, ClusterView] = {}
        self.est = np.zeros((self.n, 2))
        self.est_time = np.zeros(self.n)
        self.est_method = np.zeros(self.n, dtype=np.int8)
        self.events: list[ProtocolEvent] = []
        self.mode_member_instants = {m.value: 0 for m in Mode}
        self.cluster_counts: list[int] = []

        self._sample_times: list[float] = []
        self._sample_est: list[np.ndarray] = []
        self._sample_methods: list[np.ndarray] = []

    # -- primitives ------------------------------------------------------

    def node_state(self, i: int) -> NodeTrackState:
        return NodeTrackState(
            i, self.est[i].copy(), float(self.est_time[i]), CODE_METHOD[int(self.est_method[i])]
        )

    def _gps_fix(self, i: int, t: int) -> np.ndarray:
        charge(self.ledgers[i], Activity.GPS_FIX, self.ep)
        return sample_gps_fix(self.P[t, i], self.sigma_a[i], self.rng_channel)

    def _set_estimate(self, i: int, value: np.ndarray, origin_t: float, method: Method) -> None:
        self.est[i] = value
        self.est_time[i] = origin_t
        self.est_method[i] = METHOD_CODE[method]

    def _distance(self, t: int, i: int, j: int) -> float:
        return float(np.linalg.norm(self.P[t, i] - self.P[t, j]))

    def _ranging(self, t: int):
        """RSSI distance estimator between nodes; transmitter noise applies."""

        def estimate(i: int, j: int) -> float:
            d = max(self._distance(t, i, j), _MIN_LINK_DISTANCE)
            return float(
                sample_rssi_distances(
                    np.array([d]), np.array([self.sigma_p[j]]), self.pl, self.rng_channel
                )[0]
            )

        return estimate

    def _event(self, t: float, kind: str, node_id: int, ch_id: int, size: int) -> None:
        if self.record_events:
            self.events.append(ProtocolEvent(t, kind, node_id, ch_id, size))

    def _record_sample(self, t: float) -> None:
        self._sample_times.append(t)
        self._sample_est.append(self.est.copy())
        self._sample_methods.append(self.est_method.copy())

    def _broadcast(self, t: int, sender: int, members: list[int]) -> None:
        """One transmission plus a reception per member inside comm range."""
        charge(self.ledgers[sender], Activity.TRANSMIT, self.ep)
        for m in members:
            if m != sender and self._distance(t, m, sender) <= self.cfg.comm_range:
                charge(self.ledgers[m], Activity.RECEIVE, self.ep)

    # -- protocol upkeep ---------------------------------------------------

    def _initial_formation(self) -> None:
        for i in range(self.n):
            self._set_estimate(i, self._gps_fix(i, 0), 0.0, Method.GPS)
        clusters = form_clusters(
            self.P[0], self.cfg.comm_range, self.rng_protocol, self._ranging(0), now=0.0
        )
        for c in clusters:
            self.clusters[c.ch_id] = c
            for m in c.members:
                self.membership[m].cluster = c.ch_id
                self.membership[m].missed_updates = 0
            self._event(0.0, "form", c.ch_id, c.ch_id, c.size)
        self._record_sample(0.0)

    def _missed_update_pass(self, t: int) -> list[int]:
        orphans: list[int] = []
        for ch in sorted(self.clusters):
            cluster = self.clusters[ch]
            for m in sorted(cluster.members):
                if m == ch:
                    continue
                received = self._distance(t, m, ch) <= self.cfg.comm_range
                record_update_outcome(self.membership[m], received)
                if self.membership[m].cluster is None:
                    orphans.append(m)
            left = [m for m in cluster.members if m != ch and self.membership[m].cluster is None]
            for m in left:
                cluster.members.discard(m)
                self._event(float(t), "leave", m, ch, cluster.size)
        return orphans

    def _merge_pass(self, t: int) -> None:
        while True:
            heads = sorted(self.clusters)
            pair = None
            for idx, a in enumerate(heads):
                for b in heads[idx + 1 :]:
                    if self._distance(t, a, b) <= self.cfg.comm_range:
                        pair = (a, b)
                        break
                if pair:
                    break
            if pair is None:
                return
            a, b = pair
            merged = merge_clusters(self.clusters[a], self.clusters[b])
            loser = b if merged.ch_id == a else a
            del self.clusters[a]
            del self.clusters[b]
            self.clusters[merged.ch_id] = merged
            for m in merged.members:
                self.membership[m].cluster = merged.ch_id
            self._event(float(t), "merge", loser, merged.ch_id, merged.size)

    def _handle_orphan(self, i: int, t: int) -> None:
        """Standalone update then rejoin: own GPS now, membership for later."""
        self._set_estimate(i, self._gps_fix(i, t), float(t), Method.GPS)
        self.mode_member_instants[Mode.STANDALONE.value] += 1
        cluster = reassign_orphan(
            i, self.P[t], list(self.clusters.values()), self.cfg.comm_range,
            self._ranging(t), now=float(t),
        )
        self.membership[i].cluster = cluster.ch_id
        self.membership[i].missed_updates = 0
        if cluster.ch_id == i and cluster.size == 1:
            self.clusters[i] = cluster
            self._event(float(t), "form", i, i, 1)
        else:
            self._event(float(t), "join", i, cluster.ch_id, cluster.size)

    def _try_rejoin_singleton(self, i: int, t: int) -> None:
        if self.clusters.get(i) is None or self.clusters[i].size != 1:
            return
        others = [c for ch, c in self.clusters.items() if ch != i]
        cluster = reassign_orphan(
            i, self.P[t], others, self.cfg.comm_range, self._ranging(t), now=float(t)
        )
        if cluster.ch_id != i:
            del self.clusters[i]
            self.membership[i].cluster = cluster.ch_id
            self.membership[i].missed_updates = 0
            self._event(float(t), "join", i, cluster.ch_id, cluster.size)

    # -- per-cluster updates ----------------------------------------------

    def _update_multilateration(self, cluster: ClusterView, t: int) -> int:
        members = sorted(cluster.members)
        variant = (
            Variant.WLSR
            if self.cfg.variant is AlgorithmVariant.MULTI_MODE_WLSR
            else Variant.WLSRP
        )
        anchors = sorted(
            int(a)
            for a in self.rng_tracker.choice(members, size=self.cfg.n_anchors, replace=False)
        )
        fixes = np.empty((len(anchors), 2))
        for row, a in enumerate(anchors):
            fixes[row] = self._gps_fix(a, t)
            self._set_estimate(a, fixes[row], float(t), Method.GPS)
        for a in anchors:
            self._broadcast(t, a, members)

        blind = [m for m in members if m not in anchors]
        if blind:
            true_d = np.linalg.norm(
                self.P[t, blind][:, None, :] - self.P[t, anchors][None, :, :], axis=2
            )
            true_d = np.maximum(true_d, _MIN_LINK_DISTANCE)
            sp = self.sigma_p[anchors]
            d_tilde = sample_rssi_distances(true_d, sp[None, :], self.pl, self.rng_channel)
            est, bad = multilat.estimate_positions_batch(
                fixes, d_tilde, self.sigma_a[anchors], sp, self.pl, variant
            )
            far = np.any(
                np.linalg.norm(est[:, None, :] - fixes[None, :, :], axis=2)
                > 2.0 * self.cfg.comm_range,
                axis=1,
            )
            rejected = bad | far
            nearest = np.argmin(d_tilde, axis=1)
            method = Method.WLSR if variant is Variant.WLSR else Method.WLSRP
            for row, m in enumerate(blind):
                if rejected[row]:
                    self._set_estimate(m, fixes[nearest[row]], float(t), Method.NEAREST_ANCHOR)
                else:
                    self._set_estimate(m, est[row], float(t), method)
            if self.check_invariants:
                kept = est[~rejected]
                if kept.size:
                    gaps = np.linalg.norm(kept[:, None, :] - fixes[None, :, :], axis=2)
                    assert np.all(gaps <= 2.0 * self.cfg.comm_range)
        self.mode_member_instants[Mode.MULTILATERATION.value] += len(members)
        return len(anchors)

    def _update_cluster_based(self, cluster: ClusterView, t: int) -> int:
        members = sorted(cluster.members)
        budget = gps_energy(self.ep)
        candidates = [m for m in members if self.ledgers[m].remaining(self.ep) >= budget]
        self.mode_member_instants[Mode.CLUSTER_BASED.value] += len(members)
        if not candidates:
            for m in members:
                self._set_estimate(m, self.est[m], self.est_time[m], Method.HELD)
            return 0
        anchor = int(self.rng_tracker.choice(candidates))
        fix = self._gps_fix(anchor, t)
        self._set_estimate(anchor, fix, float(t), Method.GPS)
        self._broadcast(t, anchor, members)
        for m in members:
            if m != anchor:
                self._set_estimate(m, fix, float(t), Method.BORROWED)
        return 1

    def _update_standalone(self, node: int, t: int) -> int:
        self._set_estimate(node, self._gps_fix(node, t), float(t), Method.GPS)
        self.mode_member_instants[Mode.STANDALONE.value] += 1
        return 1

    def _update_cbt(self, cluster: ClusterView, t: int, instant_index: int) -> int:
        members = sorted(cluster.members)
        if len(members) == 1:
            return self._update_standalone(members[0], t)
        refresher = members[instant_index % len(members)]
        fix = self._gps_fix(refresher, t)
        self._set_estimate(refresher, fix, float(t), Method.GPS)
        self._broadcast(t, refresher, members)
        fixes = 1
        snapshot_est = self.est.copy()
        snapshot_time = self.est_time.copy()
        for m in members:
            if m == refresher:
                continue
            audible = [
                j
                for j in members
                if j != m and self._distance(t, m, j) <= self.cfg.comm_range
            ]
            if audible:
                src = min(audible, key=lambda j: (-snapshot_time[j], j))
                self._set_estimate(m, snapshot_est[src], snapshot_time[src], Method.BORROWED)
            else:
                self._set_estimate(m, self._gps_fix(m, t), float(t), Method.GPS)
                fixes += 1
        return fixes

    # -- main loop ---------------------------------------------------------

    def run(self) -> RunOutput:
        duration = self.P.shape[0] - 1
        step = self.cfg.sampling_interval
        instants = range(step, duration + 1, step)

        if self.cfg.variant.uses_clusters:
            self._initial_formation()

        for index, t in enumerate(instants):
            if self.cfg.variant is AlgorithmVariant.INDIVIDUAL:
                for i in range(self.n):
                    self._set_estimate(i, self._gps_fix(i, t), float(t), Method.GPS)
                self._record_sample(float(t))
                continue

            orphans = self._missed_update_pass(t)
            self._merge_pass(t)

            snapshot = [self.clusters[ch] for ch in sorted(self.clusters)]
            singleton_candidates: list[int] = []
            for cluster in snapshot:
                if self.cfg.variant is AlgorithmVariant.CBT:
                    fixes = self._update_cbt(cluster, t, index)
                    if self.check_invariants:
                        assert fixes >= 1
                    continue
                mode = select_mode(cluster.size, self.cfg.cluster_threshold)
                if mode is Mode.MULTILATERATION:
                    fixes = self._update_multilateration(cluster, t)
                    if self.check_invariants:
                        assert fixes == self.cfg.n_anchors
                elif mode is Mode.CLUSTER_BASED:
                    fixes = self._update_cluster_based(cluster, t)
                    if self.check_invariants:
                        assert fixes <= 1
                else:
                    self._update_standalone(cluster.ch_id, t)
                    singleton_candidates.append(cluster.ch_id)

            for i in sorted(orphans):
                self._handle_orphan(i, t)
            for i in singleton_candidates:
                self._try_rejoin_singleton(i, t)

            if self.check_invariants:
                check_partition(list(self.clusters.values()), self.n)
                assert np.all(self.est_time <= t)
            self.cluster_counts.append(len(self.clusters))
            self._record_sample(float(t))

        for ledger in self.ledgers:
            finalize(ledger, self.ep)

        return RunOutput(
            times=np.array(self._sample_times),
            estimates=np.array(self._sample_est),
            methods=np.array(self._sample_methods),
            ledgers=self.ledgers,
            events=self.events,
            mode_member_instants=dict(self.mode_member_instants),
            cluster_counts=list(self.cluster_counts),
        )


def write_estimates_csv(output: RunOutput, path) -> None:
    """Estimate log: header ``t,node_id,method,x_hat,y_hat``."""
    with open(path, "w", newline="") as fh:
        fh.write("t,node_id,method,x_hat,y_hat\n")
        n = output.estimates.shape[1]
        for k, t in enumerate(output.times):
            for i in range(n):
                method = CODE_METHOD[int(output.methods[k, i])].value
                x, y = output.estimates[k, i]
                fh.write(f"{t:g},{i},{method},{x:.6f},{y:.6f}\n")


def write_energy_csv(ledgers: list[EnergyLedger], params: EnergyParams, path) -> None:
    """Energy report: header ``node_id,gps_fixes,tx,rx,consumed_J``."""
    with open(path, "w", newline="") as fh:
        fh.write("node_id,gps_fixes,tx,rx,consumed_J\n")
        for led in ledgers:
            fh.write(
                f"{led.node_id},{led.gps_fixes},{led.tx},{led.rx},"
                f"{led.consumed(params):.9f}\n"
            )
