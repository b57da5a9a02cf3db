import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grouptrack.protocol import (
    ClusterView,
    MembershipState,
    check_partition,
    form_clusters,
    merge_clusters,
    reassign_orphan,
    record_update_outcome,
)


class _FixedTimers:
    """rng stub whose .random(n) returns preset timer values."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def random(self, n):
        assert n == len(self.values)
        return self.values


# -- formation ---------------------------------------------------------------


def test_single_node_forms_singleton():
    clusters = form_clusters(np.array([[0.0, 0.0]]), 100.0, np.random.default_rng(0))
    assert len(clusters) == 1
    assert clusters[0].ch_id == 0
    assert clusters[0].members == {0}


def test_equal_timers_elect_lowest_id():
    positions = np.array([[0.0, 0.0], [10.0, 0.0]])
    clusters = form_clusters(positions, 100.0, _FixedTimers([0.5, 0.5]))
    assert len(clusters) == 1
    assert clusters[0].ch_id == 0
    assert clusters[0].members == {0, 1}


def test_member_prefers_nearer_head_by_rssi():
    # heads 0 and 1 out of range of each other; node 2 hears both
    positions = np.array([[0.0, 0.0], [150.0, 0.0], [75.0, 0.0]])
    rssi = {(2, 0): 70.0, (2, 1): 80.0}
    clusters = form_clusters(
        positions, 100.0, _FixedTimers([0.1, 0.2, 0.9]),
        ranging=lambda i, j: rssi[(i, j)],
    )
    by_head = {c.ch_id: c for c in clusters}
    assert set(by_head) == {0, 1}
    assert 2 in by_head[0].members


def test_unreachable_node_becomes_own_head():
    positions = np.array([[0.0, 0.0], [10.0, 0.0], [5000.0, 5000.0]])
    clusters = form_clusters(positions, 100.0, np.random.default_rng(1))
    by_head = {c.ch_id: c for c in clusters}
    assert 2 in by_head
    assert by_head[2].members == {2}


def test_formation_deterministic_given_seed():
    positions = np.random.default_rng(5).uniform(0, 400, (25, 2))
    a = form_clusters(positions, 100.0, np.random.default_rng(9))
    b = form_clusters(positions, 100.0, np.random.default_rng(9))
    assert [(c.ch_id, sorted(c.members)) for c in a] == [
        (c.ch_id, sorted(c.members)) for c in b
    ]


@settings(max_examples=50, deadline=None)
@given(
    st.integers(min_value=1, max_value=30),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_formation_is_partition(n, seed):
    rng = np.random.default_rng(seed)
    positions = rng.uniform(0, 500, (n, 2))
    clusters = form_clusters(positions, 100.0, rng)
    check_partition(clusters, n)


# -- merging -------------------------------------------------------------------


def test_bigger_cluster_absorbs_smaller():
    a = ClusterView(ch_id=1, members={1, 2, 3, 4, 5})
    b = ClusterView(ch_id=9, members={9, 10, 11})
    merged = merge_clusters(a, b)
    assert merged.ch_id == 1
    assert merged.size == 8


def test_merge_tie_goes_to_lower_head_id():
    a = ClusterView(ch_id=2, members={2, 3, 4, 5})
    b = ClusterView(ch_id=7, members={7, 8, 9, 10})
    assert merge_clusters(a, b).ch_id == 2
    assert merge_clusters(b, a).ch_id == 2


def test_merge_with_self_is_identity():
    a = ClusterView(ch_id=1, members={1, 2})
    assert merge_clusters(a, a) is a


def test_merge_size_is_sum_of_disjoint_sizes():
    a = ClusterView(ch_id=0, members={0, 1, 2})
    b = ClusterView(ch_id=5, members={5, 6})
    assert merge_clusters(a, b).size == a.size + b.size


# -- missed updates -------------------------------------------------------------


def test_third_miss_evicts():
    state = MembershipState(4, cluster=1, missed_updates=2)
    record_update_outcome(state, received=False)
    assert state.cluster is None
    assert state.missed_updates == 3


def test_receive_resets_counter():
    state = MembershipState(4, cluster=1, missed_updates=2)
    record_update_outcome(state, received=True)
    assert state.cluster == 1
    assert state.missed_updates == 0


def test_two_misses_keep_membership():
    state = MembershipState(4, cluster=1)
    record_update_outcome(state, received=False)
    record_update_outcome(state, received=False)
    assert state.cluster == 1
    assert state.missed_updates == 2


# -- orphan reassignment ---------------------------------------------------------


def test_orphan_joins_head_in_range():
    positions = np.array([[0.0, 0.0], [50.0, 0.0]])
    cluster = ClusterView(ch_id=0, members={0})
    joined = reassign_orphan(1, positions, [cluster], 100.0)
    assert joined is cluster
    assert joined.members == {0, 1}


def test_orphan_without_head_becomes_singleton():
    positions = np.array([[0.0, 0.0], [5000.0, 0.0]])
    cluster = ClusterView(ch_id=0, members={0})
    created = reassign_orphan(1, positions, [cluster], 100.0, now=17.0)
    assert created.ch_id == 1
    assert created.members == {1}
    assert created.formation_time == 17.0


def test_orphan_prefers_nearer_head_by_rssi():
    positions = np.array([[0.0, 0.0], [150.0, 0.0], [75.0, 0.0]])
    c0 = ClusterView(ch_id=0, members={0})
    c1 = ClusterView(ch_id=1, members={1})
    rssi = {(2, 0): 80.0, (2, 1): 70.0}
    joined = reassign_orphan(2, positions, [c0, c1], 100.0,
                             ranging=lambda i, j: rssi[(i, j)])
    assert joined is c1


# -- invariant helpers -----------------------------------------------------------


def test_cluster_requires_head_membership():
    with pytest.raises(ValueError):
        ClusterView(ch_id=1, members={2, 3})
    with pytest.raises(ValueError):
        ClusterView(ch_id=1, members=set())


def test_check_partition_rejects_overlap():
    clusters = [
        ClusterView(ch_id=0, members={0, 1}),
        ClusterView(ch_id=2, members={2, 1}),
    ]
    with pytest.raises(AssertionError):
        check_partition(clusters, 3)


def test_check_partition_rejects_missing_nodes():
    with pytest.raises(AssertionError):
        check_partition([ClusterView(ch_id=0, members={0})], 2)
