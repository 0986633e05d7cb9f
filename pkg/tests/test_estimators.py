import numpy as np
import pytest

from twophase import exact, instances
from twophase.diffusion import batch_reach, live_masks
from twophase.estimators import ExactEstimator, SnapshotEstimator, usable_edges
from twophase.graph import residual_view


@pytest.fixture
def tree_pair():
    return instances.tree_network(), instances.tree_economics()


def test_snapshot_profit_matches_batch_reach(tree_pair):
    net, econ = tree_pair
    est = SnapshotEstimator(net, econ, 3000, 4)
    live = live_masks(net, 4, "select", 0, 3000)
    for seeds in [[0], [1, 2], [0, 3, 5]]:
        direct = (batch_reach(net, live, seeds) @ econ.benefit).mean() - econ.total_cost(seeds)
        assert est.profit(seeds).mean == pytest.approx(direct, abs=1e-9)


def test_gains_and_losses_are_profit_differences(tree_pair):
    net, econ = tree_pair
    est = SnapshotEstimator(net, econ, 2000, 9)
    S = [0, 2]
    p = lambda nodes: est.profit(nodes).mean
    g = est.gains(S, [1, 3, 4])
    for u, gu in zip([1, 3, 4], g):
        assert gu == pytest.approx(p(S + [u]) - p(S), abs=1e-9)
    T = [0, 1, 2, 5]
    loss = est.losses(T, T)
    for u, lu in zip(T, loss):
        assert lu == pytest.approx(p([v for v in T if v != u]) - p(T), abs=1e-9)


def test_incremental_caches_agree_with_fresh_state(tree_pair):
    net, econ = tree_pair
    a = SnapshotEstimator(net, econ, 1000, 1)
    a.gains([0], [1])
    a.gains([0, 1], [2, 3])          # coverage grows by one
    b = SnapshotEstimator(net, econ, 1000, 1)
    assert np.allclose(a.gains([0, 1], [2, 3]), b.gains([0, 1], [2, 3]))
    a.losses([0, 1, 2], [0])
    a.losses([0, 2], [0, 2])         # counts shrink by one
    assert np.allclose(a.losses([0, 2], [0, 2]), b.losses([0, 2], [0, 2]))


def test_snapshot_close_to_exact(tree_pair):
    net, econ = tree_pair
    est = SnapshotEstimator(net, econ, 40000, 2)
    for seeds in [[0], [1, 2]]:
        e = est.profit(seeds)
        assert abs(e.mean - exact.exact_profit(net, econ, seeds)) < 4 * e.stderr


def test_exact_estimator_matches_oracle(tree_pair):
    net, econ = tree_pair
    est = ExactEstimator(net, econ)
    assert est.value([0, 2]) == pytest.approx(exact.exact_profit(net, econ, [0, 2]), abs=1e-12)
    g = est.gains([0], [1])[0]
    assert g == pytest.approx(exact.exact_profit(net, econ, [0, 1]) - exact.exact_profit(net, econ, [0]))


def test_anchor_reach_counts_but_not_its_cost(tree_pair):
    net, econ = tree_pair
    view = residual_view(net, [0, 1])
    ok = usable_edges(view, [1])
    assert ok[net.edge_index(1, 3)] and ok[net.edge_index(1, 4)]
    assert not ok[net.edge_index(0, 2)]
    ex = ExactEstimator(view, econ, anchor=[1])
    # nothing bought: expected benefit of what node 1 still reaches, plus node 1 itself
    expect = econ.benefit[1] + 0.2 * econ.benefit[3] + 0.9 * econ.benefit[4]
    assert ex.value([]) == pytest.approx(expect)
    snap = SnapshotEstimator(view, econ, 20000, 0, anchor=[1])
    e = snap.profit([])
    assert abs(e.mean - expect) < 4 * e.stderr + 1e-12


def test_snapshot_is_deterministic(lm):
    net, econ = lm
    a = SnapshotEstimator(net, econ, 300, 5).gains([], range(10))
    b = SnapshotEstimator(net, econ, 300, 5).gains([], range(10))
    assert np.array_equal(a, b)


def test_reach_contains_start_node_every_replicate(lm):
    net, _ = lm
    est = SnapshotEstimator(net, lm[1], 50, 0)
    r = est.reach(3)
    assert np.all(np.isin(np.arange(50) * net.n + 3, r))
