import numpy as np
import pytest

from conftest import binomial_interval
from twophase import exact, instances
from twophase.diffusion import (Estimate, PartialObservation, SeedSelection, batch_reach,
                                continue_diffusion, estimate_profit, influence, live_masks,
                                marginal_profit_gain, simulate_ic, simulate_to_timestep)
from twophase.graph import NodeEconomics, SocialNetwork, residual_view


def chain(n=4, p=1.0):
    return SocialNetwork.from_edges(n, [(i, i + 1, p) for i in range(n - 1)])


def test_deterministic_chain_rounds():
    out = simulate_ic(chain(), [0], np.random.default_rng(0))
    assert out.activated == {0, 1, 2, 3}
    assert out.rounds == 3
    assert out.newly_active_per_round == ({1}, {2}, {3})


def test_timestep_zero_observes_seeds_only():
    obs = simulate_to_timestep(chain(), [0, 2], 0, np.random.default_rng(0))
    assert obs.already_active == {0, 2} and obs.recently_active == {0, 2}
    assert not obs.failed_edges and not obs.live_edges


def test_observation_and_continuation_on_chain():
    net = chain()
    obs = simulate_to_timestep(net, [0], 2, np.random.default_rng(0))
    assert obs.already_active == {0, 1, 2} and obs.recently_active == {2}
    out = continue_diffusion(net, obs, [], np.random.default_rng(1))
    assert out.activated == {0, 1, 2, 3}


def test_quiescent_before_timestep():
    obs = simulate_to_timestep(chain(2), [0], 5, np.random.default_rng(0))
    assert obs.quiescent and obs.rounds_run == 1


def test_failed_edges_are_never_retried():
    net = SocialNetwork.from_edges(3, [(0, 1, 0.5), (2, 1, 0.5)])
    live = np.array([False, True])
    obs = simulate_to_timestep(net, [0], 1, live)
    assert obs.failed_edges == {(0, 1)}
    # node 0 is not in the frontier again, so 0 -> 1 cannot be flipped twice
    out = continue_diffusion(net, obs, [2], live)
    assert 1 in out.activated
    assert (0, 1) not in out.tried_edges


def test_extra_seed_inside_active_set_is_ignored():
    net = chain()
    obs = simulate_to_timestep(net, [0], 1, np.ones(net.m, bool))
    out = continue_diffusion(net, obs, [0, 1], np.ones(net.m, bool))
    assert out.activated == {0, 1, 2, 3}


def test_observation_validation():
    with pytest.raises(ValueError):
        PartialObservation(frozenset({0}), frozenset({1}), frozenset(), frozenset(), 1)
    with pytest.raises(ValueError):
        PartialObservation(frozenset({0}), frozenset(), frozenset({(0, 1)}),
                           frozenset({(0, 1)}), 1)


def test_seed_selection_contract():
    econ = NodeEconomics(np.array([1.0, 2.0]), np.array([0.0, 0.0]))
    s = SeedSelection.of([1], econ, 3.0)
    assert s.total_cost == 2.0 and s.unspent == 1.0 and len(s) == 1
    with pytest.raises(ValueError):
        SeedSelection.of([0, 1], econ, 2.5)
    with pytest.raises(ValueError):
        SeedSelection((0, 0), 2.0, 5.0)


def test_estimate_from_values():
    e = Estimate.from_values([1.0, 3.0])
    assert e.mean == 2.0 and e.stderr == pytest.approx(1.0) and e.samples == 2


def test_single_edge_activation_frequency():
    net = SocialNetwork.from_edges(2, [(0, 1, 0.3)])
    live = live_masks(net, 7, "t", 0, 20000)
    freq = batch_reach(net, live, [0])[:, 1].mean()
    lo, hi = binomial_interval(0.3, 20000)
    assert lo < freq < hi


def test_live_masks_are_chunk_invariant():
    net, _ = instances.tree_network(), None
    whole = live_masks(net, 3, "mc", 0, 100)
    parts = np.vstack([live_masks(net, 3, "mc", 0, 37), live_masks(net, 3, "mc", 37, 100)])
    assert np.array_equal(whole, parts)


def test_live_masks_respect_residual_view():
    net = instances.tree_network()
    view = residual_view(net, [1])
    live = live_masks(view, 0, "x", 0, 500)
    assert not live[:, ~view.edge_alive].any()


def test_batch_reach_matches_simulate_ic():
    net = instances.tree_network()
    live = live_masks(net, 1, "x", 0, 200)
    reach = batch_reach(net, live, [0, 4])
    for r in range(200):
        assert set(np.flatnonzero(reach[r])) == simulate_ic(net, [0, 4], live[r]).activated


def test_estimate_profit_close_to_exact():
    net, econ = instances.tree_network(), instances.tree_economics()
    est = estimate_profit(net, econ, [0], 50000, 11)
    assert abs(est.mean - exact.exact_profit(net, econ, [0])) < 4 * est.stderr
    assert estimate_profit(net, econ, [], 10, 0).mean == 0.0


def test_marginal_gain_uses_common_random_numbers():
    net, econ = instances.tree_network(), instances.tree_economics()
    a = estimate_profit(net, econ, [0], 4000, 2).mean
    b = estimate_profit(net, econ, [0, 2], 4000, 2).mean
    assert marginal_profit_gain(net, econ, [0], 2, 4000, 2) == pytest.approx(b - a, abs=1e-9)
    with pytest.raises(ValueError):
        marginal_profit_gain(net, econ, [0], 0, 10, 2)


def test_influence_counts_nodes():
    assert influence(chain(), [0], 50, 0).mean == 4.0


def test_bad_seed_rejected():
    with pytest.raises(ValueError):
        simulate_ic(chain(), [9], np.random.default_rng(0))
    with pytest.raises(ValueError):
        simulate_to_timestep(chain(), [0], -1, np.random.default_rng(0))
