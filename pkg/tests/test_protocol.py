import numpy as np
import pytest

from twophase import exact, instances
from twophase.diffusion import continue_diffusion
from twophase.graph import residual_view
from twophase.protocol import TwoPhaseConfig, run_single_phase, run_two_phase, world_masks
from twophase.selection import SelectionContext, select


def test_config_budgets_and_validation():
    cfg = TwoPhaseConfig(1000, 0.3, 4)
    assert cfg.phase1_budget == pytest.approx(300) and cfg.phase2_budget == pytest.approx(700)
    assert cfg.mode == "reselect"
    for bad in [dict(split_ratio=0.0), dict(split_ratio=1.0), dict(timestep=-1),
                dict(replications=0)]:
        args = dict(total_budget=10, split_ratio=0.5, timestep=1) | bad
        with pytest.raises(ValueError):
            TwoPhaseConfig(**args)


def _enumerated_protocol(net, econ, cfg):
    """Expected realised profit of the exact-estimator protocol, by enumeration."""
    ctx1 = SelectionContext(net, econ, cfg.phase1_budget, estimator="exact")
    s1 = select(ctx1, cfg.algorithm)
    b2 = cfg.phase2_budget + max(0.0, cfg.phase1_budget - s1.total_cost)
    masks = exact.mask_matrix(net.m)
    probs = exact.mask_probabilities(net, masks)
    memo, total = {}, 0.0
    for live, p in zip(masks, probs):
        key, obs = exact.observation_key(net, s1.nodes, cfg.timestep, live)
        if key not in memo:
            ctx2 = SelectionContext(residual_view(net, obs.already_active), econ, b2,
                                    anchor=tuple(sorted(obs.recently_active)), estimator="exact")
            memo[key] = select(ctx2, cfg.algorithm)
        s2 = memo[key]
        out = continue_diffusion(net, obs, s2.nodes, live)
        total += p * (econ.total_benefit(out.activated) - s1.total_cost - s2.total_cost)
    return total


@pytest.mark.parametrize("algo", ["SG", "DG"])
def test_realised_protocol_matches_enumeration(algo):
    net, econ = instances.tree_network(), instances.tree_economics()
    cfg = TwoPhaseConfig(5.0, 0.4, 1, algo, replications=20000, master_seed=3, estimator="exact")
    res = run_two_phase(net, econ, cfg, with_single=False)
    target = _enumerated_protocol(net, econ, cfg)
    assert abs(res.realized_profit.mean - target) < 4 * res.realized_profit.stderr


def test_two_phase_pairs_with_single_phase_worlds(lm):
    net, econ = lm
    cfg = TwoPhaseConfig(800, 0.5, 2, "SG", estimator_samples=300, replications=6, master_seed=2)
    res = run_two_phase(net, econ, cfg)
    single = run_single_phase(net, econ, 800, "SG", 300, 2, 6)
    assert np.array_equal(res.single.per_replication, single.per_replication)
    assert res.s1.total_cost <= cfg.phase1_budget + 1e-9
    assert len(res.per_replication) == 6
    assert res.rounds_total >= res.rounds_phase1


def test_two_phase_is_deterministic(lm):
    net, econ = lm
    cfg = TwoPhaseConfig(600, 0.3, 1, "DG", estimator_samples=200, replications=4, master_seed=9)
    a, b = run_two_phase(net, econ, cfg), run_two_phase(net, econ, cfg)
    assert np.array_equal(a.per_replication, b.per_replication)
    assert a.s1.nodes == b.s1.nodes


def test_frozen_mode_reuses_first_selection():
    net, econ = instances.tree_network(), instances.tree_economics()
    kw = dict(total_budget=5.0, split_ratio=0.4, timestep=1, algorithm="SG", master_seed=1,
              estimator="exact")
    first = run_two_phase(net, econ, TwoPhaseConfig(replications=1, **kw), with_single=False).s2
    cfg = TwoPhaseConfig(replications=200, reselect=False, **kw)
    res = run_two_phase(net, econ, cfg, with_single=False)
    assert cfg.mode == "frozen" and res.s2.info["frozen"]
    assert set(res.s2.nodes) <= set(first.nodes)


def test_world_masks_are_shared():
    net = instances.tree_network()
    assert np.array_equal(world_masks(net, 4, 10), world_masks(net, 4, 10))
    assert not np.array_equal(world_masks(net, 4, 50), world_masks(net, 5, 50))
