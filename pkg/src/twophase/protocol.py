"""Single-phase and two-phase seeding protocols, simulated end to end.

Replication ``r`` draws one live graph (the "world") from the substream
``(master_seed, "world")`` at counter ``r``.  Phase one, the observation, the
continuation and the single-phase baseline all read their coins from that
same world, so two-phase and single-phase profits are paired replication by
replication and no edge can ever be flipped twice.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .diffusion import (Estimate, SeedSelection, batch_reach, continue_diffusion, live_masks,
                        simulate_ic, simulate_to_timestep)
from .graph import residual_view
from .selection import AlgorithmChoice, SelectionContext, select

WORLD = "world"


@dataclass(frozen=True)
class TwoPhaseConfig:
    total_budget: float
    split_ratio: float
    timestep: int
    algorithm: AlgorithmChoice = AlgorithmChoice("SG")
    estimator_samples: int = 10_000
    replications: int = 50
    master_seed: int = 0
    reselect: bool = True          # False: choose S2 once, on replication 0
    estimator: str = "snapshot"
    world_seed: int | None = None  # defaults to master_seed
    select_seed: int | None = None

    @property
    def worlds_from(self) -> int:
        return self.master_seed if self.world_seed is None else self.world_seed

    @property
    def selection_seed(self) -> int:
        return _selection_seed(self.master_seed) if self.select_seed is None else self.select_seed

    def __post_init__(self):
        if isinstance(self.algorithm, str):
            object.__setattr__(self, "algorithm", AlgorithmChoice.parse(self.algorithm))
        if not 0 < self.split_ratio < 1:
            raise ValueError("split ratio must lie strictly between 0 and 1")
        if self.timestep < 0:
            raise ValueError("timestep must be non-negative")
        if self.total_budget < 0:
            raise ValueError("budget must be non-negative")
        if self.replications < 1:
            raise ValueError("need at least one replication")

    @property
    def phase1_budget(self) -> float:
        return self.split_ratio * self.total_budget

    @property
    def phase2_budget(self) -> float:
        return self.total_budget - self.phase1_budget

    @property
    def mode(self) -> str:
        return "reselect" if self.reselect else "frozen"


@dataclass
class SinglePhaseResult:
    selection: SeedSelection
    profit: Estimate
    mean_rounds: float
    per_replication: np.ndarray = field(repr=False, default=None)
    wall_times: dict = field(default_factory=dict)


@dataclass
class TwoPhaseResult:
    s1: SeedSelection
    observation_summary: dict
    s2: SeedSelection
    realized_profit: Estimate
    single_phase_profit: Estimate | None
    rounds_phase1: int
    rounds_total: int
    wall_times: dict = field(default_factory=dict)
    mean_rounds_total: float = 0.0
    mean_seed_count: float = 0.0
    per_replication: np.ndarray = field(repr=False, default=None)
    single: SinglePhaseResult | None = None


def world_masks(network, master_seed: int, replications: int) -> np.ndarray:
    return live_masks(network, master_seed, WORLD, 0, replications)


def _selection_seed(master_seed: int) -> int:
    # phase one and the single-phase baseline share one estimator snapshot
    return _rng.stream_key(master_seed, "select")


def run_single_phase(network, econ, budget: float, algorithm, samples: int = 10_000,
                     master_seed: int = 0, replications: int = 50,
                     estimator: str = "snapshot", world_seed: int | None = None,
                     select_seed: int | None = None) -> SinglePhaseResult:
    """Select once under the whole budget, then diffuse in every world."""
    if isinstance(algorithm, str):
        algorithm = AlgorithmChoice.parse(algorithm)
    t0 = time.perf_counter()
    seed = _selection_seed(master_seed) if select_seed is None else select_seed
    ctx = SelectionContext(network, econ, budget, samples, seed, estimator=estimator)
    sel = select(ctx, algorithm)
    t1 = time.perf_counter()
    worlds = world_masks(network, master_seed if world_seed is None else world_seed, replications)
    reached = batch_reach(network, worlds, list(sel.nodes))
    per = reached @ econ.benefit - sel.total_cost
    rounds = [simulate_ic(network, sel.nodes, w).rounds for w in worlds] if len(sel) else [0]
    t2 = time.perf_counter()
    return SinglePhaseResult(sel, Estimate.from_values(per), float(np.mean(rounds)), per,
                             {"select": t1 - t0, "diffuse": t2 - t1})


def run_two_phase(network, econ, config: TwoPhaseConfig, with_single: bool = True) -> TwoPhaseResult:
    """Phase one under B1, watch ``timestep`` rounds, phase two on what is left.

    Phase two may spend B2 plus whatever phase one left unspent, and only
    picks nodes that are still inactive; the recently activated nodes keep
    spreading alongside the new seeds.
    """
    cfg = config
    times = {"select1": 0.0, "observe": 0.0, "select2": 0.0, "diffuse": 0.0}
    t = time.perf_counter()
    ctx1 = SelectionContext(network, econ, cfg.phase1_budget, cfg.estimator_samples,
                            cfg.selection_seed, estimator=cfg.estimator)
    s1 = select(ctx1, cfg.algorithm)
    times["select1"] = time.perf_counter() - t
    budget2 = cfg.phase2_budget + max(0.0, cfg.phase1_budget - s1.total_cost)

    worlds = world_masks(network, cfg.worlds_from, cfg.replications)
    profits = np.empty(cfg.replications)
    rounds_total = np.empty(cfg.replications)
    seed_counts = np.empty(cfg.replications)
    memo: dict = {}
    frozen: SeedSelection | None = None
    s2 = obs = out = None
    for r in range(cfg.replications):
        live = worlds[r]
        t = time.perf_counter()
        obs = simulate_to_timestep(network, s1.nodes, cfg.timestep, live)
        times["observe"] += time.perf_counter() - t

        t = time.perf_counter()
        key = (obs.already_active, obs.recently_active, obs.failed_edges, obs.live_edges)
        if not cfg.reselect and frozen is not None:
            keep = [u for u in frozen.nodes if u not in obs.already_active]
            s2 = SeedSelection.of(keep, econ, budget2, algorithm=str(cfg.algorithm), frozen=True)
        elif cfg.estimator == "exact" and key in memo:
            s2 = memo[key]
        else:
            ctx2 = SelectionContext(residual_view(network, obs.already_active), econ, budget2,
                                    cfg.estimator_samples,
                                    _rng.stream_key(cfg.master_seed, r, "phase2"),
                                    anchor=tuple(sorted(obs.recently_active)),
                                    estimator=cfg.estimator)
            s2 = select(ctx2, cfg.algorithm)
            memo[key] = s2
            if frozen is None:
                frozen = s2
        times["select2"] += time.perf_counter() - t
        if set(s2.nodes) & obs.already_active:
            raise AssertionError("phase-two seed inside the observed active set")

        t = time.perf_counter()
        out = continue_diffusion(network, obs, s2.nodes, live)
        times["diffuse"] += time.perf_counter() - t
        profits[r] = econ.total_benefit(out.activated) - s1.total_cost - s2.total_cost
        rounds_total[r] = obs.rounds_run + out.rounds
        seed_counts[r] = len(s1) + len(s2)

    single = None
    if with_single:
        single = run_single_phase(network, econ, cfg.total_budget, cfg.algorithm,
                                  cfg.estimator_samples, cfg.master_seed, cfg.replications,
                                  cfg.estimator, cfg.world_seed, cfg.select_seed)
    return TwoPhaseResult(
        s1=s1,
        observation_summary={"already_active": len(obs.already_active),
                             "recently_active": len(obs.recently_active),
                             "failed_edges": len(obs.failed_edges),
                             "live_edges": len(obs.live_edges)},
        s2=s2,
        realized_profit=Estimate.from_values(profits),
        single_phase_profit=single.profit if single else None,
        rounds_phase1=obs.rounds_run,
        rounds_total=obs.rounds_run + out.rounds,
        wall_times=times,
        mean_rounds_total=float(rounds_total.mean()),
        mean_seed_count=float(seed_counts.mean()),
        per_replication=profits,
        single=single,
    )
