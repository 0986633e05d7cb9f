"""Independent Cascade simulation and Monte Carlo profit estimation.

Edge coins come from either a :class:`numpy.random.Generator` (flipped lazily,
one draw per attempt) or a boolean array over the base network's edges that
fixes every edge's outcome up front (a sampled live graph).  Both give the
same distribution over cascades; the array form lets several runs share one
realisation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import rng as _rng

MC_LABEL = "mc"
CHUNK = 4096


@dataclass(frozen=True)
class SeedSelection:
    """Ordered seed set with its cost and the budget it was chosen under."""

    nodes: tuple[int, ...]
    total_cost: float
    budget: float
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(u) for u in self.nodes))
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("seed nodes must be distinct")
        if self.total_cost > self.budget + 1e-9 * max(1.0, abs(self.budget)):
            raise ValueError(f"seed cost {self.total_cost} exceeds budget {self.budget}")

    @classmethod
    def of(cls, nodes, econ, budget: float, **info) -> "SeedSelection":
        return cls(tuple(nodes), econ.total_cost(nodes), float(budget), info)

    @property
    def unspent(self) -> float:
        return max(0.0, self.budget - self.total_cost)

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


@dataclass(frozen=True)
class PartialObservation:
    """State of a cascade after ``timestep`` rounds.

    ``failed_edges`` and ``live_edges`` hold ``(u, v)`` pairs whose single
    activation attempt has already happened.
    """

    already_active: frozenset
    recently_active: frozenset
    failed_edges: frozenset
    live_edges: frozenset
    timestep: int
    rounds_run: int = 0

    def __post_init__(self):
        if not self.recently_active <= self.already_active:
            raise ValueError("recently active nodes must be active")
        if self.failed_edges & self.live_edges:
            raise ValueError("an edge cannot both fail and succeed")
        for u, _ in self.failed_edges | self.live_edges:
            if u not in self.already_active:
                raise ValueError(f"tried edge from inactive node {u}")

    @property
    def quiescent(self) -> bool:
        return not self.recently_active


@dataclass(frozen=True)
class DiffusionOutcome:
    activated: frozenset
    rounds: int
    newly_active_per_round: tuple
    tried_edges: frozenset = frozenset()
    live_edges: frozenset = frozenset()


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    samples: int

    @classmethod
    def from_values(cls, values) -> "Estimate":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            raise ValueError("no samples")
        se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
        return cls(float(v.mean()), se, int(v.size))


class _Coins:
    def __init__(self, source, prob: np.ndarray):
        self.prob = prob
        if isinstance(source, np.random.Generator):
            self.gen, self.mask = source, None
        else:
            self.gen, self.mask = None, np.asarray(source, dtype=bool)
            if self.mask.shape != prob.shape:
                raise ValueError("live-edge mask must cover every base edge")

    def flip(self, eids: np.ndarray) -> np.ndarray:
        if self.mask is not None:
            return self.mask[eids]
        return self.gen.random(len(eids)) < self.prob[eids]


def _check_seeds(network, seeds) -> list[int]:
    seeds = sorted(set(int(s) for s in seeds))
    for s in seeds:
        if not (0 <= s < network.base.n) or not network.alive[s]:
            raise ValueError(f"seed {s} is not a node of the network")
    return seeds


def _run(network, active: set, frontier: set, coins: _Coins, max_rounds: int | None,
         tried_failed: frozenset = frozenset()):
    """Advance the cascade; returns per-round new sets and attempted edges."""
    base = network.base
    src, dst = base.src, base.dst
    edge_alive = network.edge_alive
    tried: dict[int, bool] = {}
    rounds: list[frozenset] = []
    cap = base.n if max_rounds is None else max_rounds
    while frontier and len(rounds) < cap:
        cand = []
        for u in sorted(frontier):
            eids = base.order[base.indptr[u]:base.indptr[u + 1]]
            cand.append(eids)
        eids = np.concatenate(cand) if cand else np.empty(0, np.int64)
        if len(eids):
            eids = eids[edge_alive[eids]]
        targets = dst[eids]
        keep = np.fromiter((t not in active for t in targets.tolist()), bool, len(targets))
        eids = eids[keep]
        if tried_failed:
            eids = np.array([e for e in eids.tolist()
                             if (int(src[e]), int(dst[e])) not in tried_failed], dtype=np.int64)
        ok = coins.flip(eids) if len(eids) else np.empty(0, bool)
        for e, s in zip(eids.tolist(), ok.tolist()):
            if e in tried:
                raise AssertionError(f"edge {e} attempted twice")
            tried[e] = s
        new = frozenset(int(t) for t in dst[eids[ok]].tolist()) - active
        if not new:
            break
        active |= new
        rounds.append(new)
        frontier = set(new)
    if max_rounds is None and frontier and len(rounds) >= base.n:
        raise AssertionError("cascade exceeded n rounds")
    return rounds, tried


def _edge_pairs(network, eids) -> frozenset:
    base = network.base
    return frozenset((int(base.src[e]), int(base.dst[e])) for e in eids)


def simulate_ic(network, seeds: Iterable[int], rng_stream) -> DiffusionOutcome:
    """One Independent Cascade run from ``seeds`` to quiescence."""
    seeds = _check_seeds(network, seeds)
    coins = _Coins(rng_stream, network.base.prob)
    active = set(seeds)
    rounds, tried = _run(network, active, set(seeds), coins, None)
    return DiffusionOutcome(
        activated=frozenset(active),
        rounds=len(rounds),
        newly_active_per_round=tuple(rounds),
        tried_edges=_edge_pairs(network, tried),
        live_edges=_edge_pairs(network, [e for e, s in tried.items() if s]),
    )


def simulate_to_timestep(network, seeds: Iterable[int], d: int, rng_stream) -> PartialObservation:
    """Run ``d`` rounds (or until quiescent) and report what was observed.

    Round 0 is the seeding itself, so ``d = 0`` observes the seeds as both
    already and recently active with no edge tried yet.  If the cascade dies
    out before round ``d`` the recently-active set is empty.
    """
    if d < 0:
        raise ValueError("timestep must be non-negative")
    seeds = _check_seeds(network, seeds)
    coins = _Coins(rng_stream, network.base.prob)
    active = set(seeds)
    rounds, tried = _run(network, active, set(seeds), coins, d)
    if d == 0:
        recent = frozenset(seeds)
    elif len(rounds) == d:
        recent = rounds[-1]
    else:
        recent = frozenset()
    return PartialObservation(
        already_active=frozenset(active),
        recently_active=recent,
        failed_edges=_edge_pairs(network, [e for e, s in tried.items() if not s]),
        live_edges=_edge_pairs(network, [e for e, s in tried.items() if s]),
        timestep=d,
        rounds_run=len(rounds),
    )


def continue_diffusion(network, observation: PartialObservation, extra_seeds: Iterable[int],
                       rng_stream) -> DiffusionOutcome:
    """Resume a cascade from the recently-active nodes plus fresh seeds.

    Fresh seeds already inside the observed active set are ignored.  Edges the
    observation marks as failed are never attempted again.
    """
    extra = set(_check_seeds(network, extra_seeds)) - set(observation.already_active)
    coins = _Coins(rng_stream, network.base.prob)
    active = set(observation.already_active) | extra
    frontier = set(observation.recently_active) | extra
    rounds, tried = _run(network, active, frontier, coins, None,
                         tried_failed=observation.failed_edges)
    tried_pairs = _edge_pairs(network, tried)
    overlap = tried_pairs & (observation.failed_edges | observation.live_edges)
    if overlap:
        raise AssertionError(f"edges attempted in both phases: {sorted(overlap)[:3]}")
    return DiffusionOutcome(
        activated=frozenset(active),
        rounds=len(rounds),
        newly_active_per_round=tuple(rounds),
        tried_edges=tried_pairs,
        live_edges=_edge_pairs(network, [e for e, s in tried.items() if s]),
    )


def live_masks(network, master_seed: int, label, start: int, stop: int) -> np.ndarray:
    """Sampled live-edge masks for replicates ``start..stop-1`` (rows over base edges).

    Edges hidden by a residual view are never live.
    """
    base = network.base
    u = _rng.replicate_uniforms(master_seed, label, start, stop, base.m)
    live = u < base.prob
    if network.m != base.m:
        live &= network.edge_alive
    return live


def batch_reach(network, live: np.ndarray, seeds) -> np.ndarray:
    """Nodes reached from ``seeds`` in each row's live graph, as an (R, n) bool array."""
    base = network.base
    R = live.shape[0]
    active = np.zeros((R, base.n), dtype=bool)
    seeds = list(seeds)
    if not seeds or R == 0:
        return active
    active[:, seeds] = True
    frontier = active.copy()
    src, dst = base.src, base.dst
    for _ in range(base.n):
        hits = frontier[:, src] & live & ~active[:, dst]
        rr, ee = np.nonzero(hits)
        if len(rr) == 0:
            break
        new = np.zeros_like(active)
        new[rr, dst[ee]] = True
        active |= new
        frontier = new
    return active


def _replicate_benefits(network, econ, seeds, samples: int, master_seed: int) -> np.ndarray:
    seeds = _check_seeds(network, seeds)
    out = np.empty(samples)
    for start in range(0, samples, CHUNK):
        stop = min(samples, start + CHUNK)
        live = live_masks(network, master_seed, MC_LABEL, start, stop)
        out[start:stop] = batch_reach(network, live, seeds) @ econ.benefit
    return out


def estimate_profit(network, econ, seeds: Iterable[int], samples: int, master_seed: int) -> Estimate:
    """Monte Carlo profit: mean benefit of the activated set minus seed cost.

    Replicate ``r`` always sees the same live graph for a given
    ``master_seed``, whatever the chunking.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    seeds = list(seeds)
    if not seeds:
        return Estimate(0.0, 0.0, samples)
    vals = _replicate_benefits(network, econ, seeds, samples, master_seed) - econ.total_cost(seeds)
    return Estimate.from_values(vals)


def marginal_profit_gain(network, econ, current: Iterable[int], candidate: int, samples: int,
                         master_seed: int) -> float:
    """phi(S + u) - phi(S) with both terms driven by the same replicates."""
    current = list(current)
    if candidate in current:
        raise ValueError("candidate already in the seed set")
    with_u = _replicate_benefits(network, econ, current + [candidate], samples, master_seed)
    without = (_replicate_benefits(network, econ, current, samples, master_seed)
               if current else np.zeros(samples))
    return float(np.mean(with_u - without)) - float(econ.cost[candidate])


def influence(network, seeds, samples: int, master_seed: int) -> Estimate:
    """Expected number of activated nodes."""
    seeds = _check_seeds(network, seeds)
    vals = np.empty(samples)
    for start in range(0, samples, CHUNK):
        stop = min(samples, start + CHUNK)
        live = live_masks(network, master_seed, MC_LABEL, start, stop)
        vals[start:stop] = batch_reach(network, live, seeds).sum(axis=1)
    return Estimate.from_values(vals)
