"""Exact evaluation by enumerating every live graph of a small network.

A live graph is a bitmask over the base network's edge indices (bit ``i`` set
means edge ``i`` is present).  Everything here is exponential in ``m`` and
refuses to run past :data:`ENUMERATION_CAP` edges.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .diffusion import batch_reach, simulate_to_timestep

log = logging.getLogger(__name__)

ENUMERATION_CAP = 22
SUBSET_CAP = 20
CHUNK = 1 << 14


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class LiveGraph:
    mask: int
    m: int

    def __post_init__(self):
        if self.mask < 0 or self.mask >= (1 << self.m):
            raise ValueError("mask has bits outside 0..m-1")

    @classmethod
    def from_edges(cls, network, pairs: Iterable[tuple[int, int]]) -> "LiveGraph":
        mask = 0
        for u, v in pairs:
            mask |= 1 << network.base.edge_index(u, v)
        return cls(mask, network.base.m)

    def as_array(self) -> np.ndarray:
        return ((self.mask >> np.arange(self.m)) & 1).astype(bool)

    def edge_ids(self) -> list[int]:
        return [i for i in range(self.m) if self.mask >> i & 1]


def _check_cap(m: int, cap: int = ENUMERATION_CAP):
    if m > cap:
        raise EnumerationTooLarge(f"{m} edges exceeds the enumeration cap of {cap}")


def mask_matrix(m: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows are live-graph masks ``start..stop-1`` expanded to bools."""
    if stop is None:
        _check_cap(m)
        stop = 1 << m
    ids = np.arange(start, stop, dtype=np.int64)
    return ((ids[:, None] >> np.arange(m)) & 1).astype(bool)


def mask_probabilities(network, masks: np.ndarray) -> np.ndarray:
    p = network.base.prob
    return np.where(masks, p, 1.0 - p).prod(axis=1)


def live_graph_probability(network, g: LiveGraph) -> float:
    """Product of p over present edges and (1 - p) over absent ones."""
    if g.m != network.base.m:
        raise ValueError("live graph does not match the network's edge count")
    return float(mask_probabilities(network, g.as_array()[None, :])[0])


def exact_reachable(network, g: LiveGraph, seeds) -> frozenset:
    live = g.as_array()[None, :]
    if network.m != network.base.m:
        live = live & network.edge_alive
    row = batch_reach(network, live, list(seeds))[0]
    return frozenset(np.flatnonzero(row).tolist())


def expected_benefit(network, econ, seeds, cap: int = ENUMERATION_CAP, edge_ids=None) -> float:
    """Exact expected benefit of the nodes reached from ``seeds``.

    Only the edges visible in ``network`` (or the explicit ``edge_ids``) are
    enumerated, so residual views are cheap when most edges are hidden.
    """
    seeds = list(seeds)
    if not seeds:
        return 0.0
    eids = np.asarray(network.edge_ids if edge_ids is None else edge_ids, dtype=np.int64)
    _check_cap(len(eids), cap)
    base = network.base
    total = 0.0
    k = len(eids)
    for start in range(0, 1 << k, CHUNK):
        sub = mask_matrix(k, start, min(1 << k, start + CHUNK))
        live = np.zeros((len(sub), base.m), dtype=bool)
        live[:, eids] = sub
        probs = np.where(sub, base.prob[eids], 1.0 - base.prob[eids]).prod(axis=1)
        total += float(probs @ (batch_reach(network, live, seeds) @ econ.benefit))
    return total


def exact_profit(network, econ, seeds, cap: int = ENUMERATION_CAP) -> float:
    """Expected benefit over all live graphs minus the seeds' cost."""
    seeds = list(seeds)
    return expected_benefit(network, econ, seeds, cap) - econ.total_cost(seeds)


# --------------------------------------------------------------------------
# Two-phase objective


@dataclass(frozen=True)
class PhaseTwoRule:
    """How the exact objective picks the second-phase seed set.

    ``per="observation"`` picks one set per observation, maximising the
    expected profit given what was observed.  ``per="live_graph"`` picks the
    best set for each live graph separately, i.e. with hindsight.
    ``candidates`` is ``"residual"`` (any inactive node) or ``"frontier"``
    (inactive nodes adjacent, in either direction, to an active one).
    ``must_purchase`` forbids the empty set whenever some candidate is
    affordable.
    """

    per: str = "observation"
    candidates: str = "residual"
    must_purchase: bool = False

    def __post_init__(self):
        if self.per not in ("observation", "live_graph"):
            raise ValueError(f"unknown rule scope {self.per!r}")
        if self.candidates not in ("residual", "frontier"):
            raise ValueError(f"unknown candidate pool {self.candidates!r}")


OBSERVED = PhaseTwoRule()
# Hindsight rule used by the hand-worked reference tables.
TABULATED = PhaseTwoRule(per="live_graph", candidates="frontier", must_purchase=True)


@dataclass
class TableRow:
    mask: int
    prob: float
    already_active: tuple
    recently_active: tuple
    s2: tuple
    profit: float

    @property
    def contribution(self) -> float:
        return self.prob * self.profit


@dataclass
class TwoPhaseTable:
    s1: tuple
    timestep: int
    budget2: float
    rule: PhaseTwoRule
    rows: list[TableRow]
    groups: dict = field(default_factory=dict)   # key -> (P(Y), conditional mean profit)

    @property
    def total(self) -> float:
        """Per-live-graph sum of P(G) * profit."""
        return float(sum(r.contribution for r in self.rows))

    @property
    def grouped_total(self) -> float:
        """Same quantity summed observation by observation."""
        return float(sum(py * val for py, val in self.groups.values()))


def observation_key(network, s1, d: int, live: np.ndarray):
    """Deterministic ``d``-round observation of one live graph."""
    obs = simulate_to_timestep(network, s1, d, live)
    key = (obs.already_active, obs.recently_active, obs.failed_edges, obs.live_edges)
    return key, obs


def _candidate_pool(network, active: frozenset, rule: PhaseTwoRule) -> list[int]:
    alive = [int(u) for u in network.nodes if u not in active]
    if rule.candidates == "residual":
        return alive
    nb = network.undirected_neighbors()
    front = set()
    for u in active:
        front |= nb[u]
    return sorted(front - active)


def _affordable_subsets(pool: Sequence[int], cost: np.ndarray, budget: float,
                        must_purchase: bool) -> list[tuple]:
    if len(pool) > SUBSET_CAP:
        raise EnumerationTooLarge(f"{len(pool)} candidates exceeds the subset cap of {SUBSET_CAP}")
    tol = 1e-9 * max(1.0, abs(budget))
    out = []
    for k in range(len(pool) + 1):
        for sub in itertools.combinations(pool, k):
            if cost[list(sub)].sum() <= budget + tol:
                out.append(sub)
    out.sort()
    if must_purchase and len(out) > 1:
        out = [s for s in out if s]
    return out


def _argmax_first(values: np.ndarray, tol: float = 1e-12) -> int:
    """First index within ``tol`` of the maximum; options come pre-sorted."""
    best = values.max()
    return int(np.flatnonzero(values >= best - tol * max(1.0, abs(best)))[0])


def exact_two_phase_table(network, econ, s1, d: int, b2: float, *, b1: float | None = None,
                          rule: PhaseTwoRule = OBSERVED, cap: int = ENUMERATION_CAP) -> TwoPhaseTable:
    """Enumerate live graphs, observe ``d`` rounds from ``s1``, pick S2, total profit.

    The phase-two budget is ``b2`` plus whatever ``s1`` leaves unspent of
    ``b1`` (if given).  Every row's profit is the full-graph profit of
    ``s1 | s2`` in that live graph.
    """
    base = network.base
    _check_cap(base.m, cap)
    s1 = tuple(sorted(set(int(u) for u in s1)))
    c1 = econ.total_cost(s1)
    budget2 = float(b2) + (max(0.0, b1 - c1) if b1 is not None else 0.0)
    masks = mask_matrix(base.m)
    if network.m != base.m:
        masks = masks & network.edge_alive
    probs = mask_probabilities(network, mask_matrix(base.m))

    groups: dict = {}
    for i in range(len(masks)):
        key, obs = observation_key(network, s1, d, masks[i])
        groups.setdefault(key, (obs, []))[1].append(i)

    rows: list[TableRow] = []
    summary = {}
    for key, (obs, idx) in groups.items():
        idx = np.asarray(idx)
        pool = _candidate_pool(network, obs.already_active, rule)
        options = _affordable_subsets(pool, econ.cost, budget2, rule.must_purchase)
        # profit of s1 | s2 for each option (rows) and each live graph in the group (cols)
        live = masks[idx]
        val = np.empty((len(options), len(idx)))
        for j, s2 in enumerate(options):
            seeds = list(s1) + list(s2)
            val[j] = batch_reach(network, live, seeds) @ econ.benefit - c1 - econ.total_cost(s2)
        py = float(probs[idx].sum())
        if rule.per == "observation":
            pick = np.full(len(idx), _argmax_first(val @ probs[idx]))
        else:
            pick = np.array([_argmax_first(val[:, c]) for c in range(len(idx))])
        chosen = val[pick, np.arange(len(idx))]
        summary[key] = (py, float(chosen @ probs[idx]) / py if py > 0 else 0.0)
        for c, i in enumerate(idx):
            rows.append(TableRow(int(i), float(probs[i]), tuple(sorted(obs.already_active)),
                                 tuple(sorted(obs.recently_active)), options[pick[c]],
                                 float(chosen[c])))
    rows.sort(key=lambda r: r.mask)
    return TwoPhaseTable(s1, d, budget2, rule, rows, summary)


def exact_two_phase_objective(network, econ, s1, d: int, b2: float, *, b1: float | None = None,
                              rule: PhaseTwoRule = OBSERVED, cap: int = ENUMERATION_CAP) -> float:
    """Expected final profit of ``s1`` when phase two follows ``rule``."""
    return exact_two_phase_table(network, econ, s1, d, b2, b1=b1, rule=rule, cap=cap).total


# --------------------------------------------------------------------------
# Structural properties of the objective


@dataclass
class ObjectiveSetting:
    """A small instance plus the budgets and rule that define f(S1)."""

    name: str
    network: object
    econ: object
    timestep: int
    phase1_budget: float
    total_budget: float
    rule: PhaseTwoRule = OBSERVED
    _cache: dict = field(default_factory=dict, repr=False)

    def f(self, s1) -> float:
        key = tuple(sorted(set(int(u) for u in s1)))
        if key not in self._cache:
            self._cache[key] = exact_two_phase_objective(
                self.network, self.econ, key, self.timestep,
                self.total_budget - self.phase1_budget, b1=self.phase1_budget, rule=self.rule)
        return self._cache[key]

    def label(self, nodes) -> str:
        labels = self.network.base.labels
        return "{" + ",".join(str(labels[u]) for u in sorted(nodes)) + "}"


def verify_sign_lemma(settings: Iterable[tuple[ObjectiveSetting, Sequence[int]]]) -> dict:
    """Evaluate f on each (setting, S1); the objective can take either sign."""
    values = {}
    for setting, s1 in settings:
        values[f"{setting.name} {setting.label(s1)}"] = setting.f(s1)
    vals = list(values.values())
    return {"values": values,
            "positive": any(v > 0 for v in vals),
            "negative": any(v < 0 for v in vals),
            "ok": any(v > 0 for v in vals) and any(v < 0 for v in vals)}


def _all_subsets(nodes):
    nodes = sorted(nodes)
    for k in range(len(nodes) + 1):
        yield from itertools.combinations(nodes, k)


@dataclass(frozen=True)
class MonotonicityWitness:
    setting: str
    base: tuple
    up: int
    down: int
    f_base: float
    f_up: float
    f_down: float


def find_nonmonotone_witness(search_space: Iterable[ObjectiveSetting],
                             tol: float = 1e-9) -> MonotonicityWitness | None:
    """Some S, u, v with f(S) < f(S + u) and f(S) > f(S + v)."""
    for st in search_space:
        nodes = [int(u) for u in st.network.nodes]
        for S in _all_subsets(nodes):
            fs = st.f(S)
            rest = [u for u in nodes if u not in S]
            up = [u for u in rest if st.f(S + (u,)) > fs + tol]
            down = [v for v in rest if st.f(S + (v,)) < fs - tol]
            if up and down:
                u, v = up[0], down[0]
                return MonotonicityWitness(st.name, S, u, v, fs, st.f(S + (u,)), st.f(S + (v,)))
    return None


@dataclass(frozen=True)
class ModularityWitness:
    """Marginal gains of ``i`` at ``small`` (a subset) and ``large`` (a superset)."""

    setting: str
    small: tuple
    large: tuple
    i: int
    gain_small: float
    gain_large: float


def find_nonsubmodular_witness(search_space: Iterable[ObjectiveSetting],
                               tol: float = 1e-9) -> dict:
    """Search S subset T, i outside T breaking diminishing, then increasing, returns.

    Returns ``{"submodular": witness | None, "supermodular": witness | None}``;
    a submodular witness has gain_small < gain_large, a supermodular one the
    reverse.
    """
    found: dict = {"submodular": None, "supermodular": None}
    for st in search_space:
        nodes = [int(u) for u in st.network.nodes]
        for T in _all_subsets(nodes):
            for S in _all_subsets(T):
                for i in nodes:
                    if i in T:
                        continue
                    gs = st.f(tuple(sorted(S + (i,)))) - st.f(S)
                    gt = st.f(tuple(sorted(T + (i,)))) - st.f(T)
                    if found["submodular"] is None and gs < gt - tol:
                        found["submodular"] = ModularityWitness(st.name, S, T, i, gs, gt)
                    if found["supermodular"] is None and gs > gt + tol:
                        found["supermodular"] = ModularityWitness(st.name, S, T, i, gs, gt)
                    if all(found.values()):
                        return found
    return found


def check_subadditivity(setting: ObjectiveSetting, trials: int, rng: np.random.Generator,
                        rel_tol: float = 1e-9) -> dict:
    """Sample (M, N) pairs and test f(M | N) <= f(M) + f(N)."""
    nodes = np.asarray(setting.network.nodes)
    report = {"pairs": 0, "violations": [], "skipped": []}
    f_empty = setting.f(())
    for _ in range(trials):
        M = tuple(sorted(nodes[rng.random(len(nodes)) < 0.5].tolist()))
        N = tuple(sorted(nodes[rng.random(len(nodes)) < 0.5].tolist()))
        fm, fn = setting.f(M), setting.f(N)
        if M == N and fm < 0:
            report["skipped"].append((M, N, "f(M) < 0 with M = N"))
            log.info("skipping M=N=%s: f(M)=%g < 0", M, fm)
            continue
        if (not M or not N) and f_empty < 0:
            report["skipped"].append((M, N, "f(empty) < 0"))
            continue
        fu = setting.f(tuple(sorted(set(M) | set(N))))
        report["pairs"] += 1
        rhs = fm + fn
        if fu > rhs + rel_tol * max(1.0, abs(rhs)):
            report["violations"].append((M, N, fu, rhs))
    report["ok"] = not report["violations"]
    return report


def best_subset_profit(network, econ, budget: float, candidates=None,
                       value: Callable | None = None) -> tuple[tuple, float]:
    """Exhaustive single-phase optimum over affordable subsets."""
    pool = sorted(int(u) for u in (network.nodes if candidates is None else candidates))
    value = value or (lambda S: exact_profit(network, econ, S))
    best, best_val = (), 0.0
    for S in _affordable_subsets(pool, econ.cost, budget, False):
        v = value(S)
        if v > best_val + 1e-12:
            best, best_val = S, v
    return best, best_val
