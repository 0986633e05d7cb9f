"""Budgeted seed selection: three greedy variants and five heuristics.

Every algorithm takes a :class:`SelectionContext` and returns a
:class:`~twophase.diffusion.SeedSelection` whose ``info`` dict carries the
decision trace and instrumented counters.
"""
from __future__ import annotations

import math
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import rng as _rng
from .diffusion import SeedSelection
from .estimators import ExactEstimator, SnapshotEstimator
from .graph import residual_view

log = logging.getLogger(__name__)

ALGORITHMS = ("SG", "DG", "StG", "HD", "SD", "DD", "HighCC", "Random")
GREEDY = ("SG", "DG", "StG")


@dataclass(frozen=True)
class AlgorithmChoice:
    name: str
    epsilon: float | None = None
    p: float | None = None

    def __post_init__(self):
        if self.name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.name!r}; choose from {ALGORITHMS}")
        if self.name == "StG":
            if self.epsilon is None or not 0 < self.epsilon < 1:
                raise ValueError("stochastic greedy needs epsilon in (0, 1)")
        elif self.epsilon is not None:
            object.__setattr__(self, "epsilon", None)
        if self.p is not None and not 0 < self.p <= 1:
            raise ValueError("degree-discount p must lie in (0, 1]")

    @classmethod
    def parse(cls, text: str, epsilon: float | None = None) -> "AlgorithmChoice":
        """``"SG"``, ``"StG"`` (with ``epsilon``) or ``"StG:0.1"``."""
        name, _, arg = text.partition(":")
        if name == "StG" and arg:
            epsilon = float(arg)
        return cls(name, epsilon)

    @property
    def needs_estimator(self) -> bool:
        return self.name in GREEDY

    def __str__(self) -> str:
        return f"StG:{self.epsilon:g}" if self.name == "StG" else self.name


@dataclass
class SelectionContext:
    """Where, with what money, and with which profit oracle to select.

    ``estimator`` is ``"snapshot"``, ``"exact"`` or a ready-made estimator
    object.  ``anchor`` lists nodes already spreading (they are not
    candidates and cost nothing).
    """

    view: object
    econ: object
    budget: float
    estimator_samples: int = 10_000
    master_seed: int = 0
    excluded: frozenset = frozenset()
    anchor: tuple = ()
    estimator: object = "snapshot"
    _est: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        self.excluded = frozenset(int(x) for x in self.excluded)
        if self.excluded - set(self.view.excluded):
            self.view = residual_view(self.view, self.excluded)
        self.excluded = frozenset(self.view.excluded)

    @property
    def candidates(self) -> list[int]:
        return [int(u) for u in self.view.nodes]

    def get_estimator(self):
        if self._est is None:
            if isinstance(self.estimator, str):
                if self.estimator == "snapshot":
                    self._est = SnapshotEstimator(self.view, self.econ, self.estimator_samples,
                                                  self.master_seed, anchor=self.anchor)
                elif self.estimator == "exact":
                    self._est = ExactEstimator(self.view, self.econ, anchor=self.anchor)
                else:
                    raise ValueError(f"unknown estimator {self.estimator!r}")
            else:
                self._est = self.estimator
        return self._est


def _result(ctx, nodes, **info) -> SeedSelection:
    return SeedSelection.of(nodes, ctx.econ, ctx.budget, **info)


def _tol(x: float) -> float:
    return 1e-9 * max(1.0, abs(x))


# --------------------------------------------------------------------------
# greedy family


def _greedy(ctx: SelectionContext, sampler=None, algo="SG") -> SeedSelection:
    est = ctx.get_estimator()
    cost = ctx.econ.cost
    remaining = float(ctx.budget)
    chosen: list[int] = []
    left = ctx.candidates
    trace, skipped = [], []
    iterations = evaluations = 0
    while True:
        afford = [u for u in left if cost[u] <= remaining + _tol(remaining)]
        skipped.extend(u for u in left if cost[u] > remaining + _tol(remaining))
        left = afford
        if not left:
            break
        pool = sampler(left) if sampler else left
        gains = est.gains(chosen, pool)
        evaluations += len(pool)
        iterations += 1
        j = int(np.argmax(gains / cost[pool]))
        u = pool[j]
        if gains[j] <= 0:
            trace.append((u, float(gains[j]), "stop"))
            break
        trace.append((u, float(gains[j]), "add"))
        chosen.append(u)
        remaining -= cost[u]
        left = [v for v in left if v != u]
    if skipped:
        log.debug("%s skipped unaffordable nodes %s", algo, skipped)
    return _result(ctx, chosen, algorithm=algo, trace=trace, skipped=skipped,
                   iterations=iterations, evaluations=evaluations)


def simple_greedy(ctx: SelectionContext) -> SeedSelection:
    """Repeatedly add the affordable node with the best gain-to-cost ratio.

    Stops when the best ratio is not positive.  A node that no longer fits
    the remaining budget is dropped for good and selection carries on with
    cheaper ones.  Ties go to the lower id.
    """
    return _greedy(ctx)


def stochastic_sample_size(n: int, k: int, epsilon: float) -> int:
    return int(math.ceil(n / max(1, k) * math.log(1.0 / epsilon)))


def stochastic_greedy(ctx: SelectionContext, epsilon: float) -> SeedSelection:
    """Greedy that scores only a random subset of candidates per step.

    Subset size is ceil((n / k) ln(1/epsilon)), k being the number of
    average-cost nodes the budget buys.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    cands = ctx.candidates
    n = len(cands)
    mean_cost = float(ctx.econ.cost[cands].mean()) if n else 1.0
    k = max(1, int(math.floor(ctx.budget / mean_cost)))
    size = stochastic_sample_size(n, k, epsilon)
    gen = _rng.generator(ctx.master_seed, "stochastic-greedy", epsilon)

    def sampler(left):
        if size >= len(left):
            return left
        return sorted(left[i] for i in gen.choice(len(left), size=size, replace=False))

    sel = _greedy(ctx, sampler, algo="StG")
    sel.info.update(sample_size=size, k=k, epsilon=epsilon)
    return sel


def double_greedy(ctx: SelectionContext) -> SeedSelection:
    """Single pass in id order growing S from empty and shrinking T from everything.

    u joins S when its add-ratio is at least its remove-ratio and it fits the
    remaining budget; otherwise it leaves T.
    """
    est = ctx.get_estimator()
    cost = ctx.econ.cost
    remaining = float(ctx.budget)
    S: list[int] = []
    T = ctx.candidates
    trace = []
    pairs = 0
    for u in ctx.candidates:
        gain = float(est.gains(S, [u])[0])
        loss = float(est.losses(T, [u])[0])     # phi(T - u) - phi(T)
        pairs += 1
        r_plus, r_minus = gain / cost[u], -loss / cost[u]
        if r_plus >= r_minus and cost[u] <= remaining + _tol(remaining):
            S.append(u)
            remaining -= cost[u]
            trace.append((u, r_plus, r_minus, "add"))
        else:
            T = [v for v in T if v != u]
            trace.append((u, r_plus, r_minus, "drop"))
    assert set(S) <= set(T)
    return _result(ctx, S, algorithm="DG", trace=trace, T=tuple(T), pair_evaluations=pairs,
                   evaluations=2 * pairs)


# --------------------------------------------------------------------------
# heuristics


def _take_in_order(ctx, order, algo, **info) -> SeedSelection:
    cost = ctx.econ.cost
    remaining = float(ctx.budget)
    chosen, skipped = [], []
    for u in order:
        if cost[u] <= remaining + _tol(remaining):
            chosen.append(int(u))
            remaining -= cost[u]
        else:
            skipped.append(int(u))
    return _result(ctx, chosen, algorithm=algo, skipped=skipped, **info)


def high_degree(ctx: SelectionContext) -> SeedSelection:
    """Highest out-degree first (ties: lower id), adding whatever still fits."""
    cands = ctx.candidates
    deg = ctx.view.out_degree
    order = sorted(cands, key=lambda u: (-deg[u], u))
    return _take_in_order(ctx, order, "HD")


def _pick_max(score: dict, left: set) -> int:
    return min(left, key=lambda u: (-score[u], u))


def _discounting(ctx, algo, update):
    """Shared loop for degree-discount style heuristics."""
    cost = ctx.econ.cost
    remaining = float(ctx.budget)
    left = set(ctx.candidates)
    score = {u: float(ctx.view.out_degree[u]) for u in left}
    chosen, skipped = [], []
    while left:
        u = _pick_max(score, left)
        left.discard(u)
        if cost[u] > remaining + _tol(remaining):
            skipped.append(u)
            continue
        chosen.append(u)
        remaining -= cost[u]
        for v in ctx.view.out_neighbors(u).tolist():
            if v in left:
                update(score, v)
    return chosen, skipped


def single_discount(ctx: SelectionContext) -> SeedSelection:
    """Like high degree, but each pick lowers its out-neighbours' degree by one."""
    def update(score, v):
        score[v] -= 1.0
    chosen, skipped = _discounting(ctx, "SD", update)
    return _result(ctx, chosen, algorithm="SD", skipped=skipped)


def degree_discount_score(d: float, t: float, p: float) -> float:
    return d - 2 * t - (d - t) * t * p


def degree_discount(ctx: SelectionContext, p: float | None = None) -> SeedSelection:
    """Degree discount with a single propagation probability ``p``.

    Defaults to the mean edge probability of the view.
    """
    if p is None:
        p = ctx.view.mean_probability() or 0.0
    deg = ctx.view.out_degree
    t: dict[int, int] = {}

    def update(score, v):
        t[v] = t.get(v, 0) + 1
        score[v] = degree_discount_score(float(deg[v]), t[v], p)
    chosen, skipped = _discounting(ctx, "DD", update)
    return _result(ctx, chosen, algorithm="DD", skipped=skipped, p=p)


def clustering_coefficients(view) -> tuple[np.ndarray, np.ndarray]:
    """Local clustering and degree on the undirected simple graph under ``view``."""
    n = view.base.n
    src, dst = np.asarray(view.src), np.asarray(view.dst)
    A = sp.coo_matrix((np.ones(2 * len(src)), (np.r_[src, dst], np.r_[dst, src])), shape=(n, n)).tocsr()
    A.data[:] = 1.0
    A.sum_duplicates()
    A.data[:] = 1.0
    deg = np.asarray(A.sum(axis=1)).ravel()
    tri = np.asarray((A @ A).multiply(A).sum(axis=1)).ravel() / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        cc = np.where(deg > 1, 2 * tri / (deg * (deg - 1)), 0.0)
    return cc, deg


def high_clustering_coefficient(ctx: SelectionContext) -> SeedSelection:
    cc, deg = clustering_coefficients(ctx.view)
    order = sorted(ctx.candidates, key=lambda u: (-cc[u], -deg[u], u))
    return _take_in_order(ctx, order, "HighCC")


def random_selection(ctx: SelectionContext) -> SeedSelection:
    """Uniformly random order; keep each draw that still fits the budget."""
    cands = ctx.candidates
    gen = _rng.generator(ctx.master_seed, "random-selection")
    order = [cands[i] for i in gen.permutation(len(cands))]
    return _take_in_order(ctx, order, "Random")


def select(ctx: SelectionContext, choice: AlgorithmChoice | str) -> SeedSelection:
    if isinstance(choice, str):
        choice = AlgorithmChoice.parse(choice)
    name = choice.name
    if name == "SG":
        return simple_greedy(ctx)
    if name == "DG":
        return double_greedy(ctx)
    if name == "StG":
        return stochastic_greedy(ctx, choice.epsilon)
    if name == "HD":
        return high_degree(ctx)
    if name == "SD":
        return single_discount(ctx)
    if name == "DD":
        return degree_discount(ctx, choice.p)
    if name == "HighCC":
        return high_clustering_coefficient(ctx)
    return random_selection(ctx)
