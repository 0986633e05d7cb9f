"""Directed probabilistic social networks, node economics and dataset ingestion."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import rng as _rng

log = logging.getLogger(__name__)

TRIVALENCY = (0.1, 0.01, 0.001)


class EdgeListError(ValueError):
    """Raised for malformed edge-list input."""


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


class _GraphMixin:
    """Queries shared by a full network and its residual views."""

    def out_neighbors(self, u: int) -> np.ndarray:
        lo, hi = self.base.indptr[u], self.base.indptr[u + 1]
        eids = self.base.order[lo:hi]
        if self.m != self.base.m:
            eids = eids[self.edge_alive[eids]]
        return self.base.dst[eids]

    @property
    def out_adjacency(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.base.n)]
        for s, t, p in zip(self.src.tolist(), self.dst.tolist(), self.prob.tolist()):
            adj[s].append((t, p))
        return adj

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.src.tolist(), self.dst.tolist(), self.prob.tolist()))

    def undirected_neighbors(self) -> list[set[int]]:
        nb: list[set[int]] = [set() for _ in range(self.base.n)]
        for s, t in zip(self.src.tolist(), self.dst.tolist()):
            nb[s].add(t)
            nb[t].add(s)
        return nb

    def mean_probability(self) -> float:
        return float(self.prob.mean()) if self.m else 0.0


class SocialNetwork(_GraphMixin):
    """Directed simple graph with an influence probability on every edge.

    Nodes are dense ids ``0..n-1``.  ``labels[i]`` is the raw id node ``i`` had
    in its source file.  Probabilities may be NaN straight after ingestion of a
    two-column edge list; :func:`assign_weights` fills them in.
    """

    def __init__(self, n: int, src, dst, prob=None, labels: Sequence | None = None,
                 report: dict | None = None):
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if prob is None:
            prob = np.full(len(src), np.nan)
        prob = np.asarray(prob, dtype=float)
        if not (len(src) == len(dst) == len(prob)):
            raise ValueError("src, dst and prob must have equal length")
        if len(src) and (src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= n):
            raise ValueError("edge endpoint outside 0..n-1")
        assigned = ~np.isnan(prob)
        if np.any((prob[assigned] <= 0) | (prob[assigned] > 1)):
            raise ValueError("edge probabilities must lie in (0, 1]")
        if np.any(src == dst):
            raise ValueError("self-loops are not allowed")
        keys = src * n + dst
        if len(np.unique(keys)) != len(keys):
            raise ValueError("duplicate directed edge")
        self.n = int(n)
        self.src = _frozen(src, np.int64)
        self.dst = _frozen(dst, np.int64)
        self.prob = _frozen(prob, float)
        self.labels = list(range(n)) if labels is None else list(labels)
        self.report = dict(report or {})
        self.order = _frozen(np.argsort(src, kind="stable"), np.int64)
        self.indptr = _frozen(np.concatenate([[0], np.cumsum(np.bincount(src, minlength=n))]), np.int64)
        self.out_degree = _frozen(np.bincount(src, minlength=n), np.int64)
        self.in_degree = _frozen(np.bincount(dst, minlength=n), np.int64)
        self.alive = _frozen(np.ones(n, dtype=bool), bool)
        self.nodes = _frozen(np.arange(n), np.int64)
        self.edge_ids = _frozen(np.arange(len(src)), np.int64)
        self.edge_alive = _frozen(np.ones(len(src), dtype=bool), bool)
        self.excluded: frozenset[int] = frozenset()
        self._edge_index = None

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence], labels=None) -> "SocialNetwork":
        """Build from ``(u, v)`` or ``(u, v, p)`` tuples."""
        edges = [tuple(e) for e in edges]
        src = [e[0] for e in edges]
        dst = [e[1] for e in edges]
        prob = [e[2] if len(e) > 2 else np.nan for e in edges]
        return cls(n, src, dst, prob, labels=labels)

    @property
    def base(self) -> "SocialNetwork":
        return self

    @property
    def m(self) -> int:
        return len(self.src)

    @property
    def has_probabilities(self) -> bool:
        return not np.isnan(self.prob).any()

    def edge_index(self, u: int, v: int) -> int:
        """Index of directed edge ``(u, v)``; ``KeyError`` if absent."""
        if self._edge_index is None:
            self._edge_index = {(s, t): i for i, (s, t) in
                                enumerate(zip(self.src.tolist(), self.dst.tolist()))}
        return self._edge_index[(u, v)]

    def with_probabilities(self, prob) -> "SocialNetwork":
        return SocialNetwork(self.n, self.src, self.dst, prob, labels=self.labels, report=self.report)

    def residual(self, excluded: Iterable[int]) -> "NetworkView":
        return residual_view(self, excluded)

    def __repr__(self) -> str:
        return f"SocialNetwork(n={self.n}, m={self.m})"


class NetworkView(_GraphMixin):
    """Read-only residual view: excluded nodes and every incident edge are hidden.

    Node ids stay those of the base network; ``alive`` marks surviving nodes
    and degree arrays are indexed by base id (zero for excluded nodes).
    """

    def __init__(self, base: SocialNetwork, excluded: Iterable[int]):
        self.base = base
        self.excluded = frozenset(int(x) for x in excluded)
        alive = np.ones(base.n, dtype=bool)
        if self.excluded:
            alive[list(self.excluded)] = False
        keep = alive[base.src] & alive[base.dst]
        self.alive = _frozen(alive, bool)
        self.edge_alive = _frozen(keep, bool)
        self.nodes = _frozen(np.flatnonzero(alive), np.int64)
        self.edge_ids = _frozen(np.flatnonzero(keep), np.int64)
        self.src = base.src[self.edge_ids]
        self.dst = base.dst[self.edge_ids]
        self.prob = base.prob[self.edge_ids]
        self.out_degree = _frozen(np.bincount(self.src, minlength=base.n), np.int64)
        self.in_degree = _frozen(np.bincount(self.dst, minlength=base.n), np.int64)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.edge_ids)

    @property
    def has_probabilities(self) -> bool:
        return not np.isnan(self.prob).any()

    def residual(self, excluded: Iterable[int]) -> "NetworkView":
        return NetworkView(self.base, self.excluded | set(int(x) for x in excluded))

    def __repr__(self) -> str:
        return f"NetworkView(n={self.n}, m={self.m}, excluded={len(self.excluded)})"


def residual_view(network, excluded: Iterable[int]) -> NetworkView:
    """Hide ``excluded`` nodes (and their edges) without copying the network."""
    excluded = set(int(x) for x in excluded)
    bad = [x for x in excluded if not 0 <= x < network.base.n]
    if bad:
        raise ValueError(f"excluded nodes outside the network: {sorted(bad)[:5]}")
    if isinstance(network, NetworkView):
        return network.residual(excluded)
    return NetworkView(network, excluded)


@dataclass(frozen=True)
class NodeEconomics:
    """Per-node seeding cost (strictly positive) and benefit (non-negative)."""

    cost: np.ndarray
    benefit: np.ndarray

    def __post_init__(self):
        cost = _frozen(self.cost, float)
        benefit = _frozen(self.benefit, float)
        if cost.shape != benefit.shape or cost.ndim != 1:
            raise ValueError("cost and benefit must be 1-d arrays of equal length")
        if np.any(cost <= 0):
            raise ValueError("costs must be strictly positive")
        if np.any(benefit < 0):
            raise ValueError("benefits must be non-negative")
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "benefit", benefit)

    @property
    def n(self) -> int:
        return len(self.cost)

    def total_cost(self, nodes: Iterable[int]) -> float:
        idx = list(nodes)
        return float(self.cost[idx].sum()) if idx else 0.0

    def total_benefit(self, nodes: Iterable[int]) -> float:
        idx = list(nodes)
        return float(self.benefit[idx].sum()) if idx else 0.0


@dataclass(frozen=True)
class IngestOptions:
    symmetrize: bool = False
    dedupe: bool = True
    drop_self_loops: bool = True
    relabel: bool = True


@dataclass(frozen=True)
class AssignmentSpec:
    """How to randomise edge probabilities and node economics.

    ``weighting`` is ``"trivalency"``, ``"constant"`` (uses ``constant_p``) or
    ``"from_file"`` (keep the probabilities read from the edge list).
    """

    weighting: str = "trivalency"
    constant_p: float = 0.1
    cost_interval: tuple[float, float] = (50.0, 100.0)
    benefit_interval: tuple[float, float] = (800.0, 1000.0)
    master_seed: int = 0

    def __post_init__(self):
        if self.weighting not in ("trivalency", "constant", "from_file"):
            raise ValueError(f"unknown weighting scheme {self.weighting!r}")
        if self.weighting == "constant" and not 0 < self.constant_p <= 1:
            raise ValueError("constant probability must lie in (0, 1]")
        lo, hi = self.cost_interval
        if not 0 < lo <= hi:
            raise ValueError("cost interval must satisfy 0 < lo <= hi")
        lo, hi = self.benefit_interval
        if not 0 <= lo <= hi:
            raise ValueError("benefit interval must satisfy 0 <= lo <= hi")

    @property
    def scheme(self) -> str:
        return f"constant({self.constant_p})" if self.weighting == "constant" else self.weighting


def _parse_lines(lines: Iterable[str], where: str):
    rows = []
    for lineno, line in enumerate(lines, 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) not in (2, 3):
            raise EdgeListError(f"{where}:{lineno}: expected 'src dst[ prob]', got {s!r}")
        p = np.nan
        if len(parts) == 3:
            try:
                p = float(parts[2])
            except ValueError:
                raise EdgeListError(f"{where}:{lineno}: bad probability {parts[2]!r}") from None
            if not 0 < p <= 1:
                raise EdgeListError(f"{where}:{lineno}: probability {p} outside (0, 1]")
        rows.append((parts[0], parts[1], p, lineno))
    return rows


def parse_edge_list(lines: Iterable[str], options: IngestOptions = IngestOptions(),
                    where: str = "<input>") -> SocialNetwork:
    rows = _parse_lines(lines, where)
    report = {"lines": len(rows), "self_loops_dropped": 0, "duplicates_dropped": 0,
              "reverse_edges_added": 0}
    if options.relabel:
        labels: list = []
        index: dict = {}

        def ident(tok):
            key = int(tok) if tok.lstrip("-").isdigit() else tok
            if key not in index:
                index[key] = len(labels)
                labels.append(key)
            return index[key]
    else:
        def ident(tok):
            try:
                v = int(tok)
            except ValueError:
                raise EdgeListError(f"{where}: non-integer node id {tok!r} without relabeling") from None
            if v < 0:
                raise EdgeListError(f"{where}: negative node id {v}")
            return v

    triples = []
    for a, b, p, lineno in rows:
        u, v = ident(a), ident(b)
        if u == v:
            if options.drop_self_loops:
                report["self_loops_dropped"] += 1
                continue
            raise EdgeListError(f"{where}:{lineno}: self-loop on node {a}")
        triples.append((u, v, p, lineno))

    seen: dict[tuple[int, int], int] = {}
    edges: list[tuple[int, int, float]] = []
    for u, v, p, lineno in triples:
        if (u, v) in seen:
            if options.dedupe:
                report["duplicates_dropped"] += 1
                continue
            raise EdgeListError(f"{where}:{lineno}: duplicate edge ({u}, {v})")
        seen[(u, v)] = len(edges)
        edges.append((u, v, p))
    if options.symmetrize:
        for u, v, p in list(edges):
            if (v, u) not in seen:
                seen[(v, u)] = len(edges)
                edges.append((v, u, p))
                report["reverse_edges_added"] += 1

    if options.relabel:
        n = len(labels)
    else:
        n = 1 + max((max(u, v) for u, v, _ in edges), default=-1)
        labels = list(range(n))
    if n == 0 or not edges:
        raise EdgeListError(f"{where}: empty graph")
    if report["self_loops_dropped"]:
        log.info("%s: dropped %d self-loops", where, report["self_loops_dropped"])
    net = SocialNetwork(n, [e[0] for e in edges], [e[1] for e in edges],
                        [e[2] for e in edges], labels=labels, report=report)
    return net


def ingest_edge_list(path, options: IngestOptions = IngestOptions()) -> SocialNetwork:
    """Read a whitespace-separated ``src dst[ prob]`` file with ``#`` comments."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return parse_edge_list(fh, options, where=str(path))


def les_miserables() -> SocialNetwork:
    """The 77-node character co-occurrence graph, both directions per link."""
    text = resources.files("twophase.data").joinpath("lesmis.txt").read_text(encoding="utf-8")
    return parse_edge_list(text.splitlines(), IngestOptions(symmetrize=True), where="lesmis.txt")


def assign_weights(network: SocialNetwork, spec: AssignmentSpec) -> SocialNetwork:
    """Return a copy of ``network`` with every edge probability set."""
    if spec.weighting == "trivalency":
        gen = _rng.generator(spec.master_seed, "weights")
        prob = np.asarray(TRIVALENCY)[gen.integers(0, len(TRIVALENCY), size=network.m)]
    elif spec.weighting == "constant":
        prob = np.full(network.m, float(spec.constant_p))
    else:
        if not network.has_probabilities:
            raise ValueError("from_file weighting needs a probability on every edge")
        prob = network.prob
    return network.with_probabilities(prob)


def assign_economics(network, spec: AssignmentSpec) -> NodeEconomics:
    """i.i.d. uniform costs and benefits over the assignment intervals, seeded."""
    gen = _rng.generator(spec.master_seed, "econ")
    n = network.base.n
    cost = gen.uniform(*spec.cost_interval, size=n)
    benefit = gen.uniform(*spec.benefit_interval, size=n)
    return NodeEconomics(cost, benefit)


def instance_to_dict(network: SocialNetwork, econ: NodeEconomics | None = None,
                     meta: dict | None = None) -> dict:
    doc = {
        "n": network.n,
        "edges": [[u, v, None if np.isnan(p) else p] for u, v, p in network.edges],
    }
    if econ is not None:
        doc["cost"] = econ.cost.tolist()
        doc["benefit"] = econ.benefit.tolist()
    meta = dict(meta or {})
    if network.labels != list(range(network.n)):
        meta.setdefault("labels", network.labels)
    doc["meta"] = meta
    return doc


def instance_from_dict(doc: dict) -> tuple[SocialNetwork, NodeEconomics | None, dict]:
    n = int(doc["n"])
    edges = doc.get("edges", [])
    prob = [np.nan if len(e) < 3 or e[2] is None else float(e[2]) for e in edges]
    meta = dict(doc.get("meta", {}))
    net = SocialNetwork(n, [int(e[0]) for e in edges], [int(e[1]) for e in edges], prob,
                        labels=meta.get("labels"))
    econ = None
    if "cost" in doc and "benefit" in doc:
        econ = NodeEconomics(np.asarray(doc["cost"], float), np.asarray(doc["benefit"], float))
        if econ.n != n:
            raise ValueError("cost/benefit length differs from n")
    return net, econ, meta


def save_instance(path, network: SocialNetwork, econ: NodeEconomics | None = None,
                  meta: dict | None = None) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(network, econ, meta), indent=1) + "\n",
                          encoding="utf-8")


def load_instance(path) -> tuple[SocialNetwork, NodeEconomics | None, dict]:
    return instance_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def make_instance(network: SocialNetwork, spec: AssignmentSpec) -> tuple[SocialNetwork, NodeEconomics]:
    """Probabilities plus economics in one call, each from its own substream."""
    return assign_weights(network, spec), assign_economics(network, spec)
