"""Small hand-sized reference instances.

Edge probabilities and economics were solved from hand-worked enumeration
tables (probability ratios between rows, then per-row profit values).  Node
``i`` carries the label ``u{i+1}``.
"""
from __future__ import annotations

import numpy as np

from .graph import NodeEconomics, SocialNetwork


def _labels(n):
    return [f"u{i + 1}" for i in range(n)]


def fork_network() -> SocialNetwork:
    """u1 -> u2 -> {u3, u4}."""
    return SocialNetwork.from_edges(4, [(0, 1, 0.6), (1, 2, 0.7), (1, 3, 0.9)], labels=_labels(4))


def fork_economics() -> NodeEconomics:
    # only b(u1) + b(u2) = 3 is pinned down; the split is our choice
    return NodeEconomics(np.array([2.0, 1.0, 1.0, 1.0]), np.array([2.0, 1.0, 10.0, 1.0]))


def fork_positive_economics() -> NodeEconomics:
    # b(u1) + b(u2) = 11 is the only constraint on the first two benefits
    return NodeEconomics(np.array([3.0, 1.0, 1.0, 1.0]), np.array([5.0, 6.0, 4.0, 2.0]))


def fork_negative_economics() -> NodeEconomics:
    return NodeEconomics(np.array([3.0, 1.0, 1.0, 1.0]), np.array([1.0, 2.0, 0.0, 1.0]))


def tree_network() -> SocialNetwork:
    """u1 -> {u2, u3}, u2 -> {u4, u5}, u3 -> u6."""
    edges = [(0, 1, 0.4), (0, 2, 0.5), (1, 3, 0.2), (1, 4, 0.9), (2, 5, 0.6)]
    return SocialNetwork.from_edges(6, edges, labels=_labels(6))


def tree_economics(c4: float = 2.0) -> NodeEconomics:
    """Benefits are pinned down; C(u4) is not (rows disagree between 2 and 3)."""
    return NodeEconomics(np.array([2.0, 1.0, 2.0, c4, 2.0, 1.0]),
                         np.array([2.0, 1.0, 1.0, 1.0, 2.0, 1.0]))


def random_instance(rng: np.random.Generator, n: int, m: int, p_range=(0.05, 0.95),
                    cost_range=(50.0, 100.0), benefit_range=(800.0, 1000.0)):
    """Random simple digraph with ``m`` edges and uniform economics."""
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    if m > len(pairs):
        raise ValueError("too many edges for a simple digraph")
    pick = rng.choice(len(pairs), size=m, replace=False)
    edges = [(*pairs[i], float(rng.uniform(*p_range))) for i in sorted(pick)]
    net = SocialNetwork.from_edges(n, edges)
    econ = NodeEconomics(rng.uniform(*cost_range, size=n), rng.uniform(*benefit_range, size=n))
    return net, econ
