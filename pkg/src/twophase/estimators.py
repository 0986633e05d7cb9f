"""Profit oracles used by the selection algorithms.

Both estimators answer the same three questions about a (possibly residual)
network with an optional *anchor*: nodes that are already spreading (the
recently activated set in phase two).  The anchor's reach counts towards
coverage but its cost does not.

* ``gains(S, cands)``: phi(S + u) - phi(S) for each candidate u.
* ``losses(T, cands)``: phi(T - u) - phi(T) for each u in T.
* ``profit(S)``: phi(S).

:class:`SnapshotEstimator` samples a fixed batch of live graphs once and
answers every query on that same batch (common random numbers), so greedy
comparisons are free of between-call noise.  :class:`ExactEstimator`
enumerates live graphs and is for tiny instances.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import exact
from .diffusion import Estimate, live_masks


def usable_edges(view, anchor) -> np.ndarray:
    """Edges that may carry influence: visible ones plus anchor -> surviving node."""
    base = view.base
    ok = np.array(view.edge_alive, copy=True)
    if len(anchor):
        from_anchor = np.isin(base.src, list(anchor))
        ok |= from_anchor & view.alive[base.dst]
    return ok


class _Base:
    def __init__(self, view, econ, anchor=()):
        self.view = view
        self.econ = econ
        self.anchor = tuple(sorted(set(int(a) for a in anchor)))
        self.evaluations = 0

    def _count(self, k: int):
        self.evaluations += int(k)


class SnapshotEstimator(_Base):
    """Monte Carlo profit on ``samples`` shared live graphs.

    Reach sets are computed lazily per node (all replicates at once, by
    frontier expansion over a block-diagonal sparse graph) and cached.
    """

    label = "snapshot"

    def __init__(self, view, econ, samples: int, master_seed: int, anchor=(), stream="select"):
        super().__init__(view, econ, anchor)
        base = view.base
        self.R = int(samples)
        self.N = base.n
        ok = usable_edges(view, self.anchor)
        rows, cols = [], []
        step = max(1, (1 << 22) // max(1, base.m))
        for start in range(0, self.R, step):
            stop = min(self.R, start + step)
            live = live_masks(base, master_seed, stream, start, stop) & ok
            rr, ee = np.nonzero(live)
            rr = rr + start
            rows.append(rr * self.N + base.src[ee])
            cols.append(rr * self.N + base.dst[ee])
        rows = np.concatenate(rows) if rows else np.empty(0, np.int64)
        cols = np.concatenate(cols) if cols else np.empty(0, np.int64)
        size = self.R * self.N
        self.L = sp.csr_matrix((np.ones(len(rows), np.float32), (rows, cols)), shape=(size, size))
        self.weights = np.tile(np.asarray(econ.benefit, float), self.R)
        self._reach: dict[int, np.ndarray] = {}
        self._cov_key, self._cov = None, None
        self._cnt_key, self._cnt = None, None
        self.closure_calls = 0
        self.anchor_cover = np.zeros(size, dtype=bool)
        if self.anchor:
            self._ensure(self.anchor)
            for a in self.anchor:
                self.anchor_cover[self._reach[a]] = True

    # -- reach sets --------------------------------------------------------
    def _ensure(self, nodes):
        todo = [int(u) for u in dict.fromkeys(nodes) if int(u) not in self._reach]
        if not todo:
            return
        self.closure_calls += len(todo)
        R, N = self.R, self.N
        size = R * N
        indptr, indices = self.L.indptr, self.L.indices
        k = len(todo)
        start_cols = (np.arange(R)[None, :] * N + np.asarray(todo)[:, None]).ravel()
        start_rows = np.arange(k * R, dtype=np.int64)
        # rows whose start node has no live out-edge reach only themselves
        busy = indptr[start_cols + 1] > indptr[start_cols]
        frow, fcol = start_rows[busy], start_cols[busy]
        seen = np.sort(frow * size + fcol)
        found = [start_rows * size + start_cols]
        while len(frow):
            counts = indptr[fcol + 1] - indptr[fcol]
            total = int(counts.sum())
            if total == 0:
                break
            offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
            child = indices[np.repeat(indptr[fcol], counts) + offs].astype(np.int64)
            keys = np.unique(np.repeat(frow, counts) * size + child)
            keys = keys[~np.isin(keys, seen, assume_unique=True)]
            if not len(keys):
                break
            found.append(keys)
            seen = np.union1d(seen, keys)
            frow, fcol = keys // size, keys % size
        keys = np.sort(np.concatenate(found))
        rows = keys // size
        bounds = np.searchsorted(rows, np.arange(k + 1) * R)
        cols = keys % size
        for j, u in enumerate(todo):
            self._reach[u] = cols[bounds[j]:bounds[j + 1]]

    def reach(self, u: int) -> np.ndarray:
        """Flat ``r * n + v`` indices of every (replicate, node) reached from ``u``."""
        self._ensure([u])
        return self._reach[int(u)]

    def _coverage(self, nodes) -> np.ndarray:
        key = tuple(nodes)
        if self._cov_key == key:
            return self._cov
        if self._cov_key is not None and key[:-1] == self._cov_key and key:
            cov = self._cov
            cov[self.reach(key[-1])] = True
        else:
            cov = self.anchor_cover.copy()
            self._ensure(key)
            for u in key:
                cov[self._reach[u]] = True
        self._cov_key, self._cov = key, cov
        return cov

    def _counts(self, nodes) -> np.ndarray:
        key = tuple(nodes)
        if self._cnt_key == key:
            return self._cnt
        prev = self._cnt_key
        if prev is not None and len(prev) == len(key) + 1 and set(key) < set(prev):
            (gone,) = set(prev) - set(key)
            cnt = self._cnt
            cnt[self.reach(gone)] -= 1
        else:
            cnt = self.anchor_cover.astype(np.int32)
            self._ensure(key)
            for u in key:
                cnt[self._reach[u]] += 1
        self._cnt_key, self._cnt = key, cnt
        return cnt

    # -- queries -----------------------------------------------------------
    def gains(self, current, candidates) -> np.ndarray:
        candidates = [int(u) for u in candidates]
        self._count(len(candidates))
        if not candidates:
            return np.empty(0)
        cov = self._coverage(current)
        self._ensure(candidates)
        out = np.empty(len(candidates))
        for j, u in enumerate(candidates):
            idx = self._reach[u]
            out[j] = self.weights[idx[~cov[idx]]].sum() / self.R
        return out - self.econ.cost[candidates]

    def losses(self, members, candidates) -> np.ndarray:
        candidates = [int(u) for u in candidates]
        self._count(len(candidates))
        if not candidates:
            return np.empty(0)
        cnt = self._counts(members)
        out = np.empty(len(candidates))
        for j, u in enumerate(candidates):
            idx = self.reach(u)
            out[j] = self.weights[idx[cnt[idx] == 1]].sum() / self.R
        return self.econ.cost[candidates] - out

    def profit(self, nodes) -> Estimate:
        nodes = list(nodes)
        cov = self.anchor_cover.copy()
        self._ensure(nodes)
        for u in nodes:
            cov[self._reach[u]] = True
        per = (cov * self.weights).reshape(self.R, self.N).sum(axis=1)
        return Estimate.from_values(per - self.econ.total_cost(nodes))


class ExactEstimator(_Base):
    """Live-graph enumeration; only for instances with a handful of edges."""

    label = "exact"

    def __init__(self, view, econ, anchor=(), cap: int = exact.ENUMERATION_CAP):
        super().__init__(view, econ, anchor)
        self.edge_ids = np.flatnonzero(usable_edges(view, self.anchor))
        exact._check_cap(len(self.edge_ids), cap)
        self._memo: dict = {}

    def _benefit(self, nodes) -> float:
        key = frozenset(nodes) | frozenset(self.anchor)
        if key not in self._memo:
            self._memo[key] = exact.expected_benefit(self.view.base, self.econ, sorted(key),
                                                     edge_ids=self.edge_ids)
        return self._memo[key]

    def value(self, nodes) -> float:
        nodes = list(nodes)
        return self._benefit(nodes) - self.econ.total_cost(nodes)

    def gains(self, current, candidates) -> np.ndarray:
        candidates = [int(u) for u in candidates]
        self._count(len(candidates))
        base = self.value(current)
        return np.array([self.value(list(current) + [u]) - base for u in candidates])

    def losses(self, members, candidates) -> np.ndarray:
        candidates = [int(u) for u in candidates]
        self._count(len(candidates))
        members = list(members)
        base = self.value(members)
        return np.array([self.value([v for v in members if v != u]) - base for u in candidates])

    def profit(self, nodes) -> Estimate:
        return Estimate(self.value(nodes), 0.0, 1)
