"""Weighted spanner graphs and shortest-path helpers."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from .metric import RTOL, MetricSpace

# Above this many vertices the greedy stretch test runs truncated Dijkstra
# instead of maintaining a dense distance matrix.
DENSE_LIMIT = 2500


class WeightMismatch(ValueError):
    """An edge weight disagrees with another copy of the edge or with the metric."""


@dataclass(eq=False)
class SpannerGraph:
    """Edges ``(u, v)`` with ``u < v``, each weighing ``d_G(u, v)``.

    ``level`` and ``stage`` record where each edge came from; merged
    duplicates keep every distinct stage label joined by ``|``.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    level: np.ndarray
    stage: np.ndarray

    @classmethod
    def empty(cls, n: int) -> SpannerGraph:
        z = np.empty(0, dtype=int)
        return cls(n, z, z.copy(), np.empty(0), z.copy(), np.empty(0, dtype=object))

    @classmethod
    def from_edges(cls, n: int, u, v, w, level=None, stage: str | np.ndarray = "") -> SpannerGraph:
        u = np.asarray(u, dtype=int).ravel()
        v = np.asarray(v, dtype=int).ravel()
        w = np.asarray(w, dtype=float).ravel()
        if level is None:
            level = np.zeros(len(u), dtype=int)
        level = np.broadcast_to(np.asarray(level, dtype=int), u.shape).copy()
        if isinstance(stage, str):
            stage = np.full(len(u), stage, dtype=object)
        stage = np.asarray(stage, dtype=object)
        keep = u != v
        u, v, w, level, stage = u[keep], v[keep], w[keep], level[keep], stage[keep]
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        return _dedup(n, lo, hi, w, level, stage)

    @classmethod
    def from_pairs(cls, space: MetricSpace, pairs, level=None, stage: str = "") -> SpannerGraph:
        pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
        w = space.dist[pairs[:, 0], pairs[:, 1]]
        return cls.from_edges(space.n, pairs[:, 0], pairs[:, 1], w, level, stage)

    def __len__(self) -> int:
        return len(self.u)

    @property
    def weight(self) -> float:
        return float(self.w.sum())

    def pairs(self) -> np.ndarray:
        return np.column_stack([self.u, self.v])

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self.u.tolist(), self.v.tolist()))

    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (np.concatenate([self.w, self.w]), (np.concatenate([self.u, self.v]), np.concatenate([self.v, self.u]))),
            shape=(self.n, self.n),
        )

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        k, _ = connected_components(self.csr(), directed=False)
        return k == 1

    def stage_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for s in self.stage:
            out[s] = out.get(s, 0) + 1
        return dict(sorted(out.items()))

    def relabel(self, ids, n: int) -> SpannerGraph:
        """Map local vertex ``k`` to ``ids[k]`` in a universe of size ``n``."""
        ids = np.asarray(ids, dtype=int)
        return SpannerGraph.from_edges(n, ids[self.u], ids[self.v], self.w, self.level, self.stage)

    def check_metric(self, space: MetricSpace) -> None:
        """Raise if some edge weight differs from the metric distance."""
        exact = space.dist[self.u, self.v]
        bad = np.flatnonzero(np.abs(exact - self.w) > RTOL * np.maximum(exact, 1.0))
        if len(bad):
            k = bad[0]
            raise WeightMismatch(f"edge ({self.u[k]}, {self.v[k]}) weighs {self.w[k]}, metric says {exact[k]}")

    def scaled(self, factor: float) -> SpannerGraph:
        return SpannerGraph(self.n, self.u, self.v, self.w * factor, self.level, self.stage)

    def to_tsv(self, path: str | Path, *, scale: float = 1.0, with_level: bool = False) -> None:
        with Path(path).open("w") as fh:
            for k in range(len(self)):
                cols = [str(self.u[k]), str(self.v[k]), repr(float(self.w[k] * scale))]
                if with_level:
                    cols.append(str(self.level[k]))
                cols.append(self.stage[k] or "-")
                fh.write("\t".join(cols) + "\n")

    @classmethod
    def from_tsv(cls, path: str | Path, n: int, *, scale: float = 1.0) -> SpannerGraph:
        """Read ``u v weight [level] stage`` rows; weights are divided by ``scale``."""
        us, vs, ws, lv, st = [], [], [], [], []
        with Path(path).open() as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                cols = line.split("\t")
                if len(cols) not in (3, 4, 5):
                    raise ValueError(f"{path}:{lineno}: expected 3-5 tab-separated columns, got {len(cols)}")
                try:
                    a, b, wt = int(cols[0]), int(cols[1]), float(cols[2])
                    level = int(cols[3]) if len(cols) == 5 else 0
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
                if not (0 <= a < n and 0 <= b < n):
                    raise ValueError(f"{path}:{lineno}: vertex id out of range 0..{n - 1}")
                us.append(a)
                vs.append(b)
                ws.append(wt / scale)
                lv.append(level)
                st.append(cols[-1] if len(cols) > 3 else "")
        return cls.from_edges(n, us, vs, ws, lv, np.asarray(st, dtype=object))


def _dedup(n, u, v, w, level, stage) -> SpannerGraph:
    if len(u) == 0:
        return SpannerGraph.empty(n)
    key = u.astype(np.int64) * n + v
    order = np.lexsort((v, u))
    key, u, v, w, level, stage = key[order], u[order], v[order], w[order], level[order], stage[order]
    first = np.ones(len(key), dtype=bool)
    first[1:] = key[1:] != key[:-1]
    if not first.all():
        starts = np.flatnonzero(first)
        ends = np.append(starts[1:], len(key))
        stage = stage.copy()
        for s, e in zip(starts[ends - starts > 1], ends[ends - starts > 1]):
            ref = w[s]
            if np.any(np.abs(w[s:e] - ref) > RTOL * max(ref, 1.0)):
                raise WeightMismatch(f"edge ({u[s]}, {v[s]}) appears with weights {sorted(set(w[s:e].tolist()))}")
            labels = []
            for lab in stage[s:e]:
                for part in str(lab).split("|"):
                    if part and part not in labels:
                        labels.append(part)
            stage[s] = "|".join(labels)
            level[s] = level[s:e].min()
    return SpannerGraph(n, u[first], v[first], w[first], level[first], stage[first])


def union(*graphs: SpannerGraph) -> SpannerGraph:
    """Edge-set union; duplicate edges are merged and their stages joined."""
    if not graphs:
        raise ValueError("union of nothing")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ValueError("spanners live on different vertex universes")
    cat = lambda attr: np.concatenate([getattr(g, attr) for g in graphs])  # noqa: E731
    return _dedup(n, cat("u"), cat("v"), cat("w"), cat("level"), cat("stage"))


def apsp(graph: SpannerGraph, sources=None) -> np.ndarray:
    """Shortest-path distances on ``graph`` (rows restricted to ``sources``)."""
    if graph.n == 0:
        return np.zeros((0, 0))
    return dijkstra(graph.csr(), directed=False, indices=sources)


class GreedyState:
    """A growing graph answering "is ``d(u, v) <= bound``?" exactly.

    Small graphs keep a dense all-pairs matrix updated in ``O(n^2)`` per added
    edge; large ones run Dijkstra truncated at the bound.
    """

    def __init__(self, n: int, u=(), v=(), w=(), *, dense: bool | None = None):
        self.n = n
        self.dense = n <= DENSE_LIMIT if dense is None else dense
        self.adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        u, v, w = np.asarray(u, dtype=int), np.asarray(v, dtype=int), np.asarray(w, dtype=float)
        for a, b, x in zip(u.tolist(), v.tolist(), w.tolist()):
            self.adj[a].append((b, x))
            self.adj[b].append((a, x))
        if self.dense:
            if len(u):
                g = sp.csr_matrix((np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(n, n))
                self.D = dijkstra(g, directed=False)
            else:
                self.D = np.full((n, n), np.inf)
                np.fill_diagonal(self.D, 0.0)

    def within(self, a: int, b: int, bound: float) -> bool:
        if self.dense:
            return bool(self.D[a, b] <= bound)
        return self._bounded_dijkstra(a, b, bound) <= bound

    def distance(self, a: int, b: int) -> float:
        if self.dense:
            return float(self.D[a, b])
        return self._bounded_dijkstra(a, b, math.inf)

    def _bounded_dijkstra(self, a: int, b: int, bound: float) -> float:
        if a == b:
            return 0.0
        best = {a: 0.0}
        heap = [(0.0, a)]
        while heap:
            d, x = heapq.heappop(heap)
            if x == b:
                return d
            if d > best.get(x, math.inf) or d > bound:
                continue
            for y, wt in self.adj[x]:
                nd = d + wt
                if nd <= bound and nd < best.get(y, math.inf):
                    best[y] = nd
                    heapq.heappush(heap, (nd, y))
        return math.inf

    def add(self, a: int, b: int, w: float) -> None:
        self.adj[a].append((b, w))
        self.adj[b].append((a, w))
        if self.dense:
            D = self.D
            via = np.minimum(D[:, a][:, None] + w + D[b][None, :], D[:, b][:, None] + w + D[a][None, :])
            np.minimum(D, via, out=D)


def greedy_fill(state: GreedyState, u, v, w, factor: float) -> np.ndarray:
    """Scan candidate edges in the given order and add each one whose
    endpoints are currently farther apart than ``factor * w``.

    Returns a boolean mask over the candidates marking the added ones.
    """
    u, v, w = np.asarray(u, dtype=int), np.asarray(v, dtype=int), np.asarray(w, dtype=float)
    added = np.zeros(len(u), dtype=bool)
    # distances only shrink, so pairs satisfied now stay satisfied
    if state.dense and len(u):
        todo = np.flatnonzero(state.D[u, v] > factor * w)
    elif len(u):
        todo = np.flatnonzero(_current_distances(state, u, v) > factor * w)
    else:
        todo = np.empty(0, dtype=int)
    for k in todo:
        a, b, x = int(u[k]), int(v[k]), float(w[k])
        if not state.within(a, b, factor * x):
            state.add(a, b, x)
            added[k] = True
    return added


def _current_distances(state: GreedyState, u: np.ndarray, v: np.ndarray, chunk: int = 256) -> np.ndarray:
    rows, cols, vals = [], [], []
    for a, nbrs in enumerate(state.adj):
        for b, x in nbrs:
            rows.append(a)
            cols.append(b)
            vals.append(x)
    g = sp.csr_matrix((vals, (rows, cols)), shape=(state.n, state.n))
    out = np.empty(len(u))
    sources = np.unique(u)
    for s in range(0, len(sources), chunk):
        block = sources[s : s + chunk]
        D = dijkstra(g, directed=False, indices=block)
        pos = np.searchsorted(block, u)
        hit = (pos < len(block)) & (block[np.minimum(pos, len(block) - 1)] == u)
        out[hit] = D[pos[hit], v[hit]]
    return out


def sort_edges(u, v, w) -> np.ndarray:
    """Order by ``(weight, min id, max id)``."""
    u, v = np.asarray(u), np.asarray(v)
    return np.lexsort((np.maximum(u, v), np.minimum(u, v), np.asarray(w)))
