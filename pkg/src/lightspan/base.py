"""Complete and greedy hierarchical spanners."""

from __future__ import annotations

import numpy as np

from .graph import GreedyState, SpannerGraph, greedy_fill, sort_edges
from .hierarchy import NetHierarchy, SemiHierarchy, c_neighbors

# Semi-hierarchies (covering only) are accepted wherever a NetHierarchy is;
# their neighbor pairs come from a direct scan of each level.


def _level_pairs(h: NetHierarchy | SemiHierarchy, c: float, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct c-neighbor pairs over ``lo..hi`` with the lowest level each appears at."""
    if isinstance(h, SemiHierarchy):
        per = {i: h.neighbors(c, i) for i in range(lo, hi + 1)}
    else:
        per = c_neighbors(h, c, lo=lo)
    chunks, levels = [], []
    for i in range(lo, hi + 1):
        if i in per and len(per[i]):
            chunks.append(per[i])
            levels.append(np.full(len(per[i]), i))
    if not chunks:
        return np.empty((0, 2), dtype=int), np.empty(0, dtype=int)
    pairs = np.concatenate(chunks)
    levels = np.concatenate(levels)
    key = pairs[:, 0].astype(np.int64) * h.space.n + pairs[:, 1]
    order = np.lexsort((levels, key))
    key, pairs, levels = key[order], pairs[order], levels[order]
    first = np.ones(len(key), dtype=bool)
    first[1:] = key[1:] != key[:-1]
    return pairs[first], levels[first]


def _range(h, level_range) -> tuple[int, int]:
    if level_range is None:
        return h.L, h.H
    lo, hi = level_range
    return max(lo, h.L), min(hi, h.H)


def complete_hierarchical_spanner(h: NetHierarchy, c: float, level_range=None, *, stage: str = "complete") -> SpannerGraph:
    """Every pair of level-``i`` net points closer than ``c 2^i``, for each level in range."""
    if c < 24:
        raise ValueError("the stretch guarantee needs c >= 24")
    lo, hi = _range(h, level_range)
    pairs, levels = _level_pairs(h, c, lo, hi)
    D = h.space.dist
    return SpannerGraph(
        h.space.n,
        pairs[:, 0].copy(),
        pairs[:, 1].copy(),
        D[pairs[:, 0], pairs[:, 1]],
        levels,
        np.full(len(pairs), stage, dtype=object),
    )


def greedy_hierarchical_spanner(h: NetHierarchy, c: float, b: float, level_range=None, *, stage: str = "greedy") -> SpannerGraph:
    """Scan all c-neighbor edges in increasing weight and keep an edge only when
    the partial spanner stretches its endpoints by more than ``1 + b``."""
    if c < 24:
        raise ValueError("the stretch guarantee needs c >= 24")
    if not 0 < b <= 1:
        raise ValueError("b must lie in (0, 1]")
    lo, hi = _range(h, level_range)
    pairs, levels = _level_pairs(h, c, lo, hi)
    D = h.space.dist
    w = D[pairs[:, 0], pairs[:, 1]]
    order = sort_edges(pairs[:, 0], pairs[:, 1], w)
    pairs, levels, w = pairs[order], levels[order], w[order]
    state = GreedyState(h.space.n)
    added = greedy_fill(state, pairs[:, 0], pairs[:, 1], w, 1.0 + b)
    return SpannerGraph.from_edges(h.space.n, pairs[added, 0], pairs[added, 1], w[added], levels[added], stage)


def certify_neighbors(
    graph: SpannerGraph,
    h: NetHierarchy,
    c: float,
    b: float,
    level_range=None,
    *,
    stage: str = "certify",
) -> SpannerGraph:
    """Greedy top-up: make every c-neighbor pair in range ``(1+b)``-stretched.

    Pairs already within ``1 + b`` are left alone, so on a graph that meets the
    bound this adds nothing. Returns only the added edges.
    """
    lo, hi = _range(h, level_range)
    pairs, levels = _level_pairs(h, c, lo, hi)
    if len(pairs) == 0:
        return SpannerGraph.empty(graph.n)
    D = h.space.dist
    w = D[pairs[:, 0], pairs[:, 1]]
    order = sort_edges(pairs[:, 0], pairs[:, 1], w)
    pairs, levels, w = pairs[order], levels[order], w[order]
    state = GreedyState(graph.n, graph.u, graph.v, graph.w)
    added = greedy_fill(state, pairs[:, 0], pairs[:, 1], w, 1.0 + b)
    return SpannerGraph.from_edges(graph.n, pairs[added, 0], pairs[added, 1], w[added], levels[added], stage)


def certify_all_pairs(graph: SpannerGraph, space, t: float, *, stage: str = "certify") -> SpannerGraph:
    """Greedy top-up over every pair in ``(weight, ids)`` order so the result
    has stretch at most ``t`` exactly. Dense: meant for ``n <= DENSE_LIMIT``."""
    n = space.n
    if n < 2:
        return SpannerGraph.empty(n)
    a, b = np.triu_indices(n, 1)
    w = space.dist[a, b]
    order = sort_edges(a, b, w)
    a, b, w = a[order], b[order], w[order]
    state = GreedyState(n, graph.u, graph.v, graph.w, dense=True)
    added = greedy_fill(state, a, b, w, t)
    return SpannerGraph.from_edges(n, a[added], b[added], w[added], 0, stage)
