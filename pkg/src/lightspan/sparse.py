"""Light spanners for point sets with a sparse spanning tree.

The pipeline peels a spanning tree into paths, replaces every path by a few
low-stretch paths, and joins nearby low-stretch paths with greedy bipartite
spanners built on their path hierarchies.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .audit import path_stretch, sparsity
from .base import certify_neighbors
from .graph import GreedyState, SpannerGraph, greedy_fill, sort_edges, union
from .hierarchy import PathChain, PathHierarchy, build_hierarchy, build_path_hierarchy
from .metric import RTOL, MetricSpace
from .nrtree import Tree

PROFILES = ("desk", "faithful")


# --- tree decomposition ------------------------------------------------------


@dataclass(eq=False)
class PathDecomposition:
    """Paths in removal order; ``parent[k]`` is the path whose removal exposed path ``k`` (-1 for the first)."""

    paths: list[PathChain]
    parent: list[int]

    def __len__(self) -> int:
        return len(self.paths)


def _farthest(adj: dict[int, dict[int, float]], start: int) -> tuple[int, dict[int, float], dict[int, int]]:
    dist = {start: 0.0}
    pred: dict[int, int] = {}
    stack = [start]
    while stack:
        x = stack.pop()
        for y, w in adj[x].items():
            if y not in dist:
                dist[y] = dist[x] + w
                pred[y] = x
                stack.append(y)
    far = max(dist, key=lambda x: (dist[x], -x))
    return far, dist, pred


def decompose_tree(T: Tree, space: MetricSpace) -> PathDecomposition:
    """Repeatedly remove the longest path of each remaining subtree."""
    verts = [int(x) for x in T.vertices]
    if not verts:
        raise ValueError("tree has no vertices")
    adj: dict[int, dict[int, float]] = {x: {} for x in verts}
    for a, b, w in zip(T.u.tolist(), T.v.tolist(), T.w.tolist()):
        adj[a][b] = w
        adj[b][a] = w
    paths: list[PathChain] = []
    parent: list[int] = []
    queue = deque([(min(verts), -1)])
    while queue:
        start, par = queue.popleft()
        a, _, _ = _farthest(adj, start)
        b, _, pred = _farthest(adj, a)
        chain = [b]
        while chain[-1] != a:
            chain.append(pred[chain[-1]])
        chain.reverse()
        idx = len(paths)
        paths.append(PathChain.from_vertices(space, chain))
        parent.append(par)
        for x, y in zip(chain[:-1], chain[1:]):
            del adj[x][y]
            del adj[y][x]
        for x in chain:
            if adj[x]:
                queue.append((x, idx))
    return PathDecomposition(paths, parent)


def tree_distances(T: Tree) -> tuple[np.ndarray, np.ndarray]:
    """``(ids, d_T)`` with ``d_T[a, b]`` the tree distance between ``ids[a]`` and ``ids[b]``."""
    ids = np.asarray(T.vertices, dtype=int)
    index = {int(x): k for k, x in enumerate(ids)}
    rows = [index[int(x)] for x in T.u]
    cols = [index[int(x)] for x in T.v]
    g = sp.csr_matrix((T.w, (rows, cols)), shape=(len(ids), len(ids)))
    return ids, dijkstra(g, directed=False)


def proximity_violations(dist: np.ndarray, weights: np.ndarray, factor: float, bmax: float, bs=None) -> list[tuple[int, float]]:
    """Rows ``v`` and values ``b`` where no column ``j`` with ``weights[j] >= b``
    has ``dist[v, j] <= factor * b``, for ``0 < b <= bmax``.

    Without ``bs`` every ``b`` is covered: the eligible columns only change at
    the weights, and inside each piece the worst ``b`` is its left end.
    """
    weights = np.asarray(weights, dtype=float)
    out: list[tuple[int, float]] = []
    tol = lambda x: RTOL * max(x, 1.0)  # noqa: E731
    if bs is not None:
        for b in bs:
            elig = weights >= b - tol(b)
            best = dist[:, elig].min(axis=1) if elig.any() else np.full(dist.shape[0], math.inf)
            out.extend((int(v), float(b)) for v in np.flatnonzero(best > factor * b + tol(factor * b)))
        return out
    ws = np.unique(weights)
    left = 0.0
    for wk in ws:
        if left >= bmax:
            break
        elig = weights >= wk
        best = dist[:, elig].min(axis=1)
        bad = np.flatnonzero(best > factor * left + tol(factor * left)) if left > 0 else np.flatnonzero(best > 0)
        b = left if left > 0 else min(wk, bmax)
        out.extend((int(v), float(b)) for v in bad)
        left = wk
    if left < bmax * (1 - RTOL):
        out.extend((int(v), float(left)) for v in range(dist.shape[0]))
    return out


def check_decomposition(T: Tree, dec: PathDecomposition, bs=None) -> dict[str, bool]:
    """Partition, diameter and proximity properties of a decomposition."""
    ids, DT = tree_distances(T)
    index = {int(x): k for k, x in enumerate(ids)}
    tree_edges = sorted((min(a, b), max(a, b)) for a, b in zip(T.u.tolist(), T.v.tolist()))
    path_edges = sorted((min(a, b), max(a, b)) for p in dec.paths for a, b in p.edges())
    covered = sorted({int(x) for p in dec.paths for x in p.vertices})
    diam = float(DT.max()) if len(ids) else 0.0
    cols = []
    for p in dec.paths:
        loc = [index[int(x)] for x in p.vertices]
        cols.append(DT[:, loc].min(axis=1))
    dist = np.column_stack(cols)
    weights = np.asarray([p.weight for p in dec.paths])
    return {
        "partition": tree_edges == path_edges and covered == sorted(index),
        "diameter": math.isclose(dec.paths[0].weight, diam, rel_tol=1e-9, abs_tol=1e-12),
        "proximity": diam == 0 or not proximity_violations(dist, weights, 1.0, diam, bs),
    }


# --- path replacement --------------------------------------------------------


@dataclass(frozen=True)
class Removal:
    level: int
    start: int
    end: int
    kind: str  # "stretch", "end" or "tail"


@dataclass(eq=False)
class ReplacementSet:
    source: PathChain
    paths: list[PathChain]
    removals: list[Removal] = field(default_factory=list)
    split_at: int | None = None

    def hierarchies(self) -> list[PathHierarchy]:
        return [build_path_hierarchy(p) for p in self.paths]


def _segments(sub: list[int], is_cut) -> list[list[int]]:
    cuts = [0] + [k for k in range(1, len(sub) - 1) if is_cut(sub[k])] + [len(sub) - 1]
    return [sub[a : b + 1] for a, b in zip(cuts[:-1], cuts[1:])]


def _stretch_ok(D: np.ndarray, verts: list[int], stretch: float, chunk: int = 512) -> bool:
    """Path stretch of ``verts`` at most ``stretch`` (rows checked in chunks)."""
    if len(verts) <= 2:
        return True
    v = np.asarray(verts)
    cum = np.concatenate([[0.0], np.cumsum(D[v[:-1], v[1:]])])
    for a in range(0, len(v), chunk):
        rows = np.arange(a, min(a + chunk, len(v)))
        dp = cum[None, :] - cum[rows, None]
        right = np.arange(len(v))[None, :] > rows[:, None]
        if np.any(right & (dp > stretch * D[np.ix_(v[rows], v)] * (1 + RTOL))):
            return False
    return True


def _joins(D: np.ndarray, left: list[int], cum_left: np.ndarray, right: list[int], stretch: float) -> bool:
    """Whether pairs across ``left + right[1:]`` keep path stretch ``<= stretch``.

    ``left`` ends where ``right`` starts; both are assumed fine on their own.
    """
    r = np.asarray(right)
    cum_right = np.concatenate([[0.0], np.cumsum(D[r[:-1], r[1:]])])
    dp = (cum_left[-1] - cum_left)[:, None] + cum_right[None, 1:]
    return not np.any(dp > stretch * D[np.ix_(left, r[1:])] * (1 + RTOL))


def _coalesce(D: np.ndarray, segs: list[list[int]], stretch: float) -> list[list[int]]:
    """Merge consecutive pieces while the merged piece keeps path stretch ``<= stretch``.

    Adjacent pieces share their cut vertex, so every merge saves one
    duplicated vertex. A merged piece is still a sub-path of the chain it was
    cut from, so it is no less sparse than the pieces were.
    """
    out = [segs[0]]
    fine = _stretch_ok(D, segs[0], stretch)
    cum = np.concatenate([[0.0], np.cumsum(D[segs[0][:-1], segs[0][1:]])])
    for seg in segs[1:]:
        ok = _stretch_ok(D, seg, stretch)
        if fine and ok and _joins(D, out[-1], cum, seg, stretch):
            out[-1] = out[-1] + seg[1:]
            cum = np.concatenate([cum, cum[-1] + np.cumsum(D[seg[:-1], seg[1:]])])
        else:
            out.append(seg)
            fine = ok
            cum = np.concatenate([[0.0], np.cumsum(D[seg[:-1], seg[1:]])])
    return out


def _replace_chain(D: np.ndarray, verts: list[int], c: float, s: float, bottom: int, pieces: list[list[int]], removals: list[Removal]) -> list[int]:
    """Run the level-by-level removal procedure on one chain; return the surviving chain."""
    limit = 1.0 + 1.0 / (3.0 * c * (c + 1.0) * s)
    W = list(verts)

    def cut_pieces(sub: list[int], is_cut) -> list[list[int]]:
        return _coalesce(D, _segments(sub, is_cut), 1.0 + 32.0 / c)

    rank: dict[int, int] = {}

    def cut_test(level: int):
        if level < bottom:
            return lambda x: True
        return lambda x: rank.get(x, bottom - 1) >= level

    i = bottom
    while len(W) > 2:
        cum = np.concatenate([[0.0], np.cumsum(D[W[:-1], W[1:]])])
        # promote (i-1)-level points at path distance >= 2^i from the previous promoted one
        below = cut_test(i - 1)
        r = 2.0**i
        net = [0]
        for k in range(1, len(W)):
            if below(W[k]) and cum[k] - cum[net[-1]] >= r * (1 - RTOL):
                net.append(k)
        for k in net:
            rank[W[k]] = i
        cut = cut_test(i - 2)
        reach = c * r
        t = 0
        terminal = False
        while True:
            x = net[t]
            later = np.asarray(net[t + 1 :], dtype=int)
            d = D[W[x], [W[k] for k in later]] if len(later) else np.empty(0)
            hit = np.flatnonzero(d >= reach)
            if len(hit) == 0:
                # no associate: close the path from x to the last net point and
                # cut off what follows; when x is the first point we are done
                terminal = x == 0
                last = net[-1]
                if last > x + 1:
                    pieces.extend(cut_pieces(W[x : last + 1], cut))
                    removals.append(Removal(i, W[x], W[last], "end"))
                if last < len(W) - 1:
                    pieces.extend(cut_pieces(W[last:], cut))
                    removals.append(Removal(i, W[last], W[-1], "tail"))
                W = W[: x + 1] + ([W[last]] if last > x else [])
                break
            q = int(later[hit[0]])
            if (cum[q] - cum[x]) / d[hit[0]] > limit:
                pieces.extend(cut_pieces(W[x : q + 1], cut))
                removals.append(Removal(i, W[x], W[q], "stretch"))
                gap = q - x - 1
                W = W[: x + 1] + W[q:]
                cum = np.concatenate([cum[: x + 1], cum[q:] - (cum[q] - cum[x] - D[W[x], W[x + 1]])])
                net = [k for k in net if k <= x] + [k - gap for k in net if k >= q]
                t = net.index(x + 1)
            else:
                t += 1  # the associate lies further down, so t stays in range
        if terminal:
            break
        i += 1
    return W


def replace_path(space: MetricSpace, P: PathChain, c: float, s: float, *, bottom: int | None = None) -> ReplacementSet:
    """Replace ``P`` by low-stretch paths.

    When the endpoints are metrically close the path is first split at the
    vertex farthest from both. Each level then promotes path-net points and
    cuts out sub-paths between a point and its associate (the first same-level
    point at distance ``>= c 2^i``) whose stretch exceeds
    ``1 + 1/(3c(c+1)s)``; a cut sub-path becomes a direct edge and is split
    into pieces at its ``(i-2)``-level points, and neighboring pieces are
    merged back whenever the merge keeps stretch ``1 + 32/c``.

    Levels start at ``bottom``, by default the level where ``c 2^i`` first
    drops below the shortest edge, so even adjacent vertices can be associates.
    """
    if c < 24:
        raise ValueError("c must be >= 24")
    if s <= 0:
        raise ValueError("s must be positive")
    D = space.dist
    verts = [int(x) for x in P.vertices]
    if len(verts) <= 2:
        return ReplacementSet(P, [P])
    if bottom is None:
        bottom = math.floor(math.log2(float(P.edge_lengths.min()) / c))
    sub = D[np.ix_(verts, verts)]
    diam = float(sub.max())
    split = None
    chains = [verts]
    if sub[0, -1] <= diam / 3.0:
        far = np.minimum(sub[0], sub[-1])
        far[0] = far[-1] = -np.inf
        split = int(np.argmax(far))
        chains = [verts[: split + 1], verts[split:]]
    pieces: list[list[int]] = []
    removals: list[Removal] = []
    mains = [_replace_chain(D, ch, c, s, bottom, pieces, removals) for ch in chains]
    paths = [PathChain.from_vertices(space, m) for m in mains] + [PathChain.from_vertices(space, p) for p in pieces]
    return ReplacementSet(P, paths, removals, split)


@dataclass(frozen=True)
class Check:
    value: float
    bound: float
    ok: bool


def check_replacement(space: MetricSpace, rs: ReplacementSet, c: float, s: float) -> dict[str, Check]:
    """Evaluate the six replacement guarantees exactly."""
    P = rs.source
    D = space.dist
    VP = np.asarray(P.vertices)
    diam = float(D[np.ix_(VP, VP)].max()) if len(VP) > 1 else 0.0
    out: dict[str, Check] = {}
    covered = set()
    total = 0
    for p in rs.paths:
        covered.update(p.vertices.tolist())
        total += len(p)
    out["cover"] = Check(total, 3 * len(VP), covered == set(VP.tolist()) and total <= 3 * len(VP))
    worst = max(path_stretch(p, space) for p in rs.paths)
    out["stretch"] = Check(worst, 1 + 32 / c, worst <= (1 + 32 / c) * (1 + RTOL))
    longest = max(p.weight for p in rs.paths)
    out["diameter"] = Check(longest, diam / 4, longest >= diam / 4 * (1 - RTOL))
    if diam > 0:
        dist = np.column_stack([D[np.ix_(VP, p.vertices)].min(axis=1) for p in rs.paths])
        weights = np.asarray([p.weight for p in rs.paths])
        bad = proximity_violations(dist, weights, 16 * (c + 1), diam / 4)
        out["proximity"] = Check(len(bad), 0, not bad)
    else:
        out["proximity"] = Check(0, 0, True)
    worst_s = max(sparsity(p, space).s for p in rs.paths)
    out["path_sparsity"] = Check(worst_s, 3 * s, worst_s <= 3 * s * (1 + RTOL))
    merged = union(*[SpannerGraph.from_edges(space.n, p.vertices[:-1], p.vertices[1:], p.edge_lengths) for p in rs.paths])
    us = sparsity(merged, space).s
    out["union_sparsity"] = Check(us, 3 * s * (3 * c * s + 1), us <= 3 * s * (3 * c * s + 1) * (1 + RTOL))
    bound = 3 * s * (3 * c * (c + 1) * s + 1) * P.weight
    out["union_weight"] = Check(merged.weight, bound, merged.weight <= bound * (1 + RTOL))
    return out


# --- bipartite spanners between paths ----------------------------------------


def _cross_candidates(D: np.ndarray, hiers: list[PathHierarchy], c: float, close: np.ndarray, chunk: int = 2048) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Same-level path-net points of two different close paths closer than ``c 2^i``.

    Vertex ids are indices into ``D``. Above a path's top level only its first
    vertex remains, and levels rise until every pair of first vertices
    qualifies.
    """
    if len(hiers) < 2 or not close.any():
        z = np.empty(0, dtype=int)
        return z, z.copy(), z.copy()
    firsts = np.asarray([int(h.path.vertices[0]) for h in hiers])
    span = float(D[np.ix_(firsts, firsts)].max())
    lo = min(h.bottom for h in hiers)
    hi = max(max(h.top for h in hiers), math.ceil(math.log2(max(span, 1.0) / c)) + 1)
    keys, levels = [], []
    n = D.shape[0]
    for i in range(lo, hi + 1):
        pts_list, pid_list = [], []
        for k, h in enumerate(hiers):
            pts = h.points(i)
            pts_list.append(pts)
            pid_list.append(np.full(len(pts), k))
        pts = np.concatenate(pts_list)
        pid = np.concatenate(pid_list)
        thr = c * 2.0**i
        for a in range(0, len(pts), chunk):
            rows = np.arange(a, min(a + chunk, len(pts)))
            m = D[np.ix_(pts[rows], pts)] < thr
            m &= close[np.ix_(pid[rows], pid)]
            m &= pts[rows][:, None] != pts[None, :]
            m &= rows[:, None] < np.arange(len(pts))[None, :]
            r, col = np.nonzero(m)
            x, y = pts[rows[r]], pts[col]
            keys.append(np.minimum(x, y).astype(np.int64) * n + np.maximum(x, y))
            levels.append(np.full(len(r), i))
    key = np.concatenate(keys)
    level = np.concatenate(levels)
    order = np.lexsort((level, key))
    key, level = key[order], level[order]
    first = np.ones(len(key), dtype=bool)
    first[1:] = key[1:] != key[:-1]
    key, level = key[first], level[first]
    return key // n, key % n, level


def path_distances(D: np.ndarray, paths: list[PathChain]) -> np.ndarray:
    """Minimum vertex-to-vertex distance between every two paths."""
    k = len(paths)
    allv = np.concatenate([p.vertices for p in paths])
    starts = np.cumsum([0] + [len(p) for p in paths[:-1]])
    out = np.empty((k, k))
    for a, p in enumerate(paths):
        row = D[p.vertices].min(axis=0)
        out[a] = np.minimum.reduceat(row[allv], starts)
    return out


@dataclass(eq=False)
class PairSpanner:
    edges: SpannerGraph
    b1: float
    candidates: int


def bipartite_pair_spanner(
    space: MetricSpace,
    P: PathChain,
    Q: PathChain,
    c: float,
    b2: float,
    *,
    b1: float | None = None,
    hierarchies: tuple[PathHierarchy, PathHierarchy] | None = None,
) -> PairSpanner:
    """Greedy bipartite hierarchical spanner between two low-stretch paths.

    Candidate edges join same-level path-net points of ``P`` and ``Q`` closer
    than ``c 2^i``; scanned by weight, each is added only if the current graph
    on ``P ∪ Q`` stretches it by more than ``1 + b1 + b2``. Paths farther
    apart than ``c min(w(P), w(Q))`` get no edges.
    """
    if c < 24:
        raise ValueError("c must be >= 24")
    if b1 is None:
        b1 = max(path_stretch(P, space), path_stretch(Q, space)) - 1.0
    if not 0 < b2 <= max(1.0 - b1, 0.0):
        raise ValueError("need 0 < b2 <= 1 - b1")
    D = space.dist
    gap = float(D[np.ix_(P.vertices, Q.vertices)].min())
    if gap > c * min(P.weight, Q.weight):
        return PairSpanner(SpannerGraph.empty(space.n), b1, 0)
    ids = np.unique(np.concatenate([P.vertices, Q.vertices]))
    index = np.full(space.n, -1)
    index[ids] = np.arange(len(ids))
    local = [PathChain(index[p.vertices], p.cum) for p in (P, Q)]
    if hierarchies is None:
        hs = [build_path_hierarchy(p) for p in local]
    else:
        hs = [PathHierarchy(lp, h.bottom, h.top, h.levels) for lp, h in zip(local, hierarchies)]
    Dl = D[np.ix_(ids, ids)]
    close = np.array([[False, True], [True, False]])
    a, b, level = _cross_candidates(Dl, hs, c, close)
    pu = np.concatenate([p.vertices[:-1] for p in local])
    pv = np.concatenate([p.vertices[1:] for p in local])
    added = _greedy(Dl, pu, pv, a, b, 1.0 + b1 + b2)
    E = SpannerGraph.from_edges(space.n, ids[a[added]], ids[b[added]], Dl[a[added], b[added]], level[added], "bipartite")
    return PairSpanner(E, b1, len(a))


def _greedy(D: np.ndarray, pu, pv, a, b, factor: float) -> np.ndarray:
    w = D[a, b]
    order = sort_edges(a, b, w)
    state = GreedyState(D.shape[0], pu, pv, D[pu, pv])
    added = np.zeros(len(a), dtype=bool)
    added[order] = greedy_fill(state, a[order], b[order], w[order], factor)
    return added


def check_pair_spanner(space: MetricSpace, P: PathChain, Q: PathChain, res: PairSpanner, c: float, b2: float, s: float) -> dict[str, Check]:
    """Cross-pair stretch on ``P ∪ Q ∪ E'`` and the weight of ``E'``."""
    paths = [SpannerGraph.from_edges(space.n, p.vertices[:-1], p.vertices[1:], p.edge_lengths) for p in (P, Q)]
    G = union(res.edges, *paths)
    DR = dijkstra(G.csr(), directed=False, indices=P.vertices)[:, Q.vertices]
    DG = space.dist[np.ix_(P.vertices, Q.vertices)]
    ok = DG > 0
    worst = float((DR[ok] / DG[ok]).max()) if ok.any() else 1.0
    sb = 1 + 32 / c + 6 * (res.b1 + b2)
    wb = 12 * c * c * s / b2 * min(P.weight, Q.weight)
    return {
        "stretch": Check(worst, sb, worst <= sb * (1 + RTOL)),
        "weight": Check(res.edges.weight, wb, res.edges.weight <= wb * (1 + RTOL)),
    }


# --- sparse-tree spanner -----------------------------------------------------


def tree_constants(eps: float, s: float, profile: str = "desk", overrides: dict | None = None) -> dict[str, float]:
    """Replacement parameter ``c1``, bipartite parameter ``c2`` and slack ``b2``."""
    if profile == "faithful":
        c1 = 3 * 2**7 / eps
        consts = {"c1": c1, "c2": max(16 * c1 + 18, 8 * s) * 2**6 / eps, "b2": eps / 12}
    elif profile == "desk":
        consts = {"c1": max(24.0, 8 / eps), "c2": max(24.0, 16 / eps), "b2": eps / 12}
    else:
        raise ValueError(f"unknown profile {profile!r}; expected one of {PROFILES}")
    for k, v in (overrides or {}).items():
        if k in consts:
            consts[k] = float(v)
    return consts


def check_eps(eps: float) -> None:
    # 1/2 itself is admitted: the stretch argument only needs eps <= 1/2
    if not 0 < eps <= 0.5:
        raise ValueError(f"eps must lie in (0, 1/2], got {eps}")


def sparse_tree_spanner(
    space: MetricSpace,
    T: Tree,
    eps: float,
    *,
    profile: str = "desk",
    overrides: dict | None = None,
    certify: bool = True,
) -> tuple[SpannerGraph, dict]:
    """Spanner for the vertices of ``T`` from its path decomposition.

    Returns the spanner (over the ids of ``space``) and a stats dict. With
    ``certify`` a final greedy pass over the ``(64/eps)``-neighbor pairs of a
    net hierarchy on ``V_T`` tops up any pair stretched beyond ``1 + eps/12``,
    which bounds the overall stretch by ``1 + eps``; the number of repair
    edges is reported.
    """
    check_eps(eps)
    ids = np.asarray(T.vertices, dtype=int)
    n = space.n
    info: dict = {"vertices": int(len(ids)), "tree_weight": T.weight}
    if len(ids) <= 1:
        return SpannerGraph.empty(n), info | {"edges": 0, "weight": 0.0}
    sub = space.subspace(ids)
    index = np.full(n, -1)
    index[ids] = np.arange(len(ids))
    lt = Tree(np.arange(len(ids)), index[T.u], index[T.v], T.w)
    s = max(sparsity(lt, sub).s, 1.0)
    consts = tree_constants(eps, s, profile, overrides)
    info |= {"s": s, "profile": profile} | consts
    dec = decompose_tree(lt, sub)
    replaced: list[PathChain] = []
    removals = 0
    for p in dec.paths:
        rs = replace_path(sub, p, consts["c1"], s)
        replaced.extend(rs.paths)
        removals += len(rs.removals)
    D = sub.dist
    pu = np.concatenate([p.vertices[:-1] for p in replaced])
    pv = np.concatenate([p.vertices[1:] for p in replaced])
    path_graph = SpannerGraph.from_edges(len(ids), pu, pv, D[pu, pv], 0, "paths")
    b1 = max(path_stretch(p, sub) for p in replaced) - 1.0
    weights = np.asarray([p.weight for p in replaced])
    close = path_distances(D, replaced) <= consts["c2"] * np.minimum(weights[:, None], weights[None, :])
    np.fill_diagonal(close, False)
    hiers = [build_path_hierarchy(p) for p in replaced]
    a, b, level = _cross_candidates(D, hiers, consts["c2"], close)
    added = _greedy(D, path_graph.u, path_graph.v, a, b, 1.0 + b1 + consts["b2"])
    cross = SpannerGraph.from_edges(len(ids), a[added], b[added], D[a[added], b[added]], level[added], "bipartite")
    R = union(path_graph, cross)
    repairs = 0
    if certify:
        h = build_hierarchy(sub)
        extra = certify_neighbors(R, h, 64 / eps, eps / 12)
        repairs = len(extra)
        R = union(R, extra)
    info |= {
        "paths_decomposed": len(dec.paths),
        "paths_replaced": len(replaced),
        "removals": removals,
        "b1": b1,
        "candidates": int(len(a)),
        "bipartite_edges": int(added.sum()),
        "repairs": repairs,
        "edges": len(R),
        "weight": R.weight,
        "weight_ratio": R.weight / T.weight if T.weight else 0.0,
    }
    return R.relabel(ids, n), info
