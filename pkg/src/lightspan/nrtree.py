"""Exact MSTs and net-respecting spanning trees.

An edge ``(x, y)`` of weight ``w`` is net-respecting at level ``i`` when both
endpoints are level-``i`` net points and ``12 * 2^i <= w < 48 * 2^i``. Nets
are nested, so an edge is net-respecting iff its endpoints survive to the
lowest level whose window contains ``w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree

from .hierarchy import NetHierarchy
from .metric import MetricSpace

WINDOW_LO = 12.0
WINDOW_HI = 48.0  # 24 * 2^(i+1) = 48 * 2^i


@dataclass(eq=False)
class Tree:
    vertices: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @property
    def weight(self) -> float:
        return float(self.w.sum())

    def __len__(self) -> int:
        return len(self.u)

    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.u.tolist(), self.v.tolist(), self.w.tolist()))

    def is_spanning_tree(self) -> bool:
        """Acyclic and connected on ``vertices``."""
        k = len(self.vertices)
        if len(self.u) != k - 1:
            return False
        if k <= 1:
            return True
        index = {int(p): a for a, p in enumerate(self.vertices)}
        try:
            rows = [index[int(x)] for x in self.u]
            cols = [index[int(x)] for x in self.v]
        except KeyError:
            return False
        g = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(k, k))
        ncomp, _ = connected_components(g, directed=False)
        return ncomp == 1


@dataclass(eq=False)
class NRTree(Tree):
    witness: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    flagged: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=bool))
    fallback: bool = False

    def __post_init__(self) -> None:
        if len(self.flagged) != len(self.u):
            self.flagged = np.zeros(len(self.u), dtype=bool)


def nr_level(w):
    """Lowest level ``i`` whose window ``[12 2^i, 48 2^i)`` contains ``w``."""
    w = np.asarray(w, dtype=float)
    i = np.floor(np.log2(w / WINDOW_HI)).astype(int) + 1
    i = np.where(WINDOW_HI * np.exp2(i - 1.0) > w, i - 1, i)
    i = np.where(w >= WINDOW_HI * np.exp2(i * 1.0), i + 1, i)
    return i


def in_window(w: float, i: int) -> bool:
    return WINDOW_LO * 2.0**i <= w < WINDOW_HI * 2.0**i


def witness_level(w, bottom: int):
    """Smallest level ``>= bottom`` whose window contains ``w``.

    Weights below ``12 * 2^bottom`` fit no level of the hierarchy; for those
    the returned level is ``bottom`` and the caller must flag the edge.
    """
    return np.maximum(nr_level(w), bottom)


def bottom_for(min_weight: float = 1.0) -> int:
    """Lowest hierarchy level needed so every edge of weight ``>= min_weight`` fits a window."""
    return min(0, math.floor(math.log2(min_weight / WINDOW_LO)))


def _prim(D: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Prim on a dense matrix (``inf`` = no edge); returns local endpoint arrays."""
    k = D.shape[0]
    if k <= 1:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    done = np.zeros(k, dtype=bool)
    done[0] = True
    best = D[0].astype(float).copy()
    best[0] = np.inf
    src = np.zeros(k, dtype=int)
    us, vs = [], []
    for _ in range(k - 1):
        j = int(np.argmin(best))
        if not np.isfinite(best[j]):
            raise ValueError("graph is disconnected")
        us.append(int(src[j]))
        vs.append(j)
        done[j] = True
        best[j] = np.inf
        row = D[j]
        better = (row < best) & ~done
        best[better] = row[better]
        src[better] = j
    return np.asarray(us), np.asarray(vs)


def mst(space: MetricSpace, subset=None) -> Tree:
    """Exact minimum spanning tree of the complete graph on ``subset``."""
    ids = np.arange(space.n) if subset is None else np.unique(np.asarray(subset, dtype=int))
    if len(ids) == 0:
        raise ValueError("subset must be nonempty")
    D = space.dist[np.ix_(ids, ids)]
    a, b = _prim(D)
    return Tree(ids, ids[a], ids[b], D[a, b] if len(a) else np.empty(0))


def _nr_mask(h: NetHierarchy, ids: np.ndarray, D: np.ndarray) -> np.ndarray:
    rank = h.rank[ids]
    safe = np.where(D > 0, D, 1.0)
    lvl = witness_level(safe, h.L)
    fits = safe >= WINDOW_LO * 2.0**h.L
    return fits & (np.minimum(rank[:, None], rank[None, :]) >= lvl)


def is_net_respecting(h: NetHierarchy, x: int, y: int, w: float) -> bool:
    if w < WINDOW_LO * 2.0**h.L:
        return False
    i = int(witness_level(w, h.L))
    return h.is_net(x, i) and h.is_net(y, i)


def make_net_respecting(T: Tree, h: NetHierarchy) -> NRTree:
    """Replace each edge by a long edge between ancestors at the lowest level
    whose window fits, plus the short edges to those ancestors, recursively.

    Levels ``i <= 0`` contain every point, so an edge shorter than ``96``
    already respects the hierarchy. An edge lighter than ``12 * 2^L`` fits no
    level of ``h``; it is kept as-is and flagged. Duplicates are dropped and
    the result is pruned to a spanning tree of the produced edges.
    """
    D = h.space.dist
    floor_w = WINDOW_LO * 2.0**h.L
    found: dict[tuple[int, int], int] = {}
    flagged: set[tuple[int, int]] = set()
    stack = [(int(a), int(b)) for a, b in zip(T.u, T.v)]
    while stack:
        x, y = stack.pop()
        if x == y:
            continue
        key = (min(x, y), max(x, y))
        if key in found:
            continue
        w = D[x, y]
        if w < floor_w:
            found[key] = h.L
            flagged.add(key)
            continue
        i0 = int(witness_level(w, h.L))
        if i0 <= 0 or (h.is_net(x, i0) and h.is_net(y, i0)):
            found[key] = i0
            continue
        for i in range(1, h.H + 1):
            xa, ya = h.ancestor(x, i), h.ancestor(y, i)
            if in_window(D[xa, ya], i):
                break
        else:  # pragma: no cover - the window always fits below the top
            raise AssertionError(f"no level fits edge ({x}, {y})")
        lkey = (min(xa, ya), max(xa, ya))
        found[lkey] = min(found.get(lkey, i), i)
        stack.append((x, xa))
        stack.append((y, ya))
    keys = sorted(found)
    u = np.asarray([k[0] for k in keys], dtype=int)
    v = np.asarray([k[1] for k in keys], dtype=int)
    wit = np.asarray([found[k] for k in keys], dtype=int)
    flag = np.asarray([k in flagged for k in keys], dtype=bool)
    verts = np.unique(np.concatenate([T.vertices, u, v]))
    return _prune(verts, u, v, D[u, v] if len(u) else np.empty(0), wit, flag)


def _prune(verts, u, v, w, wit, flag, fallback: bool = False) -> NRTree:
    """Minimum spanning tree of a connected edge set (keeps witnesses)."""
    if len(u) == 0:
        return NRTree(verts, u, v, w, witness=wit, flagged=flag, fallback=fallback)
    index = np.full(int(verts.max()) + 1, -1)
    index[verts] = np.arange(len(verts))
    a, b = index[u], index[v]
    g = sp.csr_matrix((w, (a, b)), shape=(len(verts), len(verts)))
    t = minimum_spanning_tree(g).tocoo()
    lookup = {(int(x), int(y)): k for k, (x, y) in enumerate(zip(a, b))}
    sel = np.asarray(sorted(lookup.get((int(r), int(c)), lookup.get((int(c), int(r)))) for r, c in zip(t.row, t.col)), dtype=int)
    return NRTree(verts, u[sel], v[sel], w[sel], witness=wit[sel], flagged=flag[sel], fallback=fallback)


def nr_mst(space: MetricSpace, h: NetHierarchy, candidate_edges=None, subset=None) -> NRTree:
    """Minimum spanning tree over net-respecting edges.

    Without ``candidate_edges`` all net-respecting pairs inside ``subset`` are
    considered. If the net-respecting candidates do not connect the vertex
    set, the tree falls back to converting the plain MST and is flagged.
    """
    ids = np.arange(space.n) if subset is None else np.unique(np.asarray(subset, dtype=int))
    if len(ids) <= 1:
        return NRTree(ids, np.empty(0, dtype=int), np.empty(0, dtype=int), np.empty(0), witness=np.empty(0, dtype=int))
    if candidate_edges is None:
        D = space.dist[np.ix_(ids, ids)]
        masked = np.where(_nr_mask(h, ids, D), D, np.inf)
        try:
            a, b = _prim(masked)
        except ValueError:
            return _fallback(space, h, ids)
        u, v = ids[a], ids[b]
        w = D[a, b]
        return NRTree(ids, u, v, w, witness=witness_level(w, h.L))
    pairs = np.asarray(candidate_edges, dtype=int).reshape(-1, 2)
    inside = np.isin(pairs[:, 0], ids) & np.isin(pairs[:, 1], ids)
    pairs = pairs[inside]
    w = space.dist[pairs[:, 0], pairs[:, 1]]
    lvl = witness_level(w, h.L) if len(w) else np.empty(0, dtype=int)
    keep = (np.minimum(h.rank[pairs[:, 0]], h.rank[pairs[:, 1]]) >= lvl) & (w >= WINDOW_LO * 2.0**h.L)
    pairs, w, lvl = pairs[keep], w[keep], lvl[keep]
    index = np.full(space.n, -1)
    index[ids] = np.arange(len(ids))
    g = sp.csr_matrix((w, (index[pairs[:, 0]], index[pairs[:, 1]])), shape=(len(ids), len(ids)))
    ncomp, _ = connected_components(g, directed=False)
    if ncomp != 1:
        return _fallback(space, h, ids)
    return _prune(ids, pairs[:, 0], pairs[:, 1], w, lvl, np.zeros(len(w), dtype=bool))


def _fallback(space: MetricSpace, h: NetHierarchy, ids: np.ndarray) -> NRTree:
    t = make_net_respecting(mst(space, ids), h)
    t.fallback = True
    return t


def check_nr_tree(t: NRTree, h: NetHierarchy, *, strict: bool = True) -> list[str]:
    """Every violated invariant, as readable strings (empty when valid).

    With ``strict=False`` flagged edges (too light for any level) are accepted.
    """
    problems = []
    D = h.space.dist
    for x, y, w, i, f in zip(t.u.tolist(), t.v.tolist(), t.w.tolist(), t.witness.tolist(), t.flagged.tolist()):
        if not math.isclose(w, D[x, y], rel_tol=1e-12):
            problems.append(f"edge ({x},{y}) weight {w} != {D[x, y]}")
        if f:
            if strict:
                problems.append(f"edge ({x},{y}) weight {w} fits no level (flagged)")
            continue
        if i < h.L:
            problems.append(f"edge ({x},{y}) witness {i} below bottom level {h.L}")
        if not in_window(w, i):
            problems.append(f"edge ({x},{y}) weight {w} outside window of level {i}")
        if not (h.is_net(x, i) and h.is_net(y, i)):
            problems.append(f"edge ({x},{y}) endpoints not level-{i} net points")
    if not t.is_spanning_tree():
        problems.append("not a spanning tree of its vertex set")
    return problems
