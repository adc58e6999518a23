"""Net hierarchies, c-neighbor lists, path-nets and semi-hierarchies.

Level ``i`` of a hierarchy is a ``2^i``-net of level ``i-1``. Once the space
is normalized (minimum distance 1) every level ``i <= 0`` contains all
points, so those levels are represented implicitly: ``rank[p]`` is the highest
level at which ``p`` is a net point and membership of level ``i`` is
``rank[p] >= i``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .metric import RTOL, MetricSpace, log2_ceil


@dataclass(eq=False)
class NetHierarchy:
    space: MetricSpace
    L: int
    H: int
    rank: np.ndarray
    parent: dict[int, np.ndarray]
    _anc: dict[int, np.ndarray] = field(default_factory=dict, repr=False)
    _neighbors: dict[tuple[int, float], np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def M(self) -> int:
        return self.H - self.L + 1

    @property
    def root(self) -> int:
        return int(self.members(self.H)[0])

    @property
    def levels(self) -> dict[int, np.ndarray]:
        return {i: self.members(i) for i in range(self.L, self.H + 1)}

    def members(self, i: int) -> np.ndarray:
        """Net points of level ``i`` in ascending id order."""
        i = min(i, self.H)
        if i <= 0 and self.space.n > 1:
            return np.arange(self.space.n)
        return np.flatnonzero(self.rank >= i)

    def is_net(self, p: int, i: int) -> bool:
        return i <= 0 or bool(self.rank[p] >= i)

    def ancestors(self, i: int) -> np.ndarray:
        """Level-``i`` ancestor of every point."""
        i = min(i, self.H)
        if i <= 0:
            return np.arange(self.space.n)
        if i not in self._anc:
            below = self.ancestors(i - 1)
            self._anc[i] = self.parent[i - 1][below]
        return self._anc[i]

    def ancestor(self, p: int, i: int) -> int:
        return int(self.ancestors(i)[p])

    def neighbors(self, c: float, i: int) -> np.ndarray:
        """Level-``i`` c-neighbor pairs ``(u, v)``, ``u < v``, ``d(u,v) < c 2^i``."""
        key = (i, float(c))
        if key not in self._neighbors:
            c_neighbors(self, c, lo=i)
        return self._neighbors[key]

    def to_json(self, c: float | None = None) -> str:
        doc = {
            "L": self.L,
            "H": self.H,
            "levels": {str(i): self.members(i).tolist() for i in range(max(self.L, 0), self.H + 1)},
            "parents": {str(i): {str(int(p)): int(self.parent[i][p]) for p in self.members(i)} for i in range(max(self.L, 0), self.H)},
        }
        if c is not None:
            doc["neighbor_list_sizes"] = {str(i): int(len(self.neighbors(c, i))) for i in range(self.L, self.H + 1)}
        return json.dumps(doc, indent=1)


def build_hierarchy(space: MetricSpace, L: int = 0) -> NetHierarchy:
    """Greedy nested nets: scan candidates by ascending id, the first uncovered
    point becomes a net point; each point's parent is the covering net point of
    smallest id. Expects a normalized space.
    """
    n = space.n
    if L > 0:
        raise ValueError("bottom level must be <= 0")
    if n <= 1:
        return NetHierarchy(space, L, L, np.full(n, L, dtype=int), {})
    if space.min_distance() < 1.0 - RTOL:
        raise ValueError("build_hierarchy expects a normalized space (min distance >= 1)")
    D = space.dist
    rank = np.zeros(n, dtype=int)
    parent: dict[int, np.ndarray] = {}
    current = np.arange(n)
    top = log2_ceil(space.diameter())
    i = 0
    while True:
        if i >= top and len(current) == 1:
            break
        i += 1
        r = 2.0**i
        sub = D[np.ix_(current, current)]
        covered = np.zeros(len(current), dtype=bool)
        chosen = []
        for k in range(len(current)):
            if covered[k]:
                continue
            chosen.append(k)
            covered |= sub[k] < r
        chosen = np.asarray(chosen)
        # first covering net point in ascending id order (nets are sorted)
        cover = sub[:, chosen] < r
        par_local = chosen[np.argmax(cover, axis=1)]
        par = np.full(n, -1, dtype=int)
        par[current] = current[par_local]
        parent[i - 1] = par
        current = current[chosen]
        rank[current] = i
    H = i
    return NetHierarchy(space, L, H, rank, parent)


def c_neighbors(h: NetHierarchy, c: float, lo: int | None = None) -> dict[int, np.ndarray]:
    """Per-level c-neighbor pairs, computed top-down.

    For ``c >= 4`` the parents of two level-``i`` c-neighbors are level-``i+1``
    c-neighbors (or equal), so the candidates at level ``i`` are the children of
    the neighbor pairs one level up. Smaller ``c`` falls back to a direct scan.
    """
    if c < 2:
        raise ValueError("c must be >= 2")
    lo = h.L if lo is None else lo
    D = h.space.dist
    n = h.space.n
    out: dict[int, np.ndarray] = {}
    adj = None
    for i in range(h.H, lo - 1, -1):
        key = (i, float(c))
        thresh = c * 2.0**i
        mem = h.members(i)
        if key in h._neighbors:
            pairs = h._neighbors[key]
        elif n < 2 or thresh <= 1.0:
            pairs = np.empty((0, 2), dtype=int)
        elif adj is None or c < 4:
            sub = D[np.ix_(mem, mem)]
            a, b = np.nonzero(np.triu(sub < thresh, 1))
            pairs = np.column_stack([mem[a], mem[b]])
        else:
            if i >= 0:
                par = h.parent[i]
                C = sp.csr_matrix((np.ones(len(mem)), (mem, par[mem])), shape=(n, n))
            else:
                C = sp.identity(n, format="csr")
            cand = sp.triu(C @ adj @ C.T, 1).tocoo()
            keep = D[cand.row, cand.col] < thresh
            pairs = np.column_stack([cand.row[keep], cand.col[keep]])
            order = np.lexsort((pairs[:, 1], pairs[:, 0]))
            pairs = pairs[order]
        pairs = pairs.astype(int, copy=False)
        h._neighbors[key] = pairs
        out[i] = pairs
        if n >= 2:
            rows = np.concatenate([pairs[:, 0], pairs[:, 1], mem])
            cols = np.concatenate([pairs[:, 1], pairs[:, 0], mem])
            adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return out


def all_neighbor_pairs(h: NetHierarchy, c: float, lo: int | None = None, hi: int | None = None) -> np.ndarray:
    """Distinct c-neighbor pairs over levels ``lo..hi`` (inclusive)."""
    lo = h.L if lo is None else lo
    hi = h.H if hi is None else hi
    per = c_neighbors(h, c, lo=lo)
    chunks = [per[i] for i in range(lo, hi + 1) if i in per]
    if not chunks:
        return np.empty((0, 2), dtype=int)
    pairs = np.concatenate(chunks)
    if len(pairs) == 0:
        return pairs
    return np.unique(pairs, axis=0)


# --- paths -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PathChain:
    """An ordered vertex sequence whose consecutive edges weigh ``d_G``."""

    vertices: np.ndarray
    cum: np.ndarray

    @classmethod
    def from_vertices(cls, space: MetricSpace, vertices: Iterable[int]) -> PathChain:
        verts = np.asarray(list(vertices), dtype=int)
        if len(verts) == 0:
            raise ValueError("a path needs at least one vertex")
        steps = space.dist[verts[:-1], verts[1:]] if len(verts) > 1 else np.empty(0)
        return cls(verts, np.concatenate([[0.0], np.cumsum(steps)]))

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.diff(self.cum)

    @property
    def weight(self) -> float:
        return float(self.cum[-1])

    def __len__(self) -> int:
        return len(self.vertices)

    def d_path(self, a: int, b: int) -> float:
        """Path distance between positions ``a`` and ``b``."""
        return abs(float(self.cum[a] - self.cum[b]))

    def edges(self) -> list[tuple[int, int]]:
        v = self.vertices.tolist()
        return list(zip(v[:-1], v[1:]))


def build_path_net(P: PathChain, r: float, candidates: np.ndarray | None = None) -> np.ndarray:
    """Greedy walk: keep the first candidate, then every candidate at path
    distance ``>= r`` from the previously kept one. Returns positions."""
    if r <= 0:
        raise ValueError("radius must be positive")
    cand = np.arange(len(P)) if candidates is None else np.asarray(candidates)
    cum = P.cum
    kept = [int(cand[0])]
    last = cum[cand[0]]
    tol = RTOL * max(r, 1.0)
    for k in cand[1:]:
        if cum[k] - last >= r - tol:
            kept.append(int(k))
            last = cum[k]
    return np.asarray(kept, dtype=int)


@dataclass(eq=False)
class PathHierarchy:
    """Nested path-nets under ``d_P``; a semi-hierarchy under ``d_G``.

    ``levels[i]`` holds positions along ``path``. Levels below ``bottom``
    contain every position and levels above ``top`` only the first vertex.
    """

    path: PathChain
    bottom: int
    top: int
    levels: dict[int, np.ndarray]

    def positions(self, i: int) -> np.ndarray:
        if i <= self.bottom:
            return self.levels[self.bottom]
        if i > self.top:
            return self.levels[self.top][:1]
        return self.levels[i]

    def points(self, i: int) -> np.ndarray:
        return self.path.vertices[self.positions(i)]


def build_path_hierarchy(P: PathChain) -> PathHierarchy:
    lengths = P.edge_lengths
    bottom = 0
    if len(lengths) and lengths.min() < 1.0:
        bottom = math.floor(math.log2(lengths.min()))
    w = P.weight
    top = max(log2_ceil(w), bottom) if w > 0 else bottom
    levels = {bottom: np.arange(len(P))}
    for i in range(bottom + 1, top + 1):
        levels[i] = build_path_net(P, 2.0**i, levels[i - 1])
    return PathHierarchy(P, bottom, top, levels)


@dataclass(eq=False)
class SemiHierarchy:
    """Levels of point ids satisfying covering but not necessarily packing."""

    levels: dict[int, np.ndarray]
    space: MetricSpace | None = None

    @property
    def L(self) -> int:
        return min(self.levels) if self.levels else 0

    @property
    def H(self) -> int:
        return max(self.levels) if self.levels else 0

    def points(self, i: int) -> np.ndarray:
        return self.levels.get(i, np.empty(0, dtype=int))

    def neighbors(self, c: float, i: int) -> np.ndarray:
        """Level-``i`` pairs ``(u, v)``, ``u < v``, ``d(u,v) < c 2^i``, by direct scan."""
        if self.space is None:
            raise ValueError("neighbor queries need the semi-hierarchy's space")
        mem = self.points(i)
        sub = self.space.dist[np.ix_(mem, mem)]
        a, b = np.nonzero(np.triu(sub < c * 2.0**i, 1))
        pairs = np.column_stack([mem[a], mem[b]]).astype(int)
        pairs.sort(axis=1)
        return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]


def promote(hierarchies: PathHierarchy | Iterable[PathHierarchy], shift: int, space: MetricSpace | None = None) -> SemiHierarchy:
    """Relabel every level-``i`` path-net point as a level-``i+shift`` point and
    merge several path hierarchies into one semi-hierarchy."""
    if shift < 0:
        raise ValueError("shift must be >= 0")
    if isinstance(hierarchies, PathHierarchy):
        hierarchies = [hierarchies]
    merged: dict[int, set[int]] = {}
    for ph in hierarchies:
        for i in range(ph.bottom, ph.top + 1):
            merged.setdefault(i + shift, set()).update(ph.points(i).tolist())
    return SemiHierarchy({j: np.asarray(sorted(v), dtype=int) for j, v in sorted(merged.items())}, space)


def coverage_radius(space: MetricSpace, points: np.ndarray, targets: np.ndarray | None = None) -> float:
    """Largest distance from a target to its closest point of ``points``."""
    targets = np.arange(space.n) if targets is None else targets
    if len(points) == 0:
        return math.inf
    return float(space.dist[np.ix_(targets, points)].min(axis=1).max())
