"""Verification oracles: stretch, lightness, sparsity and weight diagnostics."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .graph import SpannerGraph, apsp
from .hierarchy import NetHierarchy, PathChain
from .metric import RTOL, MetricSpace
from .nrtree import Tree, mst, nr_mst

EXACT_STRETCH_LIMIT = 2000
SAMPLED_PAIRS = 100_000


class DiagnosticFailure(AssertionError):
    """A bound the construction guarantees was violated."""


@dataclass
class StretchReport:
    max_stretch: float
    witness: tuple[int, int] | None
    p50: float
    p95: float
    pairs: int
    sampled: bool = False
    seed: int | None = None

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), sort_keys=True)


@dataclass
class SparsityCertificate:
    s: float
    center: int | None
    radius: float | None

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")
    return obj


def edge_arrays(edges) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(u, v, w)`` from a SpannerGraph, Tree, PathChain or a triple of arrays."""
    if isinstance(edges, (SpannerGraph, Tree)):
        return np.asarray(edges.u, dtype=int), np.asarray(edges.v, dtype=int), np.asarray(edges.w, dtype=float)
    if isinstance(edges, PathChain):
        return edges.vertices[:-1].copy(), edges.vertices[1:].copy(), edges.edge_lengths
    u, v, w = edges
    return np.asarray(u, dtype=int), np.asarray(v, dtype=int), np.asarray(w, dtype=float)


# --- stretch -----------------------------------------------------------------


def exact_stretch(R: SpannerGraph, space: MetricSpace, *, seed: int = 0) -> StretchReport:
    """Max over pairs of ``d_R / d_G`` by shortest paths.

    Exact for ``n <= 2000``; above that, Dijkstra runs from enough random
    sources (fixed seed) to cover at least 100000 pairs.
    """
    n = space.n
    if n < 2:
        return StretchReport(1.0, None, 1.0, 1.0, 0)
    ncomp, labels = connected_components(R.csr(), directed=False)
    if ncomp > 1:
        a = 0
        b = int(np.flatnonzero(labels != labels[0])[0])
        return StretchReport(math.inf, (a, b), math.inf, math.inf, n * (n - 1) // 2)
    sampled = n > EXACT_STRETCH_LIMIT
    if sampled:
        rng = np.random.default_rng(seed)
        k = min(n, math.ceil(SAMPLED_PAIRS / (n - 1)))
        sources = np.sort(rng.choice(n, size=k, replace=False))
    else:
        sources = np.arange(n)
    DR = apsp(R, sources)
    DG = space.dist[sources]
    mask = DG > 0
    if not sampled:
        mask &= np.triu(np.ones((n, n), dtype=bool), 1)
    ratio = np.where(mask, DR / np.where(mask, DG, 1.0), -np.inf)
    flat = int(np.argmax(ratio))
    r, col = divmod(flat, n)
    vals = ratio[mask]
    return StretchReport(
        max_stretch=float(ratio[r, col]),
        witness=(int(min(sources[r], col)), int(max(sources[r], col))),
        p50=float(np.percentile(vals, 50)),
        p95=float(np.percentile(vals, 95)),
        pairs=int(mask.sum()),
        sampled=sampled,
        seed=seed if sampled else None,
    )


def path_stretch(P: PathChain, space: MetricSpace) -> float:
    """Max over vertex pairs of path distance over metric distance."""
    k = len(P)
    if k < 2:
        return 1.0
    verts = P.vertices
    DP = np.abs(P.cum[:, None] - P.cum[None, :])
    DG = space.dist[np.ix_(verts, verts)]
    iu = np.triu_indices(k, 1)
    dg = DG[iu]
    if np.any(dg <= 0):
        return math.inf
    return float(max(1.0, (DP[iu] / dg).max()))


# --- lightness and sparsity --------------------------------------------------


def lightness(R, space: MetricSpace, *, mst_weight: float | None = None) -> float:
    """``w(R) / w(MST(space))``."""
    base = mst(space).weight if mst_weight is None else mst_weight
    w = float(edge_arrays(R)[2].sum())
    if base == 0:
        return 0.0 if w == 0 else math.inf
    return w / base


def sparsity(edges, space: MetricSpace, centers=None, *, chunk_cells: int = 1 << 22) -> SparsityCertificate:
    """Exact ``max_{v, r} w(B*(v, r) ∩ E) / r`` over centers and critical radii.

    An edge lies in the ball around ``v`` once ``r`` reaches the farther of
    its endpoints, so ball weight is a step function of ``r`` and the ratio is
    maximized at the radius where an edge enters. Centers default to every
    point of ``space``.
    """
    u, v, w = edge_arrays(edges)
    if len(u) == 0:
        return SparsityCertificate(0.0, None, None)
    centers = np.arange(space.n) if centers is None else np.asarray(centers, dtype=int)
    best, where = -1.0, (None, None)
    step = max(1, chunk_cells // len(u))
    D = space.dist
    for s in range(0, len(centers), step):
        block = centers[s : s + step]
        radius = np.maximum(D[np.ix_(block, u)], D[np.ix_(block, v)])
        order = np.argsort(radius, axis=1, kind="stable")
        rs = np.take_along_axis(radius, order, axis=1)
        cs = np.cumsum(w[order], axis=1)
        last = np.ones_like(rs, dtype=bool)
        last[:, :-1] = rs[:, 1:] != rs[:, :-1]
        ratio = np.where(last, cs / rs, -np.inf)
        flat = int(np.argmax(ratio))
        row, col = divmod(flat, ratio.shape[1])
        if ratio[row, col] > best:
            best = float(ratio[row, col])
            where = (int(block[row]), float(rs[row, col]))
    return SparsityCertificate(best, where[0], where[1])


def ball_weight(edges, space: MetricSpace, center: int, r: float) -> float:
    """``w(B*(center, r) ∩ E)``."""
    u, v, w = edge_arrays(edges)
    row = space.dist[center]
    inside = (row[u] <= r) & (row[v] <= r)
    return float(w[inside].sum())


# --- packing -----------------------------------------------------------------


def packing_report(h: NetHierarchy) -> dict:
    """Per level: minimum separation of net points vs ``2^i`` and the largest
    distance from a level-``(i-1)`` point to the level-``i`` net."""
    D = h.space.dist
    out = {}
    for i in range(max(h.L, 0), h.H + 1):
        mem = h.members(i)
        if len(mem) > 1:
            sub = D[np.ix_(mem, mem)].copy()
            np.fill_diagonal(sub, np.inf)
            sep = float(sub.min())
        else:
            sep = math.inf
        # covering is a property of level i-1 against level i
        below = h.members(i - 1)
        cover = float(D[np.ix_(below, mem)].min(axis=1).max())
        out[i] = {
            "points": int(len(mem)),
            "min_separation": sep,
            "covering_radius": cover,
            "packing_ok": sep >= 2.0**i * (1 - RTOL),
            "covering_ok": cover < 2.0**i or i <= 0,
        }
    return out


# --- NR-MST weight diagnostics ---------------------------------------------


@dataclass
class WeightSample:
    center: int
    radius: float
    nr_in_ball: float
    local_mst: float
    ratio: float
    lower_ratio: float | None = None
    eq_left: float | None = None
    eq_mid: float | None = None
    eq_right: float | None = None


@dataclass
class WeightDiagnostics:
    samples: list[WeightSample] = field(default_factory=list)
    max_ratio: float = 0.0
    bound: float = 14.0

    @property
    def ok(self) -> bool:
        return self.max_ratio <= self.bound * (1 + RTOL)

    def to_json(self) -> str:
        return json.dumps(_jsonable({"max_ratio": self.max_ratio, "bound": self.bound, "ok": self.ok, "samples": [asdict(s) for s in self.samples]}), sort_keys=True)


def weight_diagnostics(
    space: MetricSpace,
    h: NetHierarchy,
    *,
    samples: int = 100,
    seed: int = 0,
    tree: Tree | None = None,
    strict: bool = True,
    extended: bool = False,
) -> WeightDiagnostics:
    """Compare the NR-MST inside sampled balls against the local MST.

    Asserts ``w(NR-MST ∩ B*(u, r)) <= 14 w(MST(B(u, r)))``. With
    ``extended=True`` each sample also records the reverse ratio
    ``w(MST(B(u,r))) / w(NR-MST ∩ B*(u, 4r))`` and the three terms of the
    chained bound for ``S' = B(u, r)`` plus ancestors, ``r = 2^i``; those carry
    unspecified additive terms and are reported only.
    """
    tree = nr_mst(space, h) if tree is None else tree
    rng = np.random.default_rng(seed)
    diam = space.diameter()
    report = WeightDiagnostics()
    if space.n < 2:
        return report
    for _ in range(samples):
        u = int(rng.integers(space.n))
        i = int(rng.integers(0, max(h.H, 0) + 1))
        r = 2.0**i if extended else float(np.exp(rng.uniform(0.0, math.log(max(diam, 1.0 + 1e-9)))))
        ball = space.ball(u, r)
        nr_in = ball_weight(tree, space, u, r)
        local = mst(space, ball).weight
        ratio = 0.0 if nr_in == 0 else (math.inf if local == 0 else nr_in / local)
        sample = WeightSample(u, r, nr_in, local, ratio)
        if extended:
            wide = ball_weight(tree, space, u, 4 * r)
            sample.lower_ratio = None if wide == 0 else local / wide
            members = set(ball.tolist())
            for p in ball.tolist():
                members.update(h.ancestor(p, k) for k in range(1, max(i, 0) + 1))
            sub = np.asarray(sorted(members))
            sub_nr = nr_mst(space, h, subset=sub)
            sample.eq_left = ball_weight(sub_nr, space, u, r) / 7.0
            sample.eq_mid = mst(space, sub).weight
            sample.eq_right = 4.0 * ball_weight(tree, space, u, 12 * r)
        report.samples.append(sample)
        report.max_ratio = max(report.max_ratio, ratio)
        if strict and not ratio <= 14.0 * (1 + RTOL):
            raise DiagnosticFailure(f"NR-MST weight in B({u}, {r:g}) is {nr_in:g} > 14 x local MST {local:g}")
    return report


def stretch_report_dict(rep: StretchReport) -> dict:
    return _jsonable(asdict(rep))


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=1)
