"""Spin off dense neighborhoods, decompose into sparse pieces and assemble
the light spanner."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .audit import ball_weight, lightness, sparsity
from .base import certify_all_pairs, certify_neighbors, complete_hierarchical_spanner
from .graph import DENSE_LIMIT, SpannerGraph, union
from .hierarchy import NetHierarchy, all_neighbor_pairs, build_hierarchy
from .metric import RTOL, MetricSpace, log2_ceil
from .nrtree import NRTree, bottom_for, mst, nr_mst
from .sparse import PROFILES, check_eps, sparse_tree_spanner

DENSE_NR_LIMIT = 2500


class SpinoffError(RuntimeError):
    """No admissible annulus, or the split would not shrink the residual."""


# --- parameters --------------------------------------------------------------


@dataclass(frozen=True)
class DecomposeParams:
    """``f`` heaviness threshold, ``c`` neighbor radius, ``gap = i - j`` and the
    annulus scale ``kappa`` (outer half-width ``3 kappa 2^j``, inner ``kappa 2^j``)."""

    f: float
    c: float
    gap: int
    kappa: float
    a: float = 3.0

    @property
    def outer(self) -> float:
        return 3.0 * self.kappa

    @property
    def inner(self) -> float:
        return self.kappa


def estimate_ddim(space: MetricSpace, *, centers: int = 32, seed: int = 0) -> float:
    """``log2`` of the largest greedy half-radius cover of a sampled ball."""
    n = space.n
    if n < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    picks = np.sort(rng.choice(n, size=min(n, centers), replace=False))
    D = space.dist
    best = 1
    top = log2_ceil(space.diameter())
    for v in picks:
        for k in range(1, top + 1):
            ball = np.flatnonzero(D[v] <= 2.0**k)
            if len(ball) <= best:
                continue
            sub = D[np.ix_(ball, ball)]
            covered = np.zeros(len(ball), dtype=bool)
            count = 0
            for x in range(len(ball)):
                if not covered[x]:
                    count += 1
                    covered |= sub[x] <= 2.0 ** (k - 1)
            best = max(best, count)
    return math.log2(best)


def decompose_params(eps: float, profile: str = "desk", *, ddim: float | None = None, overrides: dict | None = None) -> DecomposeParams:
    overrides = dict(overrides or {})
    a = float(overrides.pop("a", 3.0))
    if profile == "desk":
        p = {"f": 32.0, "c": 4.0, "gap": 0, "kappa": 1.0 / 24.0}
    elif profile == "faithful":
        dd = max(ddim if ddim is not None else 2.0, 1.0)
        p = {
            "f": (dd / eps) ** (2 * dd),
            "c": 64.0 / eps,
            "gap": max(math.ceil(a * math.log2(max(dd, 2.0))), 8),
            "kappa": 24.0,
        }
    else:
        raise ValueError(f"unknown profile {profile!r}; expected one of {PROFILES}")
    if "c_dec" in overrides:
        p["c"] = float(overrides["c_dec"])
    for key in ("f", "kappa"):
        if key in overrides:
            p[key] = float(overrides[key])
    if "gap" in overrides:
        p["gap"] = int(overrides["gap"])
    return DecomposeParams(p["f"], p["c"], p["gap"], p["kappa"], a)


# --- neighborhoods -----------------------------------------------------------


def neighborhood(space: MetricSpace, h: NetHierarchy, G: np.ndarray, u: int, i: int) -> np.ndarray:
    """``B(u, 2^i)`` within ``G`` plus ancestors up to level ``i``, kept inside ``G``."""
    row = space.dist[u, G]
    ball = G[row <= 2.0**i]
    members = [ball]
    for k in range(1, i + 1):
        members.append(h.ancestors(k)[ball])
    out = np.unique(np.concatenate(members))
    return out[np.isin(out, G, assume_unique=True)]


def residual_nr_mst(space: MetricSpace, h: NetHierarchy, G: np.ndarray, c: float = 64.0) -> NRTree:
    """NR-MST of ``G``; large sets use only net-respecting hierarchical neighbor edges."""
    if len(G) <= DENSE_NR_LIMIT:
        return nr_mst(space, h, subset=G)
    return nr_mst(space, h, candidate_edges=all_neighbor_pairs(h, max(c, 24.0)), subset=G)


class _Weights:
    """Memoized NR-MST weights of neighborhoods keyed by their member set."""

    def __init__(self, space: MetricSpace, h: NetHierarchy):
        self.space, self.h = space, h
        self.cache: dict[bytes, float] = {}

    def __call__(self, F: np.ndarray) -> float:
        key = F.tobytes()
        if key not in self.cache:
            self.cache[key] = nr_mst(self.space, self.h, subset=F).weight if len(F) > 1 else 0.0
        return self.cache[key]


def find_dense_neighborhood(
    space: MetricSpace,
    h: NetHierarchy,
    G: np.ndarray,
    f: float,
    *,
    lowest: int = 0,
    weights: _Weights | None = None,
) -> tuple[int, int] | None:
    """Lowest level ``i >= lowest`` (then smallest id ``u``) with ``w(NR-MST(F(u, i))) > f 2^i``."""
    if f <= 0:
        raise ValueError("f must be positive")
    G = np.asarray(G, dtype=int)
    if len(G) < 2:
        return None
    weights = weights or _Weights(space, h)
    for i in range(max(lowest, h.L), h.H + 1):
        level_pts = G[h.rank[G] >= i] if i > 0 else G
        for u in level_pts.tolist():
            F = neighborhood(space, h, G, u, i)
            if len(F) > 1 and weights(F) > f * 2.0**i:
                return u, i
    return None


# --- spin-off ----------------------------------------------------------------


@dataclass(eq=False)
class SpinoffResult:
    center: int
    level: int
    j: int
    radius: float
    residual: np.ndarray
    spun: np.ndarray
    heavy_weight: float
    residual_neighborhood_weight: float
    nr_before: float
    nr_after: float
    annulus_ratio: float

    def record(self) -> dict:
        return {
            "u": self.center,
            "i": self.level,
            "j": self.j,
            "r": self.radius,
            "spun_off": int(len(self.spun)),
            "residual": int(len(self.residual)),
            "heavy_weight": self.heavy_weight,
            "residual_neighborhood_weight": self.residual_neighborhood_weight,
            "nr_drop": self.nr_before - self.nr_after,
            "annulus_ratio": self.annulus_ratio,
        }


def spinoff(
    space: MetricSpace,
    h: NetHierarchy,
    G: np.ndarray,
    u: int,
    i: int,
    params: DecomposeParams,
    *,
    tree: NRTree | None = None,
) -> SpinoffResult:
    """Split ``G`` around a heavy neighborhood ``F(u, i)``.

    The residual keeps everything outside ``B(u, 13 2^i)``, every level-``j``
    point inside it, and everything outside ``B(u, r - inner 2^j)``, where the
    radius ``r`` is the first candidate whose NR-MST annulus weight is at most
    a quarter of the weight inside its hollow. The spun-off set is
    ``B(u, (13 + c) 2^i)`` with ancestors up to level ``i``.
    """
    G = np.asarray(G, dtype=int)
    D = space.dist
    tree = residual_nr_mst(space, h, G) if tree is None else tree
    j = i - params.gap
    unit_i, unit_j = 2.0**i, 2.0**j
    outer, inner = params.outer * unit_j, params.inner * unit_j
    lo, hi = 12 * unit_i + outer, 13 * unit_i - outer
    chosen, ratio, tried = None, math.inf, []
    r = lo
    while r <= hi * (1 + RTOL):
        ann = _annulus_weight(tree, space, u, r - outer, r + outer)
        hollow = ball_weight(tree, space, u, r - outer)
        tried.append((r, ann, hollow))
        if ann <= hollow / 4 + RTOL * max(hollow, 1.0):
            chosen, ratio = r, (ann / hollow if hollow else 0.0)
            break
        r += 2 * outer
    if chosen is None:
        raise SpinoffError(f"no annulus around {u} at level {i} passes the quarter-weight test; tried (r, annulus, hollow) = {tried}")
    du = D[u, G]
    inside13 = du <= 13 * unit_i
    keep = ~inside13 | (h.rank[G] >= max(j, h.L) if j > 0 else True) | (du > chosen - inner)
    residual = G[keep]
    if len(residual) == len(G):
        raise SpinoffError(f"spin-off at ({u}, {i}) leaves the residual unchanged (j = {j} keeps every point)")
    ball = G[du <= (13 + params.c) * unit_i]
    members = [ball] + [h.ancestors(k)[ball] for k in range(1, i + 1)]
    spun = np.unique(np.concatenate(members))
    spun = spun[np.isin(spun, G)]
    F = neighborhood(space, h, G, u, i)
    heavy = nr_mst(space, h, subset=F).weight
    Fr = F[np.isin(F, residual)]
    after_tree = residual_nr_mst(space, h, residual)
    return SpinoffResult(
        center=u,
        level=i,
        j=j,
        radius=chosen,
        residual=residual,
        spun=spun,
        heavy_weight=heavy,
        residual_neighborhood_weight=nr_mst(space, h, subset=Fr).weight if len(Fr) > 1 else 0.0,
        nr_before=tree.weight,
        nr_after=after_tree.weight,
        annulus_ratio=ratio,
    )


def _annulus_weight(tree, space: MetricSpace, u: int, r1: float, r2: float) -> float:
    row = space.dist[u]
    inside = lambda x: (row[x] >= r1) & (row[x] <= r2)  # noqa: E731
    m = inside(tree.u) & inside(tree.v)
    return float(tree.w[m].sum())


# --- decomposition -----------------------------------------------------------


@dataclass(eq=False)
class Decomposition:
    subsets: list[np.ndarray]
    spinoffs: list[SpinoffResult] = field(default_factory=list)
    ground: np.ndarray | None = None
    params: DecomposeParams | None = None

    def occurrences(self, n: int) -> np.ndarray:
        counts = np.zeros(n, dtype=int)
        for s in self.subsets:
            counts[s] += 1
        return counts

    def covers(self, G: np.ndarray) -> bool:
        got = np.unique(np.concatenate(self.subsets)) if self.subsets else np.empty(0, dtype=int)
        return np.array_equal(got, np.unique(G))

    def certificates(self, space: MetricSpace) -> list[dict]:
        """Per subset: MST weight (normalized units) and its exact sparsity certificate."""
        out = []
        for k, s in enumerate(self.subsets):
            t = mst(space, s)
            cert = sparsity(t, space, centers=s)
            out.append(
                {
                    "members": s.tolist(),
                    "mst_weight": t.weight,
                    "sparsity": cert.s,
                    "sparsity_witness": [cert.center, cert.radius],
                    "spinoff": self.spinoffs[k].record() if k < len(self.spinoffs) else None,
                }
            )
        return out

    def to_json(self, space: MetricSpace) -> str:
        items = self.certificates(space)
        for item in items:
            item["mst_weight"] *= space.scale_factor
            if item["sparsity_witness"][1] is not None:
                item["sparsity_witness"][1] *= space.scale_factor
        return json.dumps({"schema": 1, "subsets": items}, indent=1)


def decompose(
    space: MetricSpace,
    h: NetHierarchy,
    params: DecomposeParams,
    *,
    G=None,
    max_spinoffs: int | None = None,
) -> Decomposition:
    """Spin off the lowest heavy neighborhood until none is left.

    Only levels ``i >= gap + 1`` are scanned: below that ``j <= 0`` and the
    level-``j`` net is all of ``G``, so no split could shrink the residual.
    The final residual is the last subset. The hierarchy must reach low
    enough that the shortest distance fits a level window.
    """
    if space.n > 1 and h.L > bottom_for(space.min_distance()):
        # shorter edges would fit no window and the NR-MST weights would be meaningless
        raise ValueError(f"hierarchy bottom {h.L} is too high for minimum distance {space.min_distance():g}; need L <= {bottom_for(space.min_distance())}")
    G = np.arange(space.n) if G is None else np.unique(np.asarray(G, dtype=int))
    ground = G.copy()
    weights = _Weights(space, h)
    subsets: list[np.ndarray] = []
    spins: list[SpinoffResult] = []
    limit = len(G) if max_spinoffs is None else max_spinoffs
    lowest = max(params.gap + 1, 0)
    while len(spins) < limit:
        hit = find_dense_neighborhood(space, h, G, params.f, lowest=lowest, weights=weights)
        if hit is None:
            break
        res = spinoff(space, h, G, hit[0], hit[1], params)
        spins.append(res)
        subsets.append(res.spun)
        G = res.residual
    subsets.append(G)
    return Decomposition(subsets, spins, ground, params)


def check_neighbor_proximity(h: NetHierarchy, dec: Decomposition, c: float, lo: int | None = None) -> list[tuple[int, int]]:
    """c-neighbor pairs of ground points that share no subset (empty when fine)."""
    n = h.space.n
    pairs = all_neighbor_pairs(h, c, lo=lo)
    ground = np.zeros(n, dtype=bool)
    ground[dec.ground] = True
    pairs = pairs[ground[pairs[:, 0]] & ground[pairs[:, 1]]]
    together = np.zeros(len(pairs), dtype=bool)
    for s in dec.subsets:
        m = np.zeros(n, dtype=bool)
        m[s] = True
        together |= m[pairs[:, 0]] & m[pairs[:, 1]]
    return [tuple(p) for p in pairs[~together].tolist()]


# --- assembly ----------------------------------------------------------------


def build_light_spanner(
    space: MetricSpace,
    eps: float,
    *,
    profile: str = "desk",
    overrides: dict | None = None,
    certify: bool = True,
) -> tuple[SpannerGraph, dict]:
    """Short-edge layer, decomposition, per-subset sparse-tree spanners and a
    final greedy certification of the ``(64/eps)``-neighbor pairs."""
    check_eps(eps)
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; expected one of {PROFILES}")
    n = space.n
    t0 = time.perf_counter()
    info: dict = {"n": n, "eps": eps, "profile": profile}
    if n <= 1:
        return SpannerGraph.empty(n), info | {"edges": 0, "weight": 0.0}
    if abs(space.min_distance() - 1.0) > RTOL:
        raise ValueError("build_light_spanner expects a normalized space (minimum distance 1)")
    overrides = dict(overrides or {})
    c = float(overrides.get("c", 64.0 / eps))
    b = float(overrides.get("b", eps / 12))
    H = build_hierarchy(space).H
    cutoff = H - log2_ceil(float(n) * n)
    h = build_hierarchy(space, L=int(overrides.get("L", min(-4, cutoff))))
    layers = []
    if cutoff >= h.L:
        layers.append(complete_hierarchical_spanner(h, c, (h.L, cutoff), stage="short"))
    G = h.members(cutoff + 1)
    ddim = estimate_ddim(space) if profile == "faithful" else None
    params = decompose_params(eps, profile, ddim=ddim, overrides=overrides)
    dec = decompose(space, h, params, G=G)
    # Certification enforces the final stretch, so desk runs the subsets at eps.
    # Desk certifies every pair exactly at 1 + eps when that is affordable, so
    # the subsets can run at eps with a looser bipartite slack.
    exact_cert = profile == "desk" and n <= DENSE_LIMIT
    sub_eps = float(overrides.get("sub_eps", eps if exact_cert else eps / 12))
    sub_overrides = ({"b2": eps / 2} if exact_cert else {}) | overrides
    subset_stats = []
    for members in dec.subsets:
        T = mst(space, members)
        R_i, st = sparse_tree_spanner(space, T, sub_eps, profile=profile, overrides=sub_overrides, certify=False)
        R_i.stage[:] = [f"tree:{s}" for s in R_i.stage]
        layers.append(R_i)
        subset_stats.append(st)
    R = union(*layers) if layers else SpannerGraph.empty(n)
    repairs = 0
    if certify:
        extra = certify_all_pairs(R, space, 1 + eps) if exact_cert else certify_neighbors(R, h, c, b)
        repairs = len(extra)
        R = union(R, extra)
    mst_w = mst(space).weight
    nr_w = residual_nr_mst(space, h, G).weight
    occ = dec.occurrences(n)[G]
    log_aspect = math.log2(max(space.aspect_ratio(), 2.0))
    info |= {
        "c": c,
        "b": b,
        "L": h.L,
        "H": h.H,
        "cutoff": cutoff,
        "decompose": {"f": params.f, "c": params.c, "gap": params.gap, "kappa": params.kappa, "a": params.a, "ddim_est": ddim},
        "sub_eps": sub_eps,
        "subsets": len(dec.subsets),
        "spinoffs": [s.record() for s in dec.spinoffs],
        "sum_subset_mst_over_nr_mst": sum(t["tree_weight"] for t in subset_stats) / nr_w if nr_w else 0.0,
        "max_occurrence": int(occ.max()) if len(occ) else 0,
        "occurrence_constant": float(occ.max() / log_aspect) if len(occ) else 0.0,
        "short_layer_edges": int(len(layers[0])) if cutoff >= h.L else 0,
        "short_layer_weight_over_mst": (layers[0].weight / mst_w) if cutoff >= h.L else 0.0,
        "certification": ("all pairs at 1+eps" if exact_cert else "c-neighbor pairs at 1+b") if certify else "off",
        "repairs": repairs,
        "edges": len(R),
        "weight": R.weight,
        "mst_weight": mst_w,
        "lightness": lightness(R, space, mst_weight=mst_w),
        "stage_counts": R.stage_counts(),
        "seconds": time.perf_counter() - t0,
    }
    return R, info
