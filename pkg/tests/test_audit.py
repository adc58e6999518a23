import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import lightspan.audit as audit
from conftest import line_space, random_space
from lightspan.audit import (
    DiagnosticFailure,
    ball_weight,
    exact_stretch,
    lightness,
    packing_report,
    path_stretch,
    sparsity,
    weight_diagnostics,
)
from lightspan.graph import SpannerGraph, union
from lightspan.hierarchy import PathChain, build_hierarchy
from lightspan.nrtree import Tree, mst


def complete_graph(space):
    a, b = np.triu_indices(space.n, 1)
    return SpannerGraph.from_pairs(space, np.column_stack([a, b]))


def enumerate_stretch(graph, space):
    """Max over pairs of the shortest simple path found by exhaustive DFS."""
    adj = {k: [] for k in range(space.n)}
    for a, b, w in zip(graph.u.tolist(), graph.v.tolist(), graph.w.tolist()):
        adj[a].append((b, w))
        adj[b].append((a, w))
    worst = 1.0
    for s in range(space.n):
        best = [math.inf] * space.n

        def walk(x, d, seen):
            best[x] = min(best[x], d)
            for y, w in adj[x]:
                if y not in seen:
                    walk(y, d + w, seen | {y})

        walk(s, 0.0, {s})
        for t in range(s + 1, space.n):
            worst = max(worst, best[t] / space.dist[s, t])
    return worst


def random_graph(space, rng, p):
    a, b = np.triu_indices(space.n, 1)
    keep = rng.random(len(a)) < p
    T = mst(space)
    return union(SpannerGraph.from_pairs(space, np.column_stack([a[keep], b[keep]])), SpannerGraph.from_edges(space.n, T.u, T.v, T.w))


@given(st.integers(3, 9), st.integers(0, 10_000), st.floats(0.0, 0.6))
def test_stretch_equals_path_enumeration(n, seed, p):
    sp = random_space(n, seed=seed)
    R = random_graph(sp, np.random.default_rng(seed), p)
    rep = exact_stretch(R, sp)
    assert rep.max_stretch == pytest.approx(enumerate_stretch(R, sp), rel=1e-12)
    a, b = rep.witness
    assert rep.p50 <= rep.p95 <= rep.max_stretch


def test_stretch_examples():
    sp = random_space(30, seed=1)
    assert exact_stretch(complete_graph(sp), sp).max_stretch == 1.0
    line = line_space(25)
    T = mst(line)
    assert exact_stretch(SpannerGraph.from_edges(25, T.u, T.v, T.w), line).max_stretch == 1.0


def test_stretch_witness_reproduces_ratio():
    sp = random_space(40, seed=2)
    T = mst(sp)
    R = SpannerGraph.from_edges(40, T.u, T.v, T.w)
    rep = exact_stretch(R, sp)
    from lightspan.graph import apsp

    a, b = rep.witness
    assert apsp(R, [a])[0, b] / sp.dist[a, b] == pytest.approx(rep.max_stretch, rel=1e-12)


def test_disconnected_spanner_reports_infinite_stretch():
    sp = random_space(10, seed=3)
    R = SpannerGraph.from_pairs(sp, [(0, 1), (2, 3)])
    rep = exact_stretch(R, sp)
    assert math.isinf(rep.max_stretch)
    assert json.loads(rep.to_json())["max_stretch"] == "inf"


def test_sampled_stretch_is_flagged(monkeypatch):
    monkeypatch.setattr(audit, "EXACT_STRETCH_LIMIT", 50)
    monkeypatch.setattr(audit, "SAMPLED_PAIRS", 500)
    sp = random_space(80, seed=4)
    T = mst(sp)
    rep = exact_stretch(SpannerGraph.from_edges(80, T.u, T.v, T.w), sp, seed=9)
    assert rep.sampled and rep.seed == 9 and rep.pairs >= 500
    again = exact_stretch(SpannerGraph.from_edges(80, T.u, T.v, T.w), sp, seed=9)
    assert again.max_stretch == rep.max_stretch


def test_path_stretch():
    line = line_space(6)
    assert path_stretch(PathChain.from_vertices(line, range(6)), line) == 1.0
    assert path_stretch(PathChain.from_vertices(line, [0, 2, 1]), line) == 3.0


def test_lightness_examples():
    sp = random_space(30, seed=5)
    T = mst(sp)
    assert lightness(SpannerGraph.from_edges(30, T.u, T.v, T.w), sp) == pytest.approx(1.0)
    n = 20
    line = line_space(n)
    # sum over pairs of |a - b| is n(n^2 - 1)/6; the MST weighs n - 1
    assert lightness(complete_graph(line), line) == pytest.approx(n * (n + 1) / 6)


@given(st.integers(3, 25), st.integers(0, 10_000), st.floats(0.0, 0.5))
def test_connected_spanner_is_at_least_as_heavy_as_mst(n, seed, p):
    sp = random_space(n, seed=seed)
    assert lightness(random_graph(sp, np.random.default_rng(seed), p), sp) >= 1 - 1e-12


def brute_sparsity(edges, space):
    u, v, w = audit.edge_arrays(edges)
    best = 0.0
    for c in range(space.n):
        for r in np.unique(space.dist[c]):
            if r <= 0:
                continue
            inside = (space.dist[c, u] <= r) & (space.dist[c, v] <= r)
            best = max(best, w[inside].sum() / r)
    return best


def test_single_edge_sparsity_with_point_centers():
    # centers are points, so the smallest ball holding the edge has radius w
    sp = line_space(2)
    cert = sparsity(SpannerGraph.from_pairs(sp, [(0, 1)]), sp)
    assert cert.s == pytest.approx(1.0)
    assert cert.center in (0, 1) and cert.radius == 1.0


def test_sparsity_of_empty_edge_set():
    assert sparsity(SpannerGraph.empty(3), line_space(3)).s == 0.0


@given(st.integers(3, 20), st.integers(0, 10_000), st.floats(0.05, 0.6))
def test_sparsity_matches_brute_force(n, seed, p):
    sp = random_space(n, seed=seed)
    R = random_graph(sp, np.random.default_rng(seed), p)
    cert = sparsity(R, sp)
    assert cert.s == pytest.approx(brute_sparsity(R, sp), rel=1e-12)
    assert ball_weight(R, sp, cert.center, cert.radius) / cert.radius == pytest.approx(cert.s, rel=1e-12)


@given(st.integers(3, 20), st.integers(0, 10_000))
def test_sparsity_is_monotone_under_edge_addition(n, seed):
    sp = random_space(n, seed=seed)
    rng = np.random.default_rng(seed)
    A = random_graph(sp, rng, 0.1)
    B = random_graph(sp, rng, 0.3)
    assert sparsity(union(A, B), sp).s >= sparsity(A, sp).s - 1e-12


def test_line_mst_sparsity_is_constant_in_n():
    vals = [sparsity(mst(line_space(n)), line_space(n)).s for n in (16, 64, 256)]
    assert max(vals) == pytest.approx(min(vals))


def test_chunked_sparsity_equals_unchunked():
    sp = random_space(60, seed=6)
    R = random_graph(sp, np.random.default_rng(1), 0.2)
    assert sparsity(R, sp, chunk_cells=97).s == sparsity(R, sp).s


def test_packing_report():
    rep = packing_report(build_hierarchy(random_space(60, seed=7)))
    assert all(v["packing_ok"] and v["covering_ok"] for v in rep.values())


def test_weight_diagnostics_two_points_and_line():
    sp = line_space(2)
    rep = weight_diagnostics(sp, build_hierarchy(sp, L=-4), samples=10)
    assert rep.ok and rep.max_ratio <= 1.0 + 1e-12
    line = line_space(100)
    assert weight_diagnostics(line, build_hierarchy(line, L=-4), samples=50).ok


def test_weight_diagnostics_random_2d():
    sp = random_space(200, seed=8)
    rep = weight_diagnostics(sp, build_hierarchy(sp, L=-4), samples=100)
    assert rep.ok and len(rep.samples) == 100
    assert json.loads(rep.to_json())["ok"] is True


def test_weight_diagnostics_extended_terms_are_reported():
    sp = random_space(60, seed=9)
    rep = weight_diagnostics(sp, build_hierarchy(sp, L=-4), samples=10, extended=True)
    for s in rep.samples:
        assert s.eq_mid is not None and s.eq_left is not None and s.eq_right is not None


def test_weight_diagnostics_rejects_overweight_tree():
    sp = random_space(40, seed=10)
    T = mst(sp)
    heavy = Tree(T.vertices, T.u, T.v, T.w * 100)
    with pytest.raises(DiagnosticFailure):
        weight_diagnostics(sp, build_hierarchy(sp, L=-4), samples=20, tree=heavy)
    rep = weight_diagnostics(sp, build_hierarchy(sp, L=-4), samples=20, tree=heavy, strict=False)
    assert not rep.ok
