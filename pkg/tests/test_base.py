import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import brute_stretch, line_space, random_space
from lightspan.audit import exact_stretch, lightness
from lightspan.base import certify_all_pairs, certify_neighbors, complete_hierarchical_spanner, greedy_hierarchical_spanner
from lightspan.graph import SpannerGraph, apsp
from lightspan.hierarchy import PathChain, build_hierarchy, build_path_hierarchy, promote
from lightspan.metric import MetricSpace, normalize


def test_two_points_single_edge():
    h = build_hierarchy(line_space(2))
    for R in (complete_hierarchical_spanner(h, 24), greedy_hierarchical_spanner(h, 24, 0.5)):
        assert R.edge_set() == {(0, 1)}


def test_complete_random_2d_stretch_within_bound():
    sp = random_space(100, seed=0)
    R = complete_hierarchical_spanner(build_hierarchy(sp), 64)
    assert exact_stretch(R, sp).max_stretch <= 1.5


@given(st.integers(5, 60), st.integers(0, 10_000), st.sampled_from([24.0, 32.0, 64.0]), st.integers(1, 3))
def test_complete_stretch_property(n, seed, c, dim):
    sp = random_space(n, dim=dim, seed=seed)
    R = complete_hierarchical_spanner(build_hierarchy(sp), c)
    assert brute_stretch(R, sp) <= (1 + 32 / c) * (1 + 1e-9)
    R.check_metric(sp)


@given(st.integers(5, 60), st.integers(0, 10_000), st.sampled_from([24.0, 48.0]), st.floats(0.05, 1.0))
def test_greedy_stretch_and_size_property(n, seed, c, b):
    sp = random_space(n, seed=seed)
    h = build_hierarchy(sp)
    G = greedy_hierarchical_spanner(h, c, b)
    C = complete_hierarchical_spanner(h, c)
    assert len(G) <= len(C)
    assert G.edge_set() <= C.edge_set()
    assert brute_stretch(G, sp) <= (1 + 32 / c + 6 * b) * (1 + 1e-9)


def test_greedy_keeps_every_neighbor_pair_within_slack():
    sp = random_space(80, seed=3)
    h = build_hierarchy(sp)
    G = greedy_hierarchical_spanner(h, 24, 0.2)
    D = apsp(G)
    for i in range(h.L, h.H + 1):
        for a, b in h.neighbors(24, i):
            assert D[a, b] <= 1.2 * sp.dist[a, b] * (1 + 1e-9)


def test_greedy_on_collinear_points_uses_consecutive_edges():
    h = build_hierarchy(line_space(40))
    G = greedy_hierarchical_spanner(h, 24, 1.0)
    assert G.edge_set() == {(k, k + 1) for k in range(39)}


def test_parameter_validation():
    h = build_hierarchy(line_space(5))
    with pytest.raises(ValueError):
        complete_hierarchical_spanner(h, 23)
    with pytest.raises(ValueError):
        greedy_hierarchical_spanner(h, 24, 0)
    with pytest.raises(ValueError):
        greedy_hierarchical_spanner(h, 24, 1.5)


def test_complete_line_lightness_grows_logarithmically():
    # on the unit line the complete spanner weighs Theta(n log n)
    # (Theta(log n) lightness): each quadrupling of n adds about the same amount
    vals = []
    for n in (256, 1024, 4096):
        sp = line_space(n)
        vals.append(lightness(complete_hierarchical_spanner(build_hierarchy(sp), 24), sp))
    steps = np.diff(vals)
    assert np.all(steps > 0)
    assert steps.max() / steps.min() < 1.25


def test_level_range_restricts_edges():
    sp = random_space(60, seed=2)
    h = build_hierarchy(sp)
    low = complete_hierarchical_spanner(h, 24, (h.L, 1))
    assert np.all(low.level <= 1)
    assert np.all(low.w < 24 * 2.0)


def test_certify_neighbors_is_noop_on_complete_spanner():
    sp = random_space(70, seed=6)
    h = build_hierarchy(sp)
    R = complete_hierarchical_spanner(h, 32)
    assert len(certify_neighbors(R, h, 32, 0.1)) == 0
    extra = certify_neighbors(SpannerGraph.empty(sp.n), h, 32, 0.1)
    assert brute_stretch(extra, sp) <= (1 + 32 / 32 + 0.6) * (1 + 1e-9)


def test_certify_all_pairs_reaches_exact_factor():
    sp = random_space(50, seed=7)
    h = build_hierarchy(sp)
    base = greedy_hierarchical_spanner(h, 24, 1.0)
    top = certify_all_pairs(base, sp, 1.05)
    from lightspan.graph import union

    assert brute_stretch(union(base, top), sp) <= 1.05 * (1 + 1e-9)


def random_walk(n, seed):
    rng = np.random.default_rng(seed)
    sp = normalize(MetricSpace.from_coords(np.cumsum(rng.normal(size=(n, 2)), axis=0)))
    return sp, PathChain.from_vertices(sp, range(n))


@given(st.integers(3, 40), st.integers(0, 10_000), st.sampled_from([24.0, 40.0]), st.integers(0, 3))
def test_bounds_hold_on_promoted_path_hierarchies(n, seed, c, shift):
    sp, P = random_walk(n, seed)
    semi = promote(build_path_hierarchy(P), shift, sp)
    if shift == 0:
        # covering only holds from the path bottom up, which is all of P
        R = complete_hierarchical_spanner(semi, c)
        assert brute_stretch(R, sp) <= (1 + 32 / c) * (1 + 1e-9)
        G = greedy_hierarchical_spanner(semi, c, 0.1)
        assert brute_stretch(G, sp) <= (1 + 32 / c + 0.6) * (1 + 1e-9)
    else:
        R = complete_hierarchical_spanner(semi, c)
        assert R.edge_set() <= {(a, b) for a in range(n) for b in range(a + 1, n)}
