import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_space
from lightspan.graph import GreedyState, SpannerGraph, WeightMismatch, apsp, greedy_fill, sort_edges, union


def test_from_edges_drops_loops_and_duplicates():
    g = SpannerGraph.from_edges(4, [0, 1, 2, 3], [1, 0, 2, 1], [1.0, 1.0, 0.0, 2.0], stage=["a", "b", "c", "d"])
    assert g.edge_set() == {(0, 1), (1, 3)}
    assert sorted(g.stage.tolist()) == ["a|b", "d"]


def test_union_identities():
    sp = random_space(20, seed=1)
    R = SpannerGraph.from_pairs(sp, [(0, 1), (2, 5), (3, 4)], stage="x")
    assert union(R, SpannerGraph.empty(20)).edge_set() == R.edge_set()
    assert union(R, R).edge_set() == R.edge_set()
    assert len(union(R, R)) == len(R)


def test_union_rejects_weight_mismatch():
    a = SpannerGraph.from_edges(3, [0], [1], [1.0])
    b = SpannerGraph.from_edges(3, [1], [0], [2.0])
    with pytest.raises(WeightMismatch):
        union(a, b)


@given(st.integers(0, 10_000))
def test_union_distances_no_worse_than_parts(seed):
    rng = np.random.default_rng(seed)
    sp = random_space(15, seed=seed)
    p1 = rng.integers(0, 15, size=(20, 2))
    p2 = rng.integers(0, 15, size=(20, 2))
    A, B = SpannerGraph.from_pairs(sp, p1), SpannerGraph.from_pairs(sp, p2)
    U = union(A, B)
    assert len(U) <= len(A) + len(B)
    assert np.all(apsp(U) <= np.minimum(apsp(A), apsp(B)) + 1e-12)


def test_check_metric_flags_wrong_weights():
    sp = random_space(5, seed=0)
    SpannerGraph.from_pairs(sp, [(0, 1)]).check_metric(sp)
    with pytest.raises(WeightMismatch):
        SpannerGraph.from_edges(5, [0], [1], [123.0]).check_metric(sp)


def test_tsv_round_trip_with_scale(tmp_path):
    sp = random_space(10, seed=2)
    g = SpannerGraph.from_pairs(sp, [(0, 1), (1, 2), (4, 9)], level=[1, 2, 3], stage="s")
    path = tmp_path / "e.tsv"
    g.to_tsv(path, scale=2.5)
    first = path.read_text().splitlines()[0].split("\t")
    assert len(first) == 4 and first[-1] == "s"
    back = SpannerGraph.from_tsv(path, 10, scale=2.5)
    assert back.edge_set() == g.edge_set()
    assert np.allclose(back.w, g.w, rtol=1e-15)


def test_tsv_errors_name_the_line(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("0\t1\t1.0\tx\n0\t1\n")
    with pytest.raises(ValueError, match=":2:"):
        SpannerGraph.from_tsv(path, 3)
    path.write_text("0\t7\t1.0\tx\n")
    with pytest.raises(ValueError, match="out of range"):
        SpannerGraph.from_tsv(path, 3)


@given(st.integers(0, 10_000), st.floats(1.0, 2.0))
def test_greedy_state_modes_agree(seed, factor):
    rng = np.random.default_rng(seed)
    sp = random_space(25, seed=seed)
    a, b = np.triu_indices(25, 1)
    w = sp.dist[a, b]
    order = sort_edges(a, b, w)
    keep = rng.random(len(order)) < 0.3
    a, b, w = a[order][keep], b[order][keep], w[order][keep]
    dense = greedy_fill(GreedyState(25, dense=True), a, b, w, factor)
    sparse = greedy_fill(GreedyState(25, dense=False), a, b, w, factor)
    assert np.array_equal(dense, sparse)


def test_greedy_fill_result_meets_factor():
    sp = random_space(30, seed=5)
    a, b = np.triu_indices(30, 1)
    w = sp.dist[a, b]
    o = sort_edges(a, b, w)
    added = greedy_fill(GreedyState(30), a[o], b[o], w[o], 1.2)
    g = SpannerGraph.from_edges(30, a[o][added], b[o][added], w[o][added])
    D = apsp(g)
    assert np.all(D[a, b] <= 1.2 * w * (1 + 1e-9))


def test_sort_edges_breaks_ties_by_ids():
    order = sort_edges([3, 0, 1], [4, 2, 0], [1.0, 1.0, 1.0])
    assert order.tolist() == [2, 1, 0]
