import csv
import json
import math

import numpy as np
import pytest

from lightspan.cli import compare_rows, generate, main, parse_overrides, UsageError
from lightspan.metric import load_points


def run(*argv) -> int:
    return main([str(a) for a in argv])


def read_json(path):
    return json.loads(path.read_text())


# --- generate ----------------------------------------------------------------


def test_line_generator(tmp_path):
    out = tmp_path / "line.csv"
    assert run("generate", "line", "--n", 4, "--out", out) == 0
    assert np.array_equal(load_points(out).coords.ravel(), [0.0, 1.0, 2.0, 3.0])


def test_cube_generator_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run("generate", "cube", "--n", 100, "--dim", 2, "--seed", 7, "--out", path) == 0
    assert a.read_bytes() == b.read_bytes()
    assert load_points(a).n == 100


@pytest.mark.parametrize("kind", ["line", "cube", "clusters", "grid"])
def test_generators_make_n_points(kind):
    pts = generate(kind, 37, seed=1, dim=3)
    assert pts.shape[0] == 37
    assert len(np.unique(pts, axis=0)) == 37


def test_generator_rejects_bad_parameters():
    with pytest.raises(UsageError):
        generate("cube", 0)
    with pytest.raises(UsageError):
        generate("torus", 5)


def test_clusters_trigger_decomposition(tmp_path):
    pts, dump = tmp_path / "cl.csv", tmp_path / "dec.json"
    assert run("generate", "clusters", "--n", 400, "--dim", 8, "--out", pts) == 0
    assert run("decompose-dump", "--in", pts, "--out", dump) == 0
    doc = read_json(dump)
    assert doc["schema"] == 1 and len(doc["subsets"]) >= 2
    covered = set().union(*[set(s["members"]) for s in doc["subsets"]])
    assert covered == set(range(400))
    assert doc["params"]["f"] == 32.0


# --- build and verify --------------------------------------------------------


def build(tmp_path, points, *extra):
    edges, stats = tmp_path / "R.tsv", tmp_path / "stats.json"
    code = run("build", "--in", points, "--out", edges, "--stats", stats, *extra)
    return code, edges, stats


def write_points(tmp_path, coords, name="pts.csv"):
    path = tmp_path / name
    lines = ["x0,x1"] + [f"{float(x)!r},{float(y)!r}" for x, y in coords]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_two_points(tmp_path):
    pts = write_points(tmp_path, [(0.0, 0.0), (3.0, 4.0)])
    code, edges, stats = build(tmp_path, pts)
    assert code == 0
    s = read_json(stats)
    assert (s["edges"], s["lightness"], s["max_stretch"]) == (1, 1.0, 1.0)
    # edge weights are written in the input units
    assert edges.read_text().split("\t")[2] == "5.0"


@pytest.mark.parametrize("kind,eps", [("cube", 0.5), ("clusters", 0.25), ("grid", 0.1)])
def test_build_then_verify_passes(tmp_path, kind, eps):
    pts = tmp_path / "pts.csv"
    assert run("generate", kind, "--n", 150, "--seed", 3, "--out", pts) == 0
    code, edges, stats = build(tmp_path, pts, "--eps", eps)
    assert code == 0
    s = read_json(stats)
    assert s["max_stretch"] <= 1 + eps + 1e-9
    assert s["config"]["eps"] == eps and s["config"]["profile"] == "desk"
    assert sum(s["stage_counts"].values()) == s["edges"]
    assert run("verify", "--in", pts, "--edges", edges, "--eps", eps, "--stats", tmp_path / "v.json") == 0
    assert read_json(tmp_path / "v.json")["pass"] is True


def test_line_build_stats(tmp_path):
    pts = tmp_path / "line.csv"
    run("generate", "line", "--n", 1024, "--out", pts)
    code, _, stats = build(tmp_path, pts, "--eps", 0.5)
    s = read_json(stats)
    assert code == 0 and s["max_stretch"] <= 1.5
    assert s["n"] == 1024 and s["stretch_sampled"] is False
    for key in ("weight", "mst_weight", "lightness", "wall_seconds", "stage_counts", "edges"):
        assert key in s
    assert s["mst_weight"] == pytest.approx(1023.0)


def test_build_is_deterministic(tmp_path):
    pts = tmp_path / "pts.csv"
    run("generate", "cube", "--n", 120, "--seed", 2, "--out", pts)
    first = tmp_path / "one"
    second = tmp_path / "two"
    first.mkdir()
    second.mkdir()
    build(first, pts)
    build(second, pts)
    assert (first / "R.tsv").read_bytes() == (second / "R.tsv").read_bytes()


def test_stats_round_trip(tmp_path):
    pts = write_points(tmp_path, [(0, 0), (1, 0), (0, 2), (5, 5)])
    _, _, stats = build(tmp_path, pts, "--set", "f=64", "--set", "c1=30")
    text = stats.read_text()
    doc = json.loads(text)
    assert json.dumps(doc, sort_keys=True, indent=1) + "\n" == text
    assert doc["config"]["overrides"] == {"c1": 30.0, "f": 64.0}


def test_tree_with_detour_fails_verify(tmp_path):
    pts = write_points(tmp_path, [(0.0, 0.0), (1.0, 0.0), (2.0, 0.5)])
    edges = tmp_path / "mst.tsv"
    edges.write_text(f"0\t1\t1.0\tmst\n1\t2\t{math.hypot(1, 0.5)!r}\tmst\n")
    report = tmp_path / "v.json"
    assert run("verify", "--in", pts, "--edges", edges, "--eps", 0.01, "--stats", report) == 1
    rep = read_json(report)
    assert rep["pass"] is False
    assert sorted(rep["witness"]) == [0, 2]
    assert rep["max_stretch"] == pytest.approx((1 + math.hypot(1, 0.5)) / math.hypot(2, 0.5))


@pytest.mark.parametrize("eps", [0.01, 0.5])
def test_complete_graph_always_passes(tmp_path, eps):
    rng = np.random.default_rng(4)
    coords = rng.random((12, 2)) * 10
    pts = write_points(tmp_path, coords)
    rows = [f"{a}\t{b}\t{float(np.linalg.norm(coords[a] - coords[b]))!r}" for a in range(12) for b in range(a + 1, 12)]
    edges = tmp_path / "k12.tsv"
    edges.write_text("\n".join(rows) + "\n")
    assert run("verify", "--in", pts, "--edges", edges, "--eps", eps, "--stats", tmp_path / "v.json") == 0


def test_verify_rejects_understated_weights(tmp_path, capsys):
    pts = write_points(tmp_path, [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])
    edges = tmp_path / "fake.tsv"
    edges.write_text("0\t1\t1.0\n1\t2\t1.0\n0\t2\t1.0\n")
    assert run("verify", "--in", pts, "--edges", edges) == 2
    assert "metric says" in capsys.readouterr().err


def test_malformed_edge_file_names_the_line(tmp_path, capsys):
    pts = write_points(tmp_path, [(0.0, 0.0), (1.0, 0.0)])
    edges = tmp_path / "bad.tsv"
    edges.write_text("0\t1\t1.0\n# comment\n0\tone\t1.0\n")
    assert run("verify", "--in", pts, "--edges", edges) == 2
    assert "bad.tsv:3:" in capsys.readouterr().err


def test_malformed_point_file_names_the_line(tmp_path, capsys):
    pts = tmp_path / "bad.csv"
    pts.write_text("x0,x1\n0,0\n1,oops\n")
    code, _, _ = build(tmp_path, pts)
    assert code == 2
    assert "bad.csv:3:" in capsys.readouterr().err


def test_duplicate_points_are_a_usage_error(tmp_path, capsys):
    pts = write_points(tmp_path, [(0.0, 0.0), (0.0, 0.0)])
    code, _, _ = build(tmp_path, pts)
    assert code == 2 and "error" in capsys.readouterr().err


def test_bad_overrides():
    with pytest.raises(UsageError):
        parse_overrides(["zeta=1"])
    with pytest.raises(UsageError):
        parse_overrides(["c1"])
    with pytest.raises(UsageError):
        parse_overrides(["c1=big"])
    assert parse_overrides(["c1=40", "L=-6"]) == {"c1": 40.0, "L": -6.0}


@pytest.mark.parametrize("eps", ["0", "0.6", "x"])
def test_eps_validated_by_parser(tmp_path, eps):
    with pytest.raises(SystemExit) as exc:
        run("build", "--in", tmp_path / "p.csv", "--out", tmp_path / "R.tsv", "--eps", eps)
    assert exc.value.code == 2


# --- compare -----------------------------------------------------------------


def read_table(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_single_method_single_size(tmp_path):
    out = tmp_path / "t.csv"
    assert run("compare", "--kind", "cube", "--sizes", 60, "--methods", "light", "--out", out) == 0
    rows = read_table(out)
    assert len(rows) == 1
    assert set(rows[0]) == {"kind", "n", "eps", "light_lightness", "light_stretch", "light_edges", "light_time"}
    assert float(rows[0]["light_stretch"]) <= 1.5


def test_identical_seeds_identical_tables(tmp_path):
    tables = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        run("compare", "--kind", "clusters", "--sizes", "50,80", "--seed", 9, "--out", out)
        tables.append(read_table(out))
    # wall-clock columns are the only ones allowed to differ
    strip = lambda rows: [{k: v for k, v in r.items() if not k.endswith("_time")} for r in rows]  # noqa: E731
    assert strip(tables[0]) == strip(tables[1])


def test_unknown_method(tmp_path, capsys):
    assert run("compare", "--sizes", 10, "--methods", "light,fast") == 2
    assert "fast" in capsys.readouterr().err


def test_compare_rows_on_the_line():
    rows = compare_rows("line", [64, 256], ["complete", "greedy", "light"], 0.5)
    for row in rows:
        for method in ("complete", "greedy", "light"):
            assert row[f"{method}_stretch"] <= 1.5 + 1e-9
    assert rows[1]["complete_lightness"] > rows[0]["complete_lightness"]
