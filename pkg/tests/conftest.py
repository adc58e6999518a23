import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lightspan.metric import MetricSpace, normalize

settings.register_profile(
    "default",
    deadline=None,
    max_examples=30,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


def random_space(n: int, dim: int = 2, seed: int = 0) -> MetricSpace:
    rng = np.random.default_rng(seed)
    return normalize(MetricSpace.from_coords(rng.random((n, dim))))


def line_space(n: int) -> MetricSpace:
    return MetricSpace.from_coords(np.arange(n, dtype=float))


def cluster_space(clusters: int, per: int, dim: int = 8, sep: float = 40.0, seed: int = 0) -> MetricSpace:
    """Gaussian blobs centered on scaled unit vectors (well separated)."""
    rng = np.random.default_rng(seed)
    centers = np.eye(max(dim, clusters))[:clusters, :dim] * sep
    pts = np.concatenate([c + rng.normal(size=(per, dim)) for c in centers])
    return normalize(MetricSpace.from_coords(pts))


def brute_stretch(graph, space) -> float:
    """Floyd-Warshall on the edge list: an independent shortest-path oracle."""
    n = space.n
    D = np.full((n, n), np.inf)
    np.fill_diagonal(D, 0.0)
    for a, b, w in zip(graph.u.tolist(), graph.v.tolist(), graph.w.tolist()):
        D[a, b] = D[b, a] = min(D[a, b], w)
    for k in range(n):
        D = np.minimum(D, D[:, k : k + 1] + D[k : k + 1, :])
    off = ~np.eye(n, dtype=bool)
    return float((D[off] / space.dist[off]).max()) if n > 1 else 1.0


@pytest.fixture
def rand100():
    return random_space(100, seed=11)


# --- path and tree instances -------------------------------------------------


def u_shape(n: int, gap: float, rng) -> np.ndarray:
    """Two antiparallel rows joined at one end, with small jitter."""
    k = n // 2
    a = np.column_stack([np.arange(k), np.zeros(k)])
    b = np.column_stack([np.arange(k)[::-1], np.full(k, gap)])
    return np.concatenate([a, b]) + rng.normal(scale=0.05, size=(2 * k, 2))


def random_walk(n: int, rng) -> np.ndarray:
    return np.cumsum(rng.normal(size=(n, 2)), axis=0)


def smooth_walk(n: int, rng) -> np.ndarray:
    ang = np.cumsum(rng.normal(scale=0.3, size=n))
    return np.cumsum(np.column_stack([np.cos(ang), np.sin(ang)]), axis=0)


def zigzag(n: int, rng) -> np.ndarray:
    x = np.arange(n, dtype=float)
    return np.column_stack([x, (x % 2) * rng.uniform(0.5, 3)])


PATH_FAMILIES = {
    "u_shape": lambda n, rng: u_shape(n, rng.uniform(2, 8), rng),
    "walk": random_walk,
    "smooth": smooth_walk,
    "zigzag": zigzag,
}


def path_instance(family: str, n: int, seed: int):
    """Normalized space whose points, in index order, form the path."""
    from lightspan.hierarchy import PathChain

    rng = np.random.default_rng(seed)
    space = normalize(MetricSpace.from_coords(PATH_FAMILIES[family](n, rng)))
    return space, PathChain.from_vertices(space, range(space.n))


def random_tree(space, seed: int = 0, near: int = 3):
    """Each point joins one of its ``near`` nearest predecessors at random."""
    from lightspan.nrtree import Tree

    rng = np.random.default_rng(seed)
    D = space.dist
    u, v = [], []
    for x in range(1, space.n):
        prev = np.argsort(D[x, :x], kind="stable")[:near]
        y = int(rng.choice(prev))
        u.append(x)
        v.append(y)
    u, v = np.asarray(u, dtype=int), np.asarray(v, dtype=int)
    return Tree(np.arange(space.n), u, v, D[u, v])


# --- acceptance summary ------------------------------------------------------


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            lines += [value for name, value in getattr(rep, "user_properties", []) if name == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
