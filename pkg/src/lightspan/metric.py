"""Finite metric spaces with a materialized distance matrix.

Every construction in the package reads distances from ``MetricSpace.dist``.
Coordinates are kept only for I/O; after :func:`normalize` the matrix is the
source of truth and the minimum inter-point distance is exactly 1.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

# Relative tolerance for comparisons against scaled powers of two.
RTOL = 1e-9

_EXHAUSTIVE_TRIANGLE_LIMIT = 200


class MetricError(ValueError):
    """Raised when the input is not a valid finite metric."""


def leq(a: float, b: float) -> bool:
    """``a <= b`` up to the package tolerance."""
    return a <= b + RTOL * max(abs(a), abs(b), 1.0)


def lt(a: float, b: float) -> bool:
    """``a < b`` with the tolerance absorbed in favour of strictness."""
    return a < b - RTOL * max(abs(a), abs(b), 1.0)


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """Point ids ``0..n-1`` with an exact symmetric distance matrix."""

    dist: np.ndarray
    coords: np.ndarray | None = None
    scale_factor: float = 1.0

    def __post_init__(self) -> None:
        self.dist.setflags(write=False)
        if self.coords is not None:
            self.coords.setflags(write=False)

    @classmethod
    def from_coords(cls, coords, *, validate: bool = True) -> MetricSpace:
        pts = np.asarray(coords, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise MetricError("coordinates must be a 2-D array")
        space = cls(dist=cdist(pts, pts), coords=pts.copy())
        if validate:
            _check_distinct(space.dist)
        return space

    @classmethod
    def from_matrix(cls, matrix, *, validate: bool = True) -> MetricSpace:
        mat = np.array(matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise MetricError("distance matrix must be square")
        if validate:
            validate_metric(mat)
        return cls(dist=mat)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def points(self) -> range:
        return range(self.n)

    def _check_id(self, u: int) -> None:
        if not 0 <= u < self.n:
            raise IndexError(f"point id {u} out of range 0..{self.n - 1}")

    def distance(self, u: int, v: int) -> float:
        self._check_id(u)
        self._check_id(v)
        return float(self.dist[u, v])

    def ball(self, u: int, r: float) -> np.ndarray:
        """Closed ball ``B(u, r)`` as a sorted id array."""
        self._check_id(u)
        if r < 0:
            raise ValueError("radius must be non-negative")
        return np.flatnonzero(self.dist[u] <= r)

    def ball_edges(self, u: int, r: float) -> list[tuple[int, int]]:
        """All unordered pairs of the complete graph on ``B(u, r)``."""
        return _pairs(self.ball(u, r))

    def annulus(self, u: int, r1: float, r2: float) -> np.ndarray:
        """Points at distance in ``[r1, r2]`` from ``u``; the hollow is excluded."""
        self._check_id(u)
        if r1 < 0 or r1 > r2:
            raise ValueError(f"annulus needs 0 <= r1 <= r2, got {r1}, {r2}")
        row = self.dist[u]
        return np.flatnonzero((row >= r1) & (row <= r2))

    def annulus_edges(self, u: int, r1: float, r2: float) -> list[tuple[int, int]]:
        return _pairs(self.annulus(u, r1, r2))

    def min_distance(self) -> float:
        if self.n < 2:
            raise MetricError("need at least two points")
        iu = np.triu_indices(self.n, 1)
        return float(self.dist[iu].min())

    def diameter(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    def aspect_ratio(self) -> float:
        if self.n < 2:
            raise MetricError("aspect ratio needs at least two points")
        return self.diameter() / self.min_distance()

    def subspace(self, ids) -> MetricSpace:
        """Restriction to ``ids``; local id ``k`` is global id ``ids[k]``."""
        ids = np.asarray(ids, dtype=int)
        sub = self.dist[np.ix_(ids, ids)].copy()
        coords = None if self.coords is None else self.coords[ids].copy()
        return MetricSpace(dist=sub, coords=coords, scale_factor=self.scale_factor)


def _pairs(members: np.ndarray) -> list[tuple[int, int]]:
    m = [int(x) for x in members]
    return [(m[a], m[b]) for a in range(len(m)) for b in range(a + 1, len(m))]


def _check_distinct(mat: np.ndarray) -> None:
    n = mat.shape[0]
    if n < 2:
        return
    off = np.array(mat, dtype=float)
    np.fill_diagonal(off, np.inf)
    hits = np.argwhere(off <= 0)
    if len(hits):
        u, v = sorted(int(x) for x in hits[0])
        raise MetricError(f"duplicate points: ids {u} and {v} are at distance 0")


def validate_metric(mat: np.ndarray, *, seed: int = 0) -> None:
    """Check symmetry, zero diagonal, positivity and the triangle inequality.

    The triangle inequality is checked over all triples for ``n <= 200`` and on
    ``10 n^2`` random triples otherwise.
    """
    n = mat.shape[0]
    if not np.all(np.isfinite(mat)):
        raise MetricError("distance matrix has non-finite entries")
    if np.any(np.diag(mat) != 0):
        raise MetricError("distance matrix must have a zero diagonal")
    if not np.allclose(mat, mat.T, rtol=RTOL, atol=0):
        bad = np.argwhere(~np.isclose(mat, mat.T, rtol=RTOL, atol=0))[0]
        raise MetricError(f"distance matrix not symmetric at {tuple(int(x) for x in bad)}")
    _check_distinct(mat)
    scale = float(mat.max()) if n else 0.0
    tol = RTOL * max(scale, 1.0)
    if n <= _EXHAUSTIVE_TRIANGLE_LIMIT:
        for k in range(n):
            via = mat[:, k][:, None] + mat[k, :][None, :]
            bad = np.argwhere(mat > via + tol)
            if len(bad):
                u, w = (int(x) for x in bad[0])
                raise MetricError(f"triangle inequality fails for ({u}, {k}, {w})")
    else:
        rng = np.random.default_rng(seed)
        remaining = 10 * n * n
        while remaining > 0:
            t = min(remaining, 1 << 20)
            remaining -= t
            a, b, c = (rng.integers(0, n, t) for _ in range(3))
            bad = np.flatnonzero(mat[a, c] > mat[a, b] + mat[b, c] + tol)
            if len(bad):
                k = bad[0]
                raise MetricError(f"triangle inequality fails for ({a[k]}, {b[k]}, {c[k]})")


def normalize(space: MetricSpace) -> MetricSpace:
    """Scale so the minimum inter-point distance is exactly 1.

    Dividing the matrix by its own minimum entry makes that entry ``1.0``
    exactly in floating point, so the operation is idempotent.
    """
    if space.n < 2:
        return MetricSpace(dist=space.dist.copy(), coords=space.coords, scale_factor=space.scale_factor)
    _check_distinct(np.asarray(space.dist))
    m = space.min_distance()
    if m == 1.0:
        return space
    coords = None if space.coords is None else space.coords / m
    return MetricSpace(dist=space.dist / m, coords=coords, scale_factor=space.scale_factor * m)


def aspect_ratio(space: MetricSpace) -> float:
    return space.aspect_ratio()


def load_points(path: str | Path) -> MetricSpace:
    """Read a CSV of coordinates (header ``x0,x1,...``) or a JSON ``{"matrix": ...}``."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
        if "matrix" in data:
            return MetricSpace.from_matrix(data["matrix"])
        if "points" in data:
            return MetricSpace.from_coords(data["points"])
        raise MetricError(f"{path}: expected a 'matrix' or 'points' key")
    rows: list[list[float]] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MetricError(f"{path}: empty file")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MetricError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise MetricError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise MetricError(f"{path}: no points")
    return MetricSpace.from_coords(rows)


def save_points(coords: np.ndarray, path: str | Path) -> None:
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{k}" for k in range(coords.shape[1])])
        for row in coords:
            writer.writerow([repr(float(x)) for x in row])


def log2_ceil(x: float) -> int:
    """``ceil(log2 x)`` robust to powers of two (``x > 0``)."""
    k = math.ceil(math.log2(x))
    if 2.0 ** (k - 1) >= x:
        k -= 1
    elif 2.0**k < x:
        k += 1
    return k
