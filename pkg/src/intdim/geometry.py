"""Finite point-cloud approximations of fractal sets.

Clouds are immutable arrays of points in R^n plus provenance metadata and two
sampling-scale statistics: the fill distance (largest nearest-neighbour gap)
and the separation (smallest nearest-neighbour gap).  Everything downstream
treats a cloud as a stand-in for the underlying set, valid only at scales
above what the sample resolves.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import BudgetError

DEFAULT_POINT_BUDGET = 1_000_000

# Points closer than this are treated as duplicates of one another.
DEDUP_TOLERANCE = 1e-12


def _as_point_array(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("points must be a non-empty (N, n) array")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must be finite")
    return arr


def _dedup(arr: np.ndarray, warn: bool = False) -> np.ndarray:
    if arr.shape[0] < 2:
        return arr
    pairs = cKDTree(arr).query_pairs(r=DEDUP_TOLERANCE, output_type="ndarray")
    if pairs.size == 0:
        return arr
    drop = np.zeros(arr.shape[0], dtype=bool)
    drop[pairs.max(axis=1)] = True
    if warn:
        warnings.warn(f"dropping {int(drop.sum())} duplicate point(s)", stacklevel=3)
    return arr[~drop]


class PointCloud:
    """Immutable finite sample of a bounded subset of R^n.

    Duplicate points (within ``DEDUP_TOLERANCE``) are removed on construction,
    ``resolution`` caches the fill distance and ``separation`` the minimum
    nearest-neighbour gap.  The coordinate array is write-protected.
    """

    def __init__(self, points, descriptor: dict | None = None, *, _warn_duplicates: bool = False):
        arr = _dedup(_as_point_array(points), warn=_warn_duplicates)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self._points = arr
        self.descriptor = dict(descriptor or {})
        if len(arr) >= 2:
            nn = cKDTree(arr).query(arr, k=2)[0][:, 1]
            self.resolution = float(nn.max())
            self.separation = float(nn.min())
        else:
            self.resolution = 0.0
            self.separation = 0.0
        self._dists: np.ndarray | None = None

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def ambient_dim(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self._points.shape[0]

    def __repr__(self) -> str:
        name = self.descriptor.get("generator", "points")
        return f"PointCloud({name}, n={self.ambient_dim}, N={len(self)})"

    def pairwise_distances(self) -> np.ndarray:
        """Dense N x N Euclidean distance matrix, cached after first use."""
        if self._dists is None:
            from scipy.spatial.distance import squareform, pdist

            if len(self) == 1:
                self._dists = np.zeros((1, 1))
            else:
                self._dists = squareform(pdist(self._points))
            self._dists.setflags(write=False)
        return self._dists

    def drop_distance_cache(self) -> None:
        self._dists = None

    def diameter(self) -> float:
        if len(self) == 1:
            return 0.0
        # max pairwise distance via the bounding box heuristic is unsafe;
        # use the cached matrix when present, else a direct hull-free scan.
        if self._dists is not None:
            return float(self._dists.max())
        pts = self._points
        best = 0.0
        for i in range(len(pts)):
            d2 = np.sum((pts[i + 1 :] - pts[i]) ** 2, axis=1)
            if d2.size:
                best = max(best, float(d2.max()))
        return float(np.sqrt(best))


def fill_distance(cloud: PointCloud) -> float:
    """Largest distance from any point to its nearest distinct neighbour.

    Zero for a single-point cloud.  This is the coarsest gap in the sample:
    structure above this scale is fully resolved.
    """
    return cloud.resolution


def separation(cloud: PointCloud) -> float:
    """Smallest nearest-neighbour gap; below it the sample saturates."""
    return cloud.separation


def generate_sequence_set(p: float, count: int) -> PointCloud:
    """The polynomial sequence set {0} u {k^-p : 1 <= k <= count} in R^1."""
    if p <= 0:
        raise ValueError("p must be positive")
    if count < 1:
        raise ValueError("count must be at least 1")
    if count + 1 > DEFAULT_POINT_BUDGET:
        raise BudgetError(f"count {count} exceeds point budget {DEFAULT_POINT_BUDGET}")
    k = np.arange(1, count + 1, dtype=float)
    pts = np.concatenate(([0.0], k ** (-p)))
    return PointCloud(pts, {"generator": "sequence_set", "p": p, "count": count})


def product(a: PointCloud, b: PointCloud, point_budget: int = DEFAULT_POINT_BUDGET) -> PointCloud:
    """Cartesian product cloud in R^(n_a + n_b)."""
    total = len(a) * len(b)
    if total > point_budget:
        raise BudgetError(f"product size {total} exceeds budget {point_budget}")
    left = np.repeat(a.points, len(b), axis=0)
    right = np.tile(b.points, (len(a), 1))
    return PointCloud(
        np.hstack([left, right]),
        {"generator": "product", "left": a.descriptor, "right": b.descriptor},
    )


@dataclass(frozen=True)
class SimilarityMap:
    """x -> ratio * R x + translation with contraction ratio in (0, 1)."""

    ratio: float
    translation: tuple[float, ...]
    rotation: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("ratio must lie strictly in (0, 1)")

    def apply(self, pts: np.ndarray) -> np.ndarray:
        out = pts
        if self.rotation is not None:
            rot = np.asarray(self.rotation, dtype=float)
            if not np.allclose(rot @ rot.T, np.eye(rot.shape[0]), atol=1e-9):
                raise ValueError("rotation must be orthogonal")
            out = out @ rot.T
        return self.ratio * out + np.asarray(self.translation, dtype=float)


@dataclass(frozen=True)
class IfsSystem:
    """Iterated function system of contracting similarities."""

    maps: tuple[SimilarityMap, ...]
    ambient_dim: int

    def __post_init__(self):
        if len(self.maps) == 0:
            raise ValueError("an IFS needs at least one map")
        for m in self.maps:
            if len(m.translation) != self.ambient_dim:
                raise ValueError("translation dimension mismatch")

    @staticmethod
    def cantor_middle_thirds() -> "IfsSystem":
        return IfsSystem(
            maps=(SimilarityMap(1 / 3, (0.0,)), SimilarityMap(1 / 3, (2 / 3,))),
            ambient_dim=1,
        )


def generate_ifs_attractor(
    sys: IfsSystem, depth: int, point_budget: int = DEFAULT_POINT_BUDGET
) -> PointCloud:
    """All depth-fold map compositions applied to the origin seed."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if len(sys.maps) ** depth > point_budget:
        raise BudgetError(
            f"{len(sys.maps)}^{depth} attractor points exceed budget {point_budget}"
        )
    pts = np.zeros((1, sys.ambient_dim))
    for _ in range(depth):
        pts = np.vstack([m.apply(pts) for m in sys.maps])
    return PointCloud(
        pts,
        {
            "generator": "ifs_attractor",
            "maps": [(m.ratio, list(m.translation)) for m in sys.maps],
            "depth": depth,
        },
    )


def generate_carpet(
    base_a: int,
    base_b: int,
    digits,
    depth: int,
    point_budget: int = DEFAULT_POINT_BUDGET,
) -> PointCloud:
    """Depth-level self-affine carpet approximation on an a x b subdivision.

    The unit square is split into ``base_a`` columns and ``base_b`` rows;
    ``digits`` selects (column, row) cells kept at every level.  Points are
    the lower-left corners of the selected depth-level rectangles, which
    reproduce grid-scale covering counts exactly.
    """
    if base_a < 2 or base_b <= base_a:
        raise ValueError("need 2 <= base_a < base_b")
    digits = sorted(set((int(i), int(j)) for i, j in digits))
    if not digits:
        raise ValueError("digit set must be non-empty")
    for i, j in digits:
        if not (0 <= i < base_a and 0 <= j < base_b):
            raise ValueError(f"digit {(i, j)} outside the {base_a} x {base_b} grid")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if len(digits) ** depth > point_budget:
        raise BudgetError(f"{len(digits)}^{depth} carpet points exceed budget {point_budget}")
    pts = np.zeros((1, 2))
    for level in range(1, depth + 1):
        sx = float(base_a) ** (-level)
        sy = float(base_b) ** (-level)
        offsets = np.array([(i * sx, j * sy) for i, j in digits])
        pts = (pts[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
    return PointCloud(
        pts,
        {
            "generator": "carpet",
            "base_a": base_a,
            "base_b": base_b,
            "digits": digits,
            "depth": depth,
        },
    )


def load_points(path, format: str | None = None) -> PointCloud:
    """Read a cloud from CSV (one point per row) or JSON (array of arrays)."""
    path = Path(path)
    if format is None:
        format = "json" if path.suffix.lower() == ".json" else "csv"
    if format not in ("csv", "json"):
        raise ValueError(f"unknown format {format!r}")
    if format == "json":
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, list) or not data:
            raise ValueError(f"{path}: expected a non-empty JSON array of points")
        rows = [[row] if isinstance(row, (int, float)) else row for row in data]
    else:
        rows = []
        with open(path, newline="") as fh:
            for record in csv.reader(fh):
                record = [cell.strip() for cell in record if cell.strip() != ""]
                if not record:
                    continue
                try:
                    rows.append([float(cell) for cell in record])
                except ValueError:
                    if rows:
                        raise ValueError(f"{path}: non-numeric row {record}")
                    continue  # header line
        if not rows:
            raise ValueError(f"{path}: no numeric rows found")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise ValueError(f"{path}: inconsistent column count")
    return PointCloud(
        np.asarray(rows, dtype=float),
        {"generator": "file", "source": str(path), "format": format},
        _warn_duplicates=True,
    )


def interval_grid(count: int) -> PointCloud:
    """Uniform grid of ``count`` points on [0, 1]."""
    if count < 1:
        raise ValueError("count must be positive")
    pts = np.linspace(0.0, 1.0, count) if count > 1 else np.array([0.0])
    return PointCloud(pts, {"generator": "interval_grid", "count": count})


def square_grid(side: int) -> PointCloud:
    """Uniform side x side grid on [0, 1]^2."""
    line = np.linspace(0.0, 1.0, side) if side > 1 else np.array([0.0])
    xx, yy = np.meshgrid(line, line, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    return PointCloud(pts, {"generator": "square_grid", "side": side})
