"""Restricted covering sums via an exact dynamic program on dyadic cubes.

The covering sum at scales (r, theta) is the minimum of sum(|U|^s) over
covers of the cloud by origin-anchored dyadic cubes whose diameters lie in
the band [r, r^theta].  Restricting to the dyadic family costs at most a
dimensional constant against arbitrary covers, which cancels in every
log-ratio quantity built on top.

The recursion is cost(cube) = min(diam^s, sum of child costs), with leaves
forced at the finest admitted level, evaluated bottom-up over only the cubes
that contain sample points.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import PointCloud

MAX_LEVEL = 60  # 2^-60 cube sides; beyond this int64 cell indices overflow


def box_count(cloud: PointCloud, delta: float) -> int:
    """Number of origin-anchored grid cells of side ``delta`` meeting the cloud."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    idx = np.floor(cloud.points / delta).astype(np.int64)
    return int(np.unique(idx, axis=0).shape[0])


@dataclass
class CoverSumResult:
    """Outcome of one restricted covering-sum evaluation.

    ``value`` is the achieved minimum of sum(diam^s); ``cells`` lists the
    chosen cubes as (corner, side) pairs; ``scale_histogram`` counts chosen
    cells per dyadic level.  ``band`` is the realized diameter band
    [finest, coarsest] of admitted levels; when no dyadic diameter fits
    inside [r, r^theta] the single nearest level is admitted instead and
    ``band_fallback`` is set.  ``r_eff`` echoes the finest admitted diameter.
    """

    value: float
    r: float
    theta: float
    s: float
    cells: list = field(repr=False)
    scale_histogram: dict
    band: tuple[float, float]
    band_fallback: bool

    @property
    def r_eff(self) -> float:
        return self.band[0]


def admitted_levels(r: float, theta: float, ambient_dim: int) -> tuple[list[int], bool]:
    """Dyadic levels j whose cube diameter 2^-j * sqrt(n) lies in [r, r^theta].

    Returns (levels, fallback).  When the band contains no dyadic diameter
    (possible for theta near 1), the level nearest the band in log scale is
    admitted alone and ``fallback`` is True.  Ties prefer the finer level so
    the upper constraint diam <= r^theta is respected.
    """
    if not 0.0 < r < 1.0:
        raise ValueError("r must lie in (0, 1)")
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    root_n = math.sqrt(ambient_dim)
    rt = r**theta
    eps = 1e-9
    j_coarse = math.ceil(math.log2(root_n / rt) - eps)
    j_fine = math.floor(math.log2(root_n / r) + eps)
    j_coarse = max(j_coarse, 0)
    if j_fine > MAX_LEVEL:
        raise ValueError(f"r={r} needs dyadic level {j_fine} > {MAX_LEVEL}")
    if j_coarse <= j_fine:
        return list(range(j_coarse, j_fine + 1)), False
    # Band narrower than one dyadic step: pick the closer of the two
    # straddling levels in log scale, finer on ties.
    centre = 0.5 * (math.log2(r) + math.log2(rt))
    lo, hi = j_coarse, j_fine  # lo is finer (diam < r), hi coarser (diam > r^theta)
    d_lo = abs(math.log2(root_n) - lo - centre)
    d_hi = abs(math.log2(root_n) - hi - centre)
    return ([lo] if d_lo <= d_hi else [hi]), True


def restricted_cover_sum(
    cloud: PointCloud,
    r: float,
    theta: float,
    s: float,
    keep_cells: bool = True,
) -> CoverSumResult:
    """Exact minimum of sum(diam^s) over admitted dyadic covers of the cloud.

    Warns when r is below the cloud separation, where the sum reflects the
    discretisation rather than the underlying set.
    """
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    if s < 0:
        raise ValueError("s must be nonnegative")
    if 0 < cloud.separation and r < cloud.separation:
        warnings.warn(
            f"r={r:g} is below the sample separation {cloud.separation:g}; "
            "the covering sum saturates at this scale",
            stacklevel=2,
        )
    levels, fallback = admitted_levels(r, theta, cloud.ambient_dim)
    root_n = math.sqrt(cloud.ambient_dim)
    diams = {j: (2.0**-j) * root_n for j in levels}
    band = (diams[levels[-1]], diams[levels[0]])

    value, chosen = _solve_dp(cloud.points, levels, diams, s, keep_cells)
    histogram: dict[int, int] = {}
    cells = []
    if keep_cells:
        for j, corner_idx in chosen:
            side = 2.0**-j
            histogram[j] = histogram.get(j, 0) + 1
            cells.append((tuple(float(c) * side for c in corner_idx), side))
    return CoverSumResult(
        value=value,
        r=r,
        theta=theta,
        s=s,
        cells=cells,
        scale_histogram=histogram,
        band=band,
        band_fallback=fallback,
    )


def cover_sum_value(cloud: PointCloud, r: float, theta: float, s: float) -> float:
    """Value-only covering sum used in inner estimation loops."""
    return restricted_cover_sum(cloud, r, theta, s, keep_cells=False).value


def _solve_dp(points: np.ndarray, levels: list[int], diams: dict, s: float, keep_cells: bool):
    j_fine = levels[-1]
    idx = np.floor(points * (2.0**j_fine)).astype(np.int64)
    cells, _ = _unique_rows(idx)
    cost = np.full(cells.shape[0], diams[j_fine] ** s)
    taken = [np.ones(cells.shape[0], dtype=bool)] if keep_cells else None
    per_level = [(j_fine, cells)] if keep_cells else None
    children = []  # parent linkage per level, finest first

    for j in levels[-2::-1]:
        parents, inverse = _unique_rows(cells >> 1)
        child_sum = np.zeros(parents.shape[0])
        np.add.at(child_sum, inverse, cost)
        own = diams[j] ** s
        take = own < child_sum
        cost = np.where(take, own, child_sum)
        if keep_cells:
            taken.append(take)
            per_level.append((j, parents))
            children.append(inverse)
        cells = parents

    value = float(cost.sum())
    if not keep_cells:
        return value, None

    # Walk back down: a cell is emitted when taken; otherwise its children
    # (at the next finer level) are active.
    chosen = []
    taken.reverse()
    per_level.reverse()
    children.reverse()
    active = np.ones(per_level[0][1].shape[0], dtype=bool)
    for depth, (j, level_cells) in enumerate(per_level):
        take_here = active & taken[depth]
        for row in level_cells[take_here]:
            chosen.append((j, row))
        if depth < len(children):
            descend = active & ~taken[depth]
            active = descend[children[depth]]
    return value, chosen


def _unique_rows(arr: np.ndarray):
    """Unique rows plus inverse mapping, deterministic lexicographic order."""
    uniq, inverse = np.unique(arr, axis=0, return_inverse=True)
    return uniq, inverse.ravel()


class CoverHierarchy:
    """Cell structure of the dyadic DP at fixed (cloud, r, theta).

    The occupied cells and their parent links do not depend on s, so root
    finding in s can rebuild only the costs.  ``value(s)`` matches
    ``restricted_cover_sum(cloud, r, theta, s).value`` exactly.
    """

    def __init__(self, cloud: PointCloud, r: float, theta: float):
        self.r = r
        self.theta = theta
        levels, self.band_fallback = admitted_levels(r, theta, cloud.ambient_dim)
        root_n = math.sqrt(cloud.ambient_dim)
        self.diams = [(2.0**-j) * root_n for j in levels]  # coarse -> fine
        idx = np.floor(cloud.points * (2.0 ** levels[-1])).astype(np.int64)
        cells, _ = _unique_rows(idx)
        self._n_fine = cells.shape[0]
        self._links = []  # (inverse, n_parents) from fine towards coarse
        for _ in levels[-2::-1]:
            parents, inverse = _unique_rows(cells >> 1)
            self._links.append((inverse, parents.shape[0]))
            cells = parents
        self.band = (self.diams[-1], self.diams[0])

    def value(self, s: float) -> float:
        cost = np.full(self._n_fine, self.diams[-1] ** s)
        depth = len(self._links)
        for k, (inverse, n_parents) in enumerate(self._links):
            child_sum = np.bincount(inverse, weights=cost, minlength=n_parents)
            own = self.diams[depth - 1 - k] ** s
            cost = np.minimum(own, child_sum)
        return float(cost.sum())
