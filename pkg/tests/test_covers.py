import itertools
import math

import numpy as np
import pytest

import intdim as d
from intdim.covers import CoverHierarchy, admitted_levels


def enumerate_cover_minimum(points, r, theta, s, ambient_dim):
    """Independent oracle: exhaustively enumerate every admitted dyadic cover.

    Walks the cube tree over the admitted levels and takes the explicit
    minimum of sum(diam^s) over all covers, without sharing the DP's
    memoisation structure.  Exponential; only for tiny instances.
    """
    levels, _ = admitted_levels(r, theta, ambient_dim)
    root_n = math.sqrt(ambient_dim)
    pts = np.atleast_2d(points)

    def cover_cost(level_idx, cell):
        level = levels[level_idx]
        inside = pts[
            np.all(np.floor(pts * 2.0**level).astype(int) == np.asarray(cell), axis=1)
        ]
        if inside.shape[0] == 0:
            return 0.0
        own = ((2.0**-level) * root_n) ** s
        if level_idx == len(levels) - 1:
            return own
        children = set(
            map(tuple, np.floor(inside * 2.0 ** levels[level_idx + 1]).astype(int))
        )
        sub = sum(cover_cost(level_idx + 1, child) for child in children)
        return min(own, sub)

    top = set(map(tuple, np.floor(pts * 2.0 ** levels[0]).astype(int)))
    return sum(cover_cost(0, cell) for cell in top)


class TestBoxCount:
    def test_two_points(self):
        assert d.box_count(d.PointCloud([0.0, 1.0]), 0.5) == 2

    def test_uniform_grid(self):
        cloud = d.interval_grid(1000)
        assert d.box_count(cloud, 0.1) in (10, 11)

    def test_single_point(self):
        assert d.box_count(d.PointCloud([[0.4, 0.2]]), 0.25) == 1

    def test_invalid_delta(self):
        with pytest.raises(ValueError):
            d.box_count(d.PointCloud([0.0]), 0.0)


class TestAdmittedLevels:
    def test_plain_band(self):
        levels, fallback = admitted_levels(2.0**-8, 0.5, 1)
        assert not fallback
        # diameters 2^-j must lie in [2^-8, 2^-4]
        assert levels == [4, 5, 6, 7, 8]

    def test_theta_one_1d_exact(self):
        levels, fallback = admitted_levels(2.0**-6, 1.0, 1)
        assert levels == [6]
        assert not fallback

    def test_theta_one_2d_fallback(self):
        levels, fallback = admitted_levels(2.0**-6, 1.0, 2)
        assert fallback
        assert len(levels) == 1

    def test_level_cap(self):
        with pytest.raises(ValueError):
            admitted_levels(2.0**-70, 1.0, 1)


class TestRestrictedCoverSum:
    def test_single_point_value(self):
        r, theta, s = 2.0**-6, 0.5, 1.0
        res = d.restricted_cover_sum(d.PointCloud([0.37]), r, theta, s)
        assert res.value == pytest.approx(r**s)  # finest admitted diameter is r
        assert len(res.cells) == 1

    def test_far_points_use_finest_level(self):
        # 10 points pairwise farther apart than r^theta: one cell each at the
        # finest admitted diameter
        r, theta, s = 2.0**-8, 0.5, 0.7
        pts = np.arange(10) * 0.1
        res = d.restricted_cover_sum(d.PointCloud(pts), r, theta, s)
        assert res.value == pytest.approx(10 * r**s)
        assert res.scale_histogram == {8: 10}

    def test_interval_near_one(self, interval_1024):
        res = d.restricted_cover_sum(interval_1024, 2.0**-8, 0.5, 1.0)
        assert 0.25 <= res.value <= 4.0

    def test_s_zero_is_coarse_box_count(self, cantor_depth8):
        r, theta = 2.0**-8, 0.5
        res = d.restricted_cover_sum(cantor_depth8, r, theta, 0.0)
        coarse_side = 2.0**-4  # coarsest admitted level for these parameters
        assert res.value == d.box_count(cantor_depth8, coarse_side)

    def test_cells_cover_every_point(self, cantor_depth8):
        res = d.restricted_cover_sum(cantor_depth8, 2.0**-7, 0.6, 0.5)
        pts = cantor_depth8.points
        covered = np.zeros(len(pts), dtype=bool)
        for corner, side in res.cells:
            lo = np.asarray(corner)
            inside = np.all((pts >= lo - 1e-12) & (pts < lo + side + 1e-12), axis=1)
            covered |= inside
        assert covered.all()

    def test_value_matches_cell_sum(self, cantor_depth8):
        res = d.restricted_cover_sum(cantor_depth8, 2.0**-7, 0.6, 0.5)
        root_n = math.sqrt(cantor_depth8.ambient_dim)
        total = sum((side * root_n) ** res.s for _, side in res.cells)
        assert res.value == pytest.approx(total, rel=1e-12)

    def test_cell_diameters_within_band(self, cantor_depth8):
        res = d.restricted_cover_sum(cantor_depth8, 2.0**-7, 0.6, 0.5)
        assert not res.band_fallback
        for _, side in res.cells:
            diam = side * math.sqrt(cantor_depth8.ambient_dim)
            assert res.r - 1e-15 <= diam <= res.r**res.theta + 1e-15

    def test_empty_and_invalid(self):
        cloud = d.PointCloud([0.0, 1.0])
        with pytest.raises(ValueError):
            d.restricted_cover_sum(cloud, 1.0, 0.5, 1.0)
        with pytest.raises(ValueError):
            d.restricted_cover_sum(cloud, 0.5, 0.5, -1.0)

    def test_saturation_warning(self):
        cloud = d.PointCloud([0.0, 0.5, 1.0])
        with pytest.warns(UserWarning, match="saturates"):
            d.restricted_cover_sum(cloud, 2.0**-6, 0.5, 1.0)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_enumeration_oracle(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.random(4)
        r, theta, s = 2.0**-4, 0.5, 0.8
        cloud = d.PointCloud(pts)
        expected = enumerate_cover_minimum(cloud.points, r, theta, s, 1)
        res = d.restricted_cover_sum(cloud, r, theta, s)
        assert res.value == pytest.approx(expected, rel=1e-12)

    def test_matches_enumeration_oracle_2d(self):
        rng = np.random.default_rng(3)
        pts = rng.random((4, 2))
        r, theta, s = 2.0**-3, 0.6, 1.1
        cloud = d.PointCloud(pts)
        expected = enumerate_cover_minimum(cloud.points, r, theta, s, 2)
        res = d.restricted_cover_sum(cloud, r, theta, s)
        assert res.value == pytest.approx(expected, rel=1e-12)


class TestCoverHierarchy:
    @pytest.mark.parametrize("theta", [0.3, 0.7, 1.0])
    def test_matches_full_dp(self, cantor_depth8, theta):
        r = 2.0**-7
        hierarchy = CoverHierarchy(cantor_depth8, r, theta)
        for s in (0.0, 0.4, 1.0):
            res = d.restricted_cover_sum(cantor_depth8, r, theta, s, keep_cells=False)
            assert hierarchy.value(s) == pytest.approx(res.value, rel=1e-12)


class TestCoverProperties:
    def test_lipschitz_bounds_exact(self, cantor_depth8, rng):
        # r^{s-t} S^t <= S^s <= r^{theta(s-t)} S^t on the realized band
        r, theta = 2.0**-7, 0.5
        hierarchy = CoverHierarchy(cantor_depth8, r, theta)
        d_lo, d_hi = hierarchy.band
        for _ in range(10):
            t, s = np.sort(rng.random(2))
            ratio = hierarchy.value(s) / hierarchy.value(t)
            assert d_lo ** (s - t) * (1 - 1e-9) <= ratio <= d_hi ** (s - t) * (1 + 1e-9)

    def test_monotone_in_band_width(self, cantor_depth8):
        # widening the band (smaller theta) can only lower the infimum
        r, s = 2.0**-8, 0.6
        values = [
            d.restricted_cover_sum(cantor_depth8, r, theta, s, keep_cells=False).value
            for theta in (0.3, 0.5, 0.8, 1.0)
        ]
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))

    def test_translation_changes_value_boundedly(self, rng):
        pts = rng.random(64)
        r, theta, s = 2.0**-6, 0.5, 0.8
        base = d.restricted_cover_sum(d.PointCloud(pts), r, theta, s).value
        shifted = d.restricted_cover_sum(d.PointCloud(pts + 0.271), r, theta, s).value
        factor = 2.0**s * 4.0  # dyadic re-anchoring slack, c(1) = 4
        assert base / factor <= shifted <= base * factor

    def test_value_upper_bound(self, cantor_depth8):
        r, theta, s = 2.0**-7, 0.5, 0.9
        res = d.restricted_cover_sum(cantor_depth8, r, theta, s, keep_cells=False)
        coarsest = res.band[1]
        assert 0 < res.value <= len(cantor_depth8) * coarsest**s
