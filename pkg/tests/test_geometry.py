import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import intdim as d
from intdim.errors import BudgetError


def brute_force_fill_distance(points):
    """Independent oracle: all-pairs scan for the largest nearest-neighbour gap."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] < 2:
        return 0.0
    worst = 0.0
    for i in range(pts.shape[0]):
        dists = np.linalg.norm(pts - pts[i], axis=1)
        dists[i] = np.inf
        worst = max(worst, dists.min())
    return worst


class TestSequenceSet:
    def test_p1_small(self):
        cloud = d.generate_sequence_set(1.0, 3)
        assert sorted(cloud.points.ravel()) == pytest.approx([0.0, 1 / 3, 0.5, 1.0])

    def test_p2_small(self):
        cloud = d.generate_sequence_set(2.0, 2)
        assert sorted(cloud.points.ravel()) == pytest.approx([0.0, 0.25, 1.0])

    def test_resolution_matches_oracle_large(self):
        cloud = d.generate_sequence_set(0.5, 10_000)
        assert len(cloud) == 10_001
        assert cloud.resolution == pytest.approx(brute_force_fill_distance(cloud.points))

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            d.generate_sequence_set(0.0, 10)
        with pytest.raises(ValueError):
            d.generate_sequence_set(-1.0, 10)
        with pytest.raises(ValueError):
            d.generate_sequence_set(1.0, 0)

    def test_inside_unit_interval(self):
        cloud = d.generate_sequence_set(0.7, 500)
        assert cloud.points.min() >= 0.0
        assert cloud.points.max() <= 1.0

    def test_descriptor(self):
        cloud = d.generate_sequence_set(2.0, 5)
        assert cloud.descriptor["p"] == 2.0
        assert cloud.descriptor["count"] == 5


class TestProduct:
    def test_two_by_two(self):
        a = d.PointCloud([0.0, 1.0])
        out = d.product(a, a)
        expected = {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)}
        assert set(map(tuple, out.points)) == expected

    def test_embedding_with_singleton(self):
        a = d.generate_sequence_set(1.0, 3)
        out = d.product(a, d.PointCloud([0.0]))
        assert out.ambient_dim == 2
        assert np.all(out.points[:, 1] == 0.0)
        assert len(out) == len(a)

    def test_count_is_exact(self):
        f1 = d.generate_sequence_set(1.0, 100)
        out = d.product(f1, f1)
        assert len(out) == 101**2

    def test_budget(self):
        a = d.interval_grid(2000)
        with pytest.raises(BudgetError):
            d.product(a, a)

    @given(na=st.integers(2, 8), nb=st.integers(2, 8))
    @settings(max_examples=20, deadline=None)
    def test_size_property(self, na, nb):
        a = d.PointCloud(np.linspace(0, 1, na))
        b = d.PointCloud(np.linspace(0, 1, nb) + 3.0)
        assert len(d.product(a, b)) == na * nb


class TestIfsAttractor:
    def test_cantor_depth1(self):
        cloud = d.generate_ifs_attractor(d.IfsSystem.cantor_middle_thirds(), 1)
        assert sorted(cloud.points.ravel()) == pytest.approx([0.0, 2 / 3])

    def test_cantor_depth8_gaps(self, cantor_depth8):
        assert len(cantor_depth8) == 256
        pts = np.sort(cantor_depth8.points.ravel())
        gaps = np.diff(pts)
        assert gaps.min() >= 3.0**-8 - 1e-12
        assert pts.min() >= 0.0 and pts.max() <= 1.0

    def test_cantor_points_are_triadic_with_digits_0_2(self, cantor_depth8):
        scaled = cantor_depth8.points.ravel() * 3.0**8
        assert np.allclose(scaled, np.round(scaled), atol=1e-6)
        for value in np.round(scaled).astype(int):
            digits = np.base_repr(value, base=3)
            assert set(digits) <= {"0", "2"}

    def test_single_map_fixed_point(self):
        sys = d.IfsSystem(maps=(d.SimilarityMap(0.5, (0.0,)),), ambient_dim=1)
        cloud = d.generate_ifs_attractor(sys, 5)
        assert len(cloud) == 1
        assert cloud.points[0, 0] == 0.0

    def test_budget(self):
        with pytest.raises(BudgetError):
            d.generate_ifs_attractor(d.IfsSystem.cantor_middle_thirds(), 25)

    def test_bad_ratio(self):
        with pytest.raises(ValueError):
            d.SimilarityMap(1.0, (0.0,))
        with pytest.raises(ValueError):
            d.SimilarityMap(0.0, (0.0,))


class TestCarpet:
    def test_single_digit_degenerate(self):
        cloud = d.generate_carpet(2, 3, {(0, 0)}, 4)
        assert len(cloud) == 1
        assert tuple(cloud.points[0]) == (0.0, 0.0)

    def test_full_grid_depth2(self):
        digits = [(i, j) for i in range(2) for j in range(3)]
        cloud = d.generate_carpet(2, 3, digits, 2)
        assert len(cloud) == 36
        xs = sorted(set(cloud.points[:, 0]))
        ys = sorted(set(cloud.points[:, 1]))
        assert xs == pytest.approx([k / 4 for k in range(4)])
        assert ys == pytest.approx([k / 9 for k in range(9)])

    def test_two_digit_count(self):
        cloud = d.generate_carpet(2, 3, {(0, 0), (1, 2)}, 3)
        assert len(cloud) == 8

    def test_digit_validation(self):
        with pytest.raises(ValueError):
            d.generate_carpet(2, 3, {(2, 0)}, 2)
        with pytest.raises(ValueError):
            d.generate_carpet(2, 3, {(0, 3)}, 2)
        with pytest.raises(ValueError):
            d.generate_carpet(2, 3, set(), 2)
        with pytest.raises(ValueError):
            d.generate_carpet(3, 2, {(0, 0)}, 2)

    def test_inside_unit_square(self):
        cloud = d.generate_carpet(2, 3, {(0, 0), (1, 1), (0, 2)}, 5)
        assert cloud.points.min() >= 0.0
        assert cloud.points.max() <= 1.0


class TestLoadPoints:
    def test_csv_roundtrip(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("0\n1\n0.5\n")
        cloud = d.load_points(path)
        assert sorted(cloud.points.ravel()) == pytest.approx([0.0, 0.5, 1.0])

    def test_csv_header_skipped(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("x,y\n0,0\n1,2\n")
        cloud = d.load_points(path)
        assert cloud.ambient_dim == 2
        assert len(cloud) == 2

    def test_duplicate_rows_warn(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("0.5\n0.5\n1.0\n")
        with pytest.warns(UserWarning, match="duplicate"):
            cloud = d.load_points(path)
        assert len(cloud) == 2

    def test_json(self, tmp_path):
        path = tmp_path / "pts.json"
        path.write_text(json.dumps([[0, 0], [1, 0], [0, 1]]))
        cloud = d.load_points(path)
        assert cloud.ambient_dim == 2
        assert len(cloud) == 3

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("0,1\n2\n")
        with pytest.raises(ValueError, match="column"):
            d.load_points(path)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("")
        with pytest.raises(ValueError):
            d.load_points(path)

    def test_unknown_format(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("0\n")
        with pytest.raises(ValueError):
            d.load_points(path, format="xml")


class TestFillDistance:
    def test_three_points(self):
        assert d.fill_distance(d.PointCloud([0.0, 1.0, 0.5])) == pytest.approx(0.5)

    def test_four_points_oracle(self):
        pts = [0.0, 1.0, 0.5, 1 / 3]
        cloud = d.PointCloud(pts)
        assert d.fill_distance(cloud) == pytest.approx(0.5)
        assert d.fill_distance(cloud) == pytest.approx(brute_force_fill_distance(pts))

    def test_single_point(self):
        assert d.fill_distance(d.PointCloud([[0.3, 0.7]])) == 0.0

    def test_separation(self):
        cloud = d.PointCloud([0.0, 0.1, 0.5, 1.0])
        assert d.separation(cloud) == pytest.approx(0.1)

    @given(
        shift=st.floats(-5, 5, allow_nan=False),
        angle=st.floats(0, 2 * np.pi),
    )
    @settings(max_examples=25, deadline=None)
    def test_isometry_invariance(self, shift, angle):
        rng = np.random.default_rng(7)
        pts = rng.random((40, 2))
        rot = np.array(
            [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]]
        )
        moved = pts @ rot.T + shift
        a = d.PointCloud(pts)
        b = d.PointCloud(moved)
        assert d.fill_distance(a) == pytest.approx(d.fill_distance(b), rel=1e-9)


class TestPointCloud:
    def test_dedup_tolerance(self):
        cloud = d.PointCloud([[0.0], [1e-13], [1.0]])
        assert len(cloud) == 2

    def test_immutability(self):
        cloud = d.PointCloud([0.0, 1.0])
        with pytest.raises((ValueError, RuntimeError)):
            cloud.points[0] = 5.0

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError):
            d.PointCloud(np.zeros((0, 2)))
        with pytest.raises(ValueError):
            d.PointCloud([np.nan, 1.0])

    def test_diameter(self):
        cloud = d.PointCloud([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]])
        assert cloud.diameter() == pytest.approx(5.0)
