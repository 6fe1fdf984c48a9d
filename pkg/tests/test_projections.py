import numpy as np
import pytest
from scipy import stats

import intdim as d


class TestSampleSubspace:
    def test_orthonormality(self):
        for seed in range(10):
            frame = d.sample_subspace(3, 2, seed)
            gram = frame.basis.T @ frame.basis
            assert np.allclose(gram, np.eye(2), atol=1e-10)

    def test_reproducible_bit_for_bit(self):
        a = d.sample_subspace(4, 2, 123)
        b = d.sample_subspace(4, 2, 123)
        assert np.array_equal(a.basis, b.basis)

    def test_distinct_seeds_differ(self):
        a = d.sample_subspace(3, 1, 0)
        b = d.sample_subspace(3, 1, 1)
        assert not np.allclose(a.basis, b.basis)

    def test_sign_convention(self):
        for seed in range(20):
            frame = d.sample_subspace(5, 3, seed)
            for col in range(3):
                column = frame.basis[:, col]
                lead = np.flatnonzero(np.abs(column) > 1e-12)[0]
                assert column[lead] > 0

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            d.sample_subspace(2, 2, 0)
        with pytest.raises(ValueError):
            d.sample_subspace(2, 0, 0)

    def test_projected_length_matches_arcsine_law(self):
        # |pi_V e1| for uniform lines in R^2 has CDF (2/pi) arcsin(t)
        samples = np.array(
            [abs(d.sample_subspace(2, 1, seed).basis[0, 0]) for seed in range(10_000)]
        )
        ks = stats.kstest(samples, lambda t: (2 / np.pi) * np.arcsin(np.clip(t, 0, 1)))
        assert ks.statistic < 0.02


class TestSubspaceFrame:
    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            d.SubspaceFrame(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_axis_helper(self):
        frame = d.SubspaceFrame.axis(3, [2])
        assert frame.basis[:, 0] == pytest.approx([0, 0, 1])

    def test_basis_immutable(self):
        frame = d.SubspaceFrame.axis(2, [0])
        with pytest.raises((ValueError, RuntimeError)):
            frame.basis[0, 0] = 2.0


class TestProject:
    def test_identity_frame_isometry(self, rng):
        pts = rng.random((50, 2))
        cloud = d.PointCloud(pts)
        angle = 0.7
        basis = np.array(
            [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]]
        )
        shadow = d.project(cloud, d.SubspaceFrame(basis))
        assert len(shadow) == len(cloud)
        assert shadow.ambient_dim == 2
        orig = np.sort(cloud.pairwise_distances().ravel())
        new = np.sort(shadow.pairwise_distances().ravel())
        assert np.allclose(orig, new, atol=1e-9)

    def test_collision_dedup(self):
        cloud = d.PointCloud([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        shadow = d.project(cloud, d.SubspaceFrame.axis(2, [0]))
        assert sorted(shadow.points.ravel()) == pytest.approx([0.0, 1.0])

    def test_contraction_exhaustive(self, rng):
        cloud = d.PointCloud(rng.random((20, 3)))
        for seed in range(5):
            frame = d.sample_subspace(3, 2, seed)
            shadow_pts = cloud.points @ frame.basis
            for i in range(len(cloud)):
                orig = np.linalg.norm(cloud.points - cloud.points[i], axis=1)
                proj = np.linalg.norm(shadow_pts - shadow_pts[i], axis=1)
                assert np.all(proj <= orig + 1e-12)

    def test_dimension_mismatch(self):
        cloud = d.PointCloud([[0.0, 0.0]])
        with pytest.raises(ValueError):
            d.project(cloud, d.SubspaceFrame.axis(3, [0]))

    def test_provenance_chain(self):
        cloud = d.generate_sequence_set(1.0, 4)
        prod = d.product(cloud, cloud)
        shadow = d.project(prod, d.sample_subspace(2, 1, 7))
        assert shadow.descriptor["generator"] == "projection"
        assert shadow.descriptor["seed"] == 7
        assert shadow.descriptor["parent"]["generator"] == "product"


class TestProjectionExperiment:
    @pytest.fixture(scope="class")
    def square_report(self):
        cloud = d.square_grid(28)
        sched = d.ScaleSchedule.geometric(2, 12)
        return d.projection_experiment(
            cloud, 1, trials=6, theta_grid=(1.0,), sched=sched, seed=11
        )

    def test_square_projections_are_intervals(self, square_report):
        # every direction's shadow of the square has dimension about 1
        assert np.all(np.abs(square_report.per_frame_estimates - 1.0) < 0.2)

    def test_sure_upper_bound(self, square_report):
        assert square_report.exceed_count == 0

    def test_report_rows(self, square_report):
        rows = square_report.as_rows()
        assert len(rows) == 6
        seeds = {row[0] for row in rows}
        assert seeds == {11 + k for k in range(6)}

    def test_named_frames(self):
        cloud = d.square_grid(16)
        sched = d.ScaleSchedule.geometric(2, 10)
        report = d.projection_experiment(
            cloud,
            1,
            trials=2,
            theta_grid=(1.0,),
            sched=sched,
            seed=3,
            named_frames={"axis0": d.SubspaceFrame.axis(2, [0])},
        )
        assert "axis0" in report.extra_frames
        label_rows = [row for row in report.as_rows() if row[0] == "axis0"]
        assert len(label_rows) == 1

    def test_invalid_trials(self):
        with pytest.raises(ValueError):
            d.projection_experiment(d.square_grid(4), 1, 0, (1.0,))
