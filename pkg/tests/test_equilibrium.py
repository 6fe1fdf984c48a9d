import itertools

import numpy as np
import pytest

import intdim as d
from intdim.errors import BudgetError, CertificateError
from intdim.kernels import KernelSpec


def simplex_grid_minimum(gram, step=1e-3):
    """Brute-force oracle: scan the 2-simplex on a regular grid."""
    best = np.inf
    ticks = np.arange(0.0, 1.0 + step / 2, step)
    for a in ticks:
        for b in ticks[: int((1.0 - a) / step) + 2]:
            c = 1.0 - a - b
            if c < -1e-12:
                continue
            w = np.array([a, b, max(c, 0.0)])
            best = min(best, float(w @ gram @ w))
    return best


class TestMinimizeEnergy:
    def test_single_point(self):
        res = d.minimize_energy(np.array([[1.0]]))
        assert res.weights == pytest.approx([1.0])
        assert res.energy == 1.0
        assert res.capacity == 1.0

    @pytest.mark.parametrize("phi", [0.1, 0.5, 0.9, 1e-6])
    def test_two_point_closed_form(self, phi):
        gram = np.array([[1.0, phi], [phi, 1.0]])
        res = d.minimize_energy(gram)
        assert res.weights == pytest.approx([0.5, 0.5], abs=1e-9)
        assert res.energy == pytest.approx((1 + phi) / 2, abs=1e-12)
        assert res.capacity == pytest.approx(2 / (1 + phi), abs=1e-10)
        assert res.kkt_gap <= 1e-10

    @pytest.mark.parametrize("n", [3, 10, 100])
    def test_identity_gram_uniform(self, n):
        res = d.minimize_energy(np.eye(n))
        assert res.weights == pytest.approx(np.full(n, 1 / n), abs=1e-9)
        assert res.energy == pytest.approx(1 / n, rel=1e-9)
        assert res.capacity == pytest.approx(n, rel=1e-9)

    def test_three_point_grid_oracle(self):
        cloud = d.PointCloud([0.0, 0.3, 0.6])
        gram = d.gram_matrix(cloud, KernelSpec(0.05, 0.5, 0.8, 1))
        res = d.minimize_energy(gram)
        oracle = simplex_grid_minimum(gram)
        assert res.energy <= oracle + 1e-9
        assert res.energy == pytest.approx(oracle, abs=5e-3)

    def test_certificate_fields(self, cantor_depth8):
        gram = d.gram_matrix(cantor_depth8, KernelSpec(2.0**-7, 0.6, 0.5, 1))
        res = d.minimize_energy(gram)
        assert res.kkt_gap <= 1e-8
        assert res.weights.min() >= 0.0
        assert res.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert 0 < res.energy <= 1.0
        assert res.capacity >= 1.0
        # potential dominates energy off-support, equals it on the support
        gamma = res.energy
        assert res.potentials.min() >= gamma * (1 - 1e-8)
        support_pot = res.potentials[res.support()]
        assert np.all(support_pot <= gamma * (1 + 1e-6))

    def test_input_validation(self):
        with pytest.raises(ValueError):
            d.minimize_energy(np.ones((2, 3)))
        with pytest.raises(ValueError):
            d.minimize_energy(np.array([[2.0, 0.0], [0.0, 2.0]]))
        with pytest.raises(ValueError):
            d.minimize_energy(np.eye(2), tol=0.0)

    def test_warm_start(self):
        gram = np.array([[1.0, 0.3], [0.3, 1.0]])
        res = d.minimize_energy(gram, start=np.array([0.9, 0.1]))
        assert res.weights == pytest.approx([0.5, 0.5], abs=1e-9)

    def test_json_roundtrip(self, tmp_path):
        res = d.minimize_energy(np.eye(3))
        path = tmp_path / "eq.json"
        res.dump_json(path)
        import json

        data = json.loads(path.read_text())
        assert data["capacity"] == pytest.approx(3.0)
        assert len(data["weights"]) == 3


class TestCapacity:
    def test_one_point_capacity(self):
        res = d.capacity(d.PointCloud([[0.1, 0.9]]), KernelSpec(0.1, 0.5, 1.0, 2))
        assert res.capacity == 1.0

    def test_two_points_closed_form(self):
        r, theta, s, m = 0.01, 0.5, 1.0, 1
        dist = 0.5
        cloud = d.PointCloud([0.0, dist])
        phi = r ** (theta * (m - s) + s) / dist**m
        res = d.capacity(cloud, KernelSpec(r, theta, s, m))
        assert res.capacity == pytest.approx(2 / (1 + phi), abs=1e-10)

    def test_budget(self):
        cloud = d.interval_grid(100)
        with pytest.raises(BudgetError):
            d.capacity(cloud, KernelSpec(0.1, 0.5, 1.0, 1), max_points=10)


class TestCapacityMonotonicity:
    def test_entrywise_domination(self, rng):
        # gram_a >= gram_b entrywise implies capacity(a) <= capacity(b)
        base = rng.random((6, 6)) * 0.5
        base = (base + base.T) / 2
        np.fill_diagonal(base, 1.0)
        smaller = base.copy()
        off = ~np.eye(6, dtype=bool)
        smaller[off] *= 0.5
        cap_big = d.minimize_energy(base).capacity
        cap_small = d.minimize_energy(smaller).capacity
        assert cap_big <= cap_small + 1e-7

    def test_monotone_in_s_closed_form(self):
        # 2-point capacities: higher s means smaller kernel, larger capacity
        r, theta, m, dist = 0.01, 0.5, 1, 0.5
        cloud = d.PointCloud([0.0, dist])
        caps = [
            d.capacity(cloud, KernelSpec(r, theta, s, m)).capacity
            for s in (0.2, 0.5, 0.8, 1.0)
        ]
        assert all(a <= b + 1e-10 for a, b in zip(caps, caps[1:]))

    def test_monotone_under_inclusion(self):
        spec = KernelSpec(0.05, 0.5, 0.7, 1)
        small = d.PointCloud([0.0, 0.4, 0.9])
        large = d.PointCloud([0.0, 0.2, 0.4, 0.6, 0.9])
        cap_small = d.capacity(small, spec).capacity
        cap_large = d.capacity(large, spec).capacity
        assert cap_large >= cap_small - 1e-7

    def test_capacity_bounds(self, cantor_depth8):
        res = d.capacity(cantor_depth8, KernelSpec(2.0**-6, 0.5, 0.6, 1))
        assert 1.0 - 1e-9 <= res.capacity <= len(cantor_depth8) + 1e-6

    def test_kernel_dimension_monotonicity(self):
        # capacities nondecreasing in m (kernels decreasing in m)
        rng = np.random.default_rng(5)
        cloud = d.PointCloud(rng.random((40, 2)))
        caps = [
            d.capacity(cloud, KernelSpec(0.02, 0.5, 0.5, m)).capacity for m in (1, 2)
        ]
        assert caps[0] <= caps[1] + 1e-7


class TestDegenerateGrams:
    def test_flat_band_kernel_certifies(self, interval_1024):
        # s = 0 makes the kernel 1 on the whole band: heavily rank-deficient
        gram = d.gram_matrix(interval_1024, KernelSpec(2.0**-8, 0.5, 0.0, 1))
        res = d.minimize_energy(gram)
        assert res.kkt_gap <= 1e-8

    def test_all_ones_block(self):
        gram = np.ones((5, 5))
        res = d.minimize_energy(gram)
        assert res.energy == pytest.approx(1.0)
        assert res.kkt_gap <= 1e-8
