"""Potential kernels and Gram matrices over point clouds.

Three radial kernel families, all valued in [0, 1], all nonincreasing in the
distance ``d`` and parametrised by an inner scale ``r`` in (0, 1), a band
exponent ``theta`` in (0, 1], a power ``s`` in [0, m] and an integer
dimension parameter ``m``:

``full``       1 on [0, r); (r/d)^s on [r, r^theta); r^(theta(m-s)+s) / d^m beyond.
``box``        min(1, (r/d)^m); the s- and theta-free endpoint family.
``truncated``  1 on [0, r); (r/d)^s on [r, r^theta]; 0 beyond r^theta.

``full`` is continuous; at theta = 1 it degenerates to ``box`` (the middle
band is empty and the tail equals (r/d)^m), which we short-circuit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetError
from .geometry import PointCloud

VARIANTS = ("full", "box", "truncated")

DEFAULT_GRAM_CAP = 20_000


@dataclass(frozen=True)
class KernelSpec:
    """Parameters (r, theta, s, m) plus the kernel family selector.

    For ``box`` the evaluation depends on (r, m) only; theta and s are
    recorded but ignored.
    """

    r: float
    theta: float
    s: float
    m: int
    variant: str = "full"

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"r must lie in (0, 1), got {self.r}")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if self.m < 1 or self.m != int(self.m):
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if not 0.0 <= self.s <= self.m:
            raise ValueError(f"s must lie in [0, m] = [0, {self.m}], got {self.s}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        # 0 < r < 1 forces r < r^theta whenever theta < 1.
        assert self.theta == 1.0 or self.r < self.r**self.theta

    @property
    def outer_scale(self) -> float:
        """The band's upper breakpoint r^theta."""
        return self.r**self.theta

    def with_s(self, s: float) -> "KernelSpec":
        return KernelSpec(self.r, self.theta, s, self.m, self.variant)


def kernel_eval(distance, spec: KernelSpec):
    """Evaluate the kernel at one or many nonnegative distances.

    Scalar in, scalar out; array in, array out.  Branch ties: d = r belongs
    to the middle branch for every family; d = r^theta belongs to the middle
    branch for ``truncated`` and to the outer branch for ``full`` (the two
    branches agree there, so the assignment only fixes bit-level behaviour).
    """
    d = np.asarray(distance, dtype=float)
    if np.any(d < 0):
        raise ValueError("distances must be nonnegative")
    scalar = d.ndim == 0
    d = np.atleast_1d(d)
    out = _eval_array(d, spec)
    return float(out[0]) if scalar else out


def _eval_array(d: np.ndarray, spec: KernelSpec) -> np.ndarray:
    r, theta, s, m = spec.r, spec.theta, spec.s, float(spec.m)
    variant = spec.variant
    if variant == "full" and theta == 1.0:
        variant = "box"

    out = np.ones_like(d)
    if variant == "box":
        far = d >= r
        np.divide(r, d, out=out, where=far)
        if m != 1.0:
            np.power(out, m, out=out, where=far)
        return out

    rt = spec.outer_scale
    if variant == "truncated":
        mid = (d >= r) & (d <= rt)
        beyond = d > rt
    else:
        mid = (d >= r) & (d < rt)
        beyond = d >= rt
    ratio = np.divide(r, d, where=d > 0, out=np.ones_like(d))
    if s != 0.0:
        np.power(ratio, s, out=ratio, where=mid)
    out[mid] = ratio[mid] if s != 0.0 else 1.0
    if variant == "truncated":
        out[beyond] = 0.0
    else:
        tail = r ** (theta * (m - s) + s) / d[beyond] ** m
        out[beyond] = tail
    return out


def gram_matrix(
    cloud: PointCloud, spec: KernelSpec, max_points: int = DEFAULT_GRAM_CAP
) -> np.ndarray:
    """Dense symmetric Gram matrix G[i, j] = kernel(|x_i - x_j|).

    The diagonal is exactly 1 for every family.  ``m`` may not exceed the
    cloud's ambient dimension.
    """
    if spec.m > cloud.ambient_dim:
        raise ValueError(
            f"kernel dimension m={spec.m} exceeds ambient dimension {cloud.ambient_dim}"
        )
    n = len(cloud)
    if n > max_points:
        raise BudgetError(f"{n} points exceed the Gram cap {max_points}")
    gram = _eval_array(cloud.pairwise_distances(), spec)
    np.fill_diagonal(gram, 1.0)
    return gram


class GramFactory:
    """Assemble Gram matrices for a fixed (cloud, r, theta, m) across many s.

    Bisection on s re-evaluates the kernel dozens of times on the same
    distance matrix; only the middle band depends on s through exp(s * log(r/d))
    and the outer band through the scalar r^(s(1-theta)).  Pre-splitting the
    bands makes each per-s assembly two vector operations.
    """

    def __init__(self, cloud: PointCloud, r: float, theta: float, m: int, variant: str = "full"):
        self.spec0 = KernelSpec(r, theta, 0.0, m, variant)
        self.n_points = len(cloud)
        d = cloud.pairwise_distances()
        r_, theta_, m_ = r, theta, float(m)
        if variant == "full" and theta_ == 1.0:
            variant = "box"
        self.variant = variant
        if variant == "box":
            base = np.ones_like(d)
            far = d >= r_
            np.divide(r_, d, out=base, where=far)
            np.power(base, m_, out=base, where=far)
            np.fill_diagonal(base, 1.0)
            base.setflags(write=False)
            self._box = base
            return
        rt = r_**theta_
        if variant == "truncated":
            mid = (d >= r_) & (d <= rt)
            self._beyond = d > rt
        else:
            mid = (d >= r_) & (d < rt)
            self._beyond = d >= rt
        ratio = np.ones_like(d)
        np.divide(r_, d, out=ratio, where=mid)
        self._log_ratio = np.log(ratio, out=ratio)  # exactly 0 off the middle band
        if variant == "truncated":
            self._outer = None
        else:
            outer = np.zeros_like(d)
            np.divide(rt, d, out=outer, where=self._beyond)
            np.power(outer, m_, out=outer, where=self._beyond)
            self._outer = outer

    def gram(self, s: float) -> np.ndarray:
        spec = self.spec0
        if self.variant == "box":
            return self._box
        out = np.exp(s * self._log_ratio)
        if self.variant == "truncated":
            out[self._beyond] = 0.0
        else:
            scale = spec.r ** (s * (1.0 - spec.theta))
            out[self._beyond] = scale * self._outer[self._beyond]
        np.fill_diagonal(out, 1.0)
        return out
