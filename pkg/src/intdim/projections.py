"""Random subspaces, orthogonal projections, and projection experiments.

Subspaces are drawn from the rotation-invariant law on the Grassmannian
G(n, m) by orthonormalising Gaussian vectors; a sign convention makes frames
reproducible bit-for-bit from their seed.  The experiment projects a cloud
onto sampled subspaces, estimates the dimension of each shadow by the cover
route, and compares against the m-dimensional capacity profile of the
original cloud: the profile is a sure upper bound for every subspace and the
almost-sure value for generic ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import PointCloud
from .parallel import parallel_map
from .profiles import DimensionProfile, ScaleSchedule, cover_fixed_point, profile_curve

ORTHONORMAL_TOL = 1e-10
DEFAULT_EXCEED_SLACK = 0.07


@dataclass(frozen=True)
class SubspaceFrame:
    """Orthonormal basis of an m-dimensional subspace of R^n."""

    basis: np.ndarray  # (n, m), columns orthonormal
    seed: int | None = None

    def __post_init__(self):
        basis = np.ascontiguousarray(np.asarray(self.basis, dtype=float))
        if basis.ndim != 2:
            raise ValueError("basis must be an (n, m) matrix of column vectors")
        gram = basis.T @ basis
        if not np.allclose(gram, np.eye(basis.shape[1]), atol=ORTHONORMAL_TOL):
            raise ValueError("basis columns must be orthonormal to 1e-10")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def subspace_dim(self) -> int:
        return self.basis.shape[1]

    @staticmethod
    def axis(n: int, coords) -> "SubspaceFrame":
        """Coordinate subspace frame spanned by the given axes."""
        coords = [int(c) for c in np.atleast_1d(coords)]
        basis = np.zeros((n, len(coords)))
        for col, c in enumerate(coords):
            basis[c, col] = 1.0
        return SubspaceFrame(basis)


def sample_subspace(n: int, m: int, seed: int) -> SubspaceFrame:
    """Rotation-invariantly distributed orthonormal m-frame in R^n.

    Deterministic given the seed.  Columns carry the sign convention that
    their first component exceeding 1e-12 in modulus is positive, so reruns
    are bit-identical.  Nearly collinear Gaussian draws are redrawn a
    bounded number of times.
    """
    if not 1 <= m < n:
        raise ValueError("need 1 <= m < n")
    rng = np.random.default_rng(seed)
    for _ in range(8):
        raw = rng.standard_normal((n, m))
        q, r = np.linalg.qr(raw)
        if np.min(np.abs(np.diagonal(r))) < 1e-8:
            continue  # degenerate draw
        q = q * np.sign(np.diagonal(r))  # Haar correction
        for col in range(m):
            lead = np.flatnonzero(np.abs(q[:, col]) > 1e-12)
            if lead.size and q[lead[0], col] < 0:
                q[:, col] = -q[:, col]
        return SubspaceFrame(np.ascontiguousarray(q), seed=seed)
    raise RuntimeError(f"could not draw a non-degenerate frame for seed {seed}")


def project(cloud: PointCloud, frame: SubspaceFrame) -> PointCloud:
    """Coordinates of the cloud in the frame; colliding images deduplicate."""
    if frame.ambient_dim != cloud.ambient_dim:
        raise ValueError(
            f"frame lives in R^{frame.ambient_dim}, cloud in R^{cloud.ambient_dim}"
        )
    coords = cloud.points @ frame.basis
    return PointCloud(
        coords,
        {
            "generator": "projection",
            "parent": cloud.descriptor,
            "subspace_dim": frame.subspace_dim,
            "seed": frame.seed,
        },
    )


@dataclass
class ProjectionReport:
    """Outcome of a multi-frame projection experiment.

    ``per_frame_estimates`` has shape (frames, thetas).  ``exceed_count``
    counts (frame, theta) pairs whose estimate exceeds the profile by more
    than ``slack`` -- violations of the sure upper bound.
    """

    frames: list
    theta_grid: tuple[float, ...]
    per_frame_estimates: np.ndarray
    profile: DimensionProfile
    slack: float
    extra_frames: dict = field(default_factory=dict)

    @property
    def exceed_count(self) -> int:
        bound = np.asarray(self.profile.estimates) + self.slack
        return int(np.sum(self.per_frame_estimates > bound[None, :]))

    def median_estimates(self) -> np.ndarray:
        return np.median(self.per_frame_estimates, axis=0)

    def iqr(self) -> np.ndarray:
        lo, hi = np.percentile(self.per_frame_estimates, [25, 75], axis=0)
        return hi - lo

    def as_rows(self):
        """(frame_seed, theta, estimate, profile, violation) rows."""
        rows = []
        prof = dict(zip(self.theta_grid, self.profile.estimates))
        for frame, row in zip(self.frames, self.per_frame_estimates):
            for theta, est in zip(self.theta_grid, row):
                rows.append(
                    (frame.seed, theta, est, prof[theta], int(est > prof[theta] + self.slack))
                )
        for label, (frame, row) in sorted(self.extra_frames.items()):
            for theta, est in zip(self.theta_grid, row):
                rows.append((label, theta, est, prof[theta], int(est > prof[theta] + self.slack)))
        return rows


def projection_experiment(
    cloud: PointCloud,
    m: int,
    trials: int,
    theta_grid,
    sched: ScaleSchedule | None = None,
    seed: int = 0,
    slack: float = DEFAULT_EXCEED_SLACK,
    named_frames: dict | None = None,
    solver_tol: float = 1e-8,
    workers: int = 1,
) -> ProjectionReport:
    """Estimate dim of projections onto ``trials`` random subspaces.

    Each shadow is estimated by the cover route with the schedule re-bound
    to the shadow's own resolution; the original cloud's m-profile is the
    reference curve.  ``named_frames`` maps labels to frames checked
    alongside (e.g. known exceptional directions); they do not enter medians.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    sched = sched or ScaleSchedule.geometric()
    thetas = tuple(float(t) for t in theta_grid)
    profile = profile_curve(cloud, m, thetas, sched, solver_tol=solver_tol)

    frames = [sample_subspace(cloud.ambient_dim, m, seed + k) for k in range(trials)]

    def estimate_shadow(frame):
        shadow = project(cloud, frame)
        return [cover_fixed_point(shadow, theta, sched) for theta in thetas]

    estimates = np.array(parallel_map(estimate_shadow, frames, workers))

    extra = {}
    for label, frame in (named_frames or {}).items():
        row = np.array(estimate_shadow(frame))
        extra[label] = (frame, row)

    return ProjectionReport(
        frames=frames,
        theta_grid=thetas,
        per_frame_estimates=estimates,
        profile=profile,
        slack=slack,
        extra_frames=extra,
    )
