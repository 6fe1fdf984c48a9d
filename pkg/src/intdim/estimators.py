"""Estimator-style interface over the functional core.

These classes follow the fit/attributes convention: construct with
hyperparameters, ``fit`` on an (N, n) array of points, read trailing
underscore attributes.  They compose with the usual ecosystem tooling
(``get_params`` / ``set_params`` / ``clone``).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .geometry import PointCloud
from .parallel import parallel_map
from .profiles import (
    DEFAULT_TAIL_WINDOW,
    DEFAULT_TOL_S,
    ScaleSchedule,
    cover_fixed_point,
    profile_curve,
)
from .projections import projection_experiment

DEFAULT_THETA_GRID = tuple(round(0.1 * k, 1) for k in range(1, 11))


def check_points(X) -> np.ndarray:
    """Validate an input point array: 2D, finite, non-empty float64."""
    X = check_array(X, dtype=np.float64, ensure_2d=False, force_all_finite=True)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise ValueError("need at least one point")
    return X


def as_cloud(X, descriptor: dict | None = None) -> PointCloud:
    """Coerce array-like input (or pass through a PointCloud) for fitting."""
    if isinstance(X, PointCloud):
        return X
    return PointCloud(check_points(X), descriptor or {"generator": "array"})


class _ScheduleMixin:
    def _schedule(self) -> ScaleSchedule:
        return ScaleSchedule.geometric(self.k_min, self.k_max, self.tail_window, self.mode)


class IntermediateDimensionEstimator(BaseEstimator, _ScheduleMixin):
    """Dimension of a point set across a band-exponent grid, by covering sums.

    For each theta in ``theta_grid`` the estimate interpolates between
    Hausdorff-like behaviour (small theta) and box-counting (theta = 1) by
    restricting cover diameters to [r, r^theta].

    Attributes after ``fit``: ``cloud_``, ``estimates_`` (one per theta),
    ``diagnostics_``.
    """

    def __init__(
        self,
        theta_grid=DEFAULT_THETA_GRID,
        mode: str = "lower",
        k_min: int = 4,
        k_max: int = 40,
        tail_window: int = DEFAULT_TAIL_WINDOW,
        tol_s: float = DEFAULT_TOL_S,
        workers: int = 1,
    ):
        self.theta_grid = theta_grid
        self.mode = mode
        self.k_min = k_min
        self.k_max = k_max
        self.tail_window = tail_window
        self.tol_s = tol_s
        self.workers = workers

    def fit(self, X, y=None):
        cloud = as_cloud(X)
        sched = self._schedule()
        thetas = tuple(float(t) for t in self.theta_grid)

        def run(theta):
            return cover_fixed_point(cloud, theta, sched, self.tol_s, full_output=True)

        results = parallel_map(run, thetas, self.workers)
        self.cloud_ = cloud
        self.theta_grid_ = thetas
        self.estimates_ = np.array([est for est, _ in results])
        self.diagnostics_ = [diag for _, diag in results]
        return self

    def box_dimension_(self) -> float:
        """Estimate at theta = 1 (requires 1.0 in the fitted grid)."""
        check_is_fitted(self, "estimates_")
        for theta, est in zip(self.theta_grid_, self.estimates_):
            if theta == 1.0:
                return float(est)
        raise ValueError("theta = 1 was not part of the fitted grid")


class DimensionProfileEstimator(BaseEstimator, _ScheduleMixin):
    """Capacity-route profile: the set's dimension as seen from m dimensions.

    Attributes after ``fit``: ``cloud_``, ``profile_`` (a DimensionProfile),
    ``estimates_``.
    """

    def __init__(
        self,
        m: int = 1,
        theta_grid=DEFAULT_THETA_GRID,
        mode: str = "lower",
        k_min: int = 4,
        k_max: int = 40,
        tail_window: int = DEFAULT_TAIL_WINDOW,
        tol_s: float = DEFAULT_TOL_S,
        solver_tol: float = 1e-8,
        workers: int = 1,
    ):
        self.m = m
        self.theta_grid = theta_grid
        self.mode = mode
        self.k_min = k_min
        self.k_max = k_max
        self.tail_window = tail_window
        self.tol_s = tol_s
        self.solver_tol = solver_tol
        self.workers = workers

    def fit(self, X, y=None):
        cloud = as_cloud(X)
        profile = profile_curve(
            cloud,
            self.m,
            self.theta_grid,
            self._schedule(),
            self.tol_s,
            self.solver_tol,
        )
        self.cloud_ = cloud
        self.profile_ = profile
        self.estimates_ = np.array(profile.estimates)
        return self


class ProjectionExperimentEstimator(BaseEstimator, _ScheduleMixin):
    """Random-subspace projection experiment against the m-profile.

    Fitting projects the cloud onto ``trials`` rotation-invariant subspaces,
    estimates each shadow's dimension, and records violations of the sure
    bound estimate <= profile + slack.

    Attributes after ``fit``: ``report_``, ``median_estimates_``,
    ``exceed_count_``.
    """

    def __init__(
        self,
        m: int = 1,
        trials: int = 20,
        theta_grid=(1.0,),
        mode: str = "lower",
        k_min: int = 4,
        k_max: int = 40,
        tail_window: int = DEFAULT_TAIL_WINDOW,
        slack: float = 0.07,
        seed: int = 0,
        solver_tol: float = 1e-8,
        workers: int = 1,
    ):
        self.m = m
        self.trials = trials
        self.theta_grid = theta_grid
        self.mode = mode
        self.k_min = k_min
        self.k_max = k_max
        self.tail_window = tail_window
        self.slack = slack
        self.seed = seed
        self.solver_tol = solver_tol
        self.workers = workers

    def fit(self, X, y=None):
        cloud = as_cloud(X)
        report = projection_experiment(
            cloud,
            self.m,
            self.trials,
            self.theta_grid,
            self._schedule(),
            seed=self.seed,
            slack=self.slack,
            solver_tol=self.solver_tol,
            workers=self.workers,
        )
        self.cloud_ = cloud
        self.report_ = report
        self.median_estimates_ = report.median_estimates()
        self.exceed_count_ = report.exceed_count
        return self
