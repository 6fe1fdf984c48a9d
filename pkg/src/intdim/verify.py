"""Machine checks of the quantitative inequalities behind the estimators.

Every check runs on concrete instances and reports a ``worst_margin``;
margins are normalised so that pass means worst_margin <= 0.  Unknown
dimensional constants are never hardcoded: checks either carry the explicit
dyadic slack c(n) = 4^n (any diameter-d set meets at most 2^n dyadic cells
of comparable side, squared for two-sided use) or fit the smallest
admissible constant and require it stable across scales.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .covers import CoverHierarchy, box_count, cover_sum_value
from .equilibrium import minimize_energy
from .geometry import (
    IfsSystem,
    PointCloud,
    generate_ifs_attractor,
    generate_sequence_set,
    interval_grid,
    product,
    square_grid,
)
from .kernels import GramFactory, KernelSpec, kernel_eval
from .profiles import ScaleSchedule, capacity_fixed_point

FLOAT_SLACK = 1e-9  # roundoff allowance on mathematically exact inequalities

MC_BATCH = 200_000


def dyadic_slack(n: int) -> float:
    return 4.0**n


@dataclass
class CheckReport:
    """One named check over many instances; pass iff worst_margin <= 0."""

    name: str
    instances: int
    worst_margin: float
    details: list = field(repr=False, default_factory=list)

    @property
    def passed(self) -> bool:
        return self.worst_margin <= 0.0

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "instances": self.instances,
            "worst_margin": self.worst_margin,
            "pass": self.passed,
            "details": self.details,
        }


def _report(name, margins_details) -> CheckReport:
    margins = [m for m, _ in margins_details]
    details = [d for _, d in margins_details]
    worst = max(margins) if margins else -math.inf
    return CheckReport(name=name, instances=len(margins), worst_margin=worst, details=details)


def check_sum_lipschitz(cloud: PointCloud, r: float, theta: float, s_pairs) -> CheckReport:
    """Two-sided Lipschitz bound in s for restricted covering sums.

    On the dyadic family the per-cover argument holds verbatim with the
    realized diameter band [d_lo, d_hi], which sits inside [r, r^theta]
    whenever the band admits a dyadic level at all; the check is exact up to
    float roundoff.
    """
    hierarchy = CoverHierarchy(cloud, r, theta)
    d_lo, d_hi = hierarchy.band
    cache: dict[float, float] = {}

    def log_sum(s: float) -> float:
        if s not in cache:
            cache[s] = math.log(hierarchy.value(s))
        return cache[s]

    out = []
    for t, s in s_pairs:
        t, s = (float(t), float(s)) if t <= s else (float(s), float(t))
        delta = log_sum(s) - log_sum(t)
        lower = (s - t) * math.log(d_lo)
        upper = (s - t) * math.log(d_hi)
        margin = max(lower - delta, delta - upper) - FLOAT_SLACK
        out.append(
            (
                margin,
                {
                    "t": t,
                    "s": s,
                    "r": r,
                    "theta": theta,
                    "log_ratio": delta,
                    "band": hierarchy.band,
                    "band_fallback": hierarchy.band_fallback,
                },
            )
        )
    return _report("sum_lipschitz", out)


def check_capacity_lipschitz(
    cloud: PointCloud,
    r: float,
    theta: float,
    m: int,
    s_pairs,
    solver_tol: float = 1e-8,
) -> CheckReport:
    """C^{s,m} >= C^{t,m} >= r^{(s-t)(1-theta)} C^{s,m} for t <= s, within 10x solver tol."""
    factory = GramFactory(cloud, r, theta, m, "full")
    cache: dict[float, float] = {}

    def cap(s: float) -> float:
        if s not in cache:
            cache[s] = minimize_energy(factory.gram(s), tol=solver_tol).capacity
        return cache[s]

    allow = 10.0 * solver_tol
    out = []
    for t, s in s_pairs:
        t, s = (float(t), float(s)) if t <= s else (float(s), float(t))
        c_s, c_t = cap(s), cap(t)
        first = (c_t - c_s) / c_s  # requires C^s >= C^t
        second = (r ** ((s - t) * (1.0 - theta)) * c_s - c_t) / c_t
        margin = max(first, second) - allow
        out.append((margin, {"t": t, "s": s, "r": r, "theta": theta, "C_s": c_s, "C_t": c_t}))
    return _report("capacity_lipschitz", out)


def _cover_admissible(cloud: PointCloud, r: float) -> bool:
    return len(cloud) == 1 or box_count(cloud, r) < len(cloud)


def check_sandwich(
    cloud: PointCloud,
    theta: float,
    s: float,
    sched: ScaleSchedule,
    solver_tol: float = 1e-8,
    max_trend: float = 0.1,
) -> CheckReport:
    """Covering sums against capacities, both directions.

    Left: S >= r^s C / c(n) with the dyadic slack.  Right: the smallest
    constant A(r) with S <= A ceil(log2(diam/r) + 1) r^s C must show no
    trend in log(1/r): |least-squares slope| <= ``max_trend``.
    """
    n = cloud.ambient_dim
    scales = [r for r in sched.r_values if _cover_admissible(cloud, r)]
    if len(scales) < 3:
        raise ValueError("need at least three admissible scales to fit a trend")
    diam = max(cloud.diameter(), 1e-300)
    out = []
    log_a = []
    for r in scales:
        factory = GramFactory(cloud, r, theta, n, "full")
        cap = minimize_energy(factory.gram(s), tol=solver_tol).capacity
        cover = cover_sum_value(cloud, r, theta, s)
        left_margin = (
            math.log(cap) + s * math.log(r) - math.log(dyadic_slack(n))
        ) - math.log(cover) - FLOAT_SLACK
        d_factor = max(math.ceil(math.log2(max(diam / r, 1.0)) + 1.0), 1)
        log_a.append(math.log(cover) - math.log(d_factor) - s * math.log(r) - math.log(cap))
        out.append((left_margin, {"r": r, "S": cover, "capacity": cap, "log_A": log_a[-1]}))
    slope = float(np.polyfit(np.log([1.0 / r for r in scales]), log_a, 1)[0])
    out.append((abs(slope) - max_trend, {"trend_slope": slope, "scales": scales}))
    return _report("sandwich", out)


def _projection_norm_samples(x_norm: float, n: int, m: int, size: int, rng) -> np.ndarray:
    """|pi_V x| for ``size`` rotation-invariant draws of V in G(n, m)."""
    if m == 1:
        u = rng.standard_normal((size, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return x_norm * np.abs(u[:, 0])
    if m == n - 1:
        u = rng.standard_normal((size, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return x_norm * np.sqrt(np.maximum(0.0, 1.0 - u[:, 0] ** 2))
    # squared projected fraction of a fixed vector is Beta(m/2, (n-m)/2)
    frac = rng.beta(0.5 * m, 0.5 * (n - m), size=size)
    return x_norm * np.sqrt(frac)


def _mc_integral(integrand, x_norm, n, m, max_trials, rng, max_rel_se):
    """Adaptive Monte Carlo mean of integrand(|pi_V x|) to target relative SE."""
    total = 0.0
    total_sq = 0.0
    count = 0
    while count < max_trials:
        size = min(MC_BATCH, max_trials - count)
        vals = integrand(_projection_norm_samples(x_norm, n, m, size, rng))
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        count += size
        if count < 1000:
            continue
        mean = total / count
        if mean <= 0:
            continue
        var = max(total_sq / count - mean * mean, 0.0)
        rel_se = math.sqrt(var / count) / mean
        if rel_se <= max_rel_se:
            return mean, rel_se, count
    mean = total / count
    rel_se = math.inf if mean <= 0 else math.sqrt(max(total_sq / count - mean**2, 0.0) / count) / mean
    raise ValueError(
        f"standard error {rel_se:.2%} after {count} trials exceeds {max_rel_se:.0%} "
        f"at |x|={x_norm:g}; raise mc_trials"
    )


def _bracket_stability(per_r: dict, r_grid, slack: float):
    """Margins requiring finer-r ratio brackets to sit inside the coarsest one."""
    lo0, hi0 = per_r[r_grid[0]]
    margins = [(-math.inf, {"r": r_grid[0], "bracket": (lo0, hi0), "reference": True})]
    for rv in r_grid[1:]:
        lo, hi = per_r[rv]
        margin = max(lo0 * (1.0 - slack) - lo, hi - hi0 * (1.0 + slack))
        margins.append((margin, {"r": rv, "bracket": (lo, hi), "reference": (lo0, hi0)}))
    return margins


def check_kernel_comparison(
    x_samples,
    r,
    theta: float,
    s: float,
    m: int,
    n: int,
    mc_trials: int = 2_000_000,
    seed: int = 0,
    max_rel_se: float = 0.01,
) -> CheckReport:
    """Full kernel against the Grassmannian average of the truncated kernel.

    The two sides are comparable with constants depending only on (n, m, s):
    the bracket of ratios phi / integral observed at the coarsest r must
    contain every ratio at finer r, up to Monte Carlo slack.  Valid only for
    s < m; ``mc_trials`` caps the adaptive sample size per integral.
    """
    if not 0 <= s < m:
        raise ValueError("requires 0 <= s < m strictly; the comparison fails at s = m")
    if m >= n:
        raise ValueError("requires m < n")
    if mc_trials < 1000:
        raise ValueError("mc_trials must be at least 1000")
    r_grid = sorted((float(v) for v in np.atleast_1d(r)), reverse=True)
    rng = np.random.default_rng(seed)

    per_r = {}
    details = []
    for rv in r_grid:
        spec_full = KernelSpec(rv, theta, s, m, "full")
        spec_trunc = KernelSpec(rv, theta, s, m, "truncated")
        ratios = []
        for x_norm in x_samples:
            x_norm = float(x_norm)
            est, rel_se, used = _mc_integral(
                lambda norms: kernel_eval(norms, spec_trunc),
                x_norm, n, m, mc_trials, rng, max_rel_se,
            )
            ratio = kernel_eval(x_norm, spec_full) / est
            ratios.append(ratio)
            details.append(
                {"r": rv, "x": x_norm, "ratio": ratio, "rel_se": rel_se, "trials": used}
            )
        per_r[rv] = (min(ratios), max(ratios))

    report = _report("kernel_comparison", _bracket_stability(per_r, r_grid, 5.0 * max_rel_se))
    report.details.extend(details)
    return report


def check_slab_integral(
    x_samples,
    r,
    m: int,
    n: int,
    mc_trials: int = 8_000_000,
    seed: int = 0,
    max_rel_se: float = 0.01,
) -> CheckReport:
    """Probability of a thin projection against the box kernel.

    The gamma_{n,m}-probability that |pi_V x| <= r is comparable to
    min(1, (r/|x|)^m) with (n, m)-constants; bracket stability across r as in
    the kernel comparison.  For |x| <= r the probability is exactly 1 because
    projections contract.
    """
    if not 1 <= m < n:
        raise ValueError("requires 1 <= m < n")
    if mc_trials < 1000:
        raise ValueError("mc_trials must be at least 1000")
    r_grid = sorted((float(v) for v in np.atleast_1d(r)), reverse=True)
    rng = np.random.default_rng(seed)

    per_r = {}
    details = []
    for rv in r_grid:
        spec_box = KernelSpec(rv, 1.0, float(m), m, "box")
        ratios = []
        for x_norm in x_samples:
            x_norm = float(x_norm)
            if x_norm <= rv:
                ratios.append(1.0)
                details.append({"r": rv, "x": x_norm, "ratio": 1.0, "rel_se": 0.0, "trials": 0})
                continue
            est, rel_se, used = _mc_integral(
                lambda norms: (norms <= rv).astype(float),
                x_norm, n, m, mc_trials, rng, max_rel_se,
            )
            ratio = kernel_eval(x_norm, spec_box) / est
            ratios.append(ratio)
            details.append(
                {"r": rv, "x": x_norm, "ratio": ratio, "rel_se": rel_se, "trials": used}
            )
        per_r[rv] = (min(ratios), max(ratios))

    report = _report("slab_integral", _bracket_stability(per_r, r_grid, 5.0 * max_rel_se))
    report.details.extend(details)
    return report


def slab_probability_analytic(x_norm: float, r: float, n: int) -> float:
    """Closed-form slab probability for m = 1 and n in {2, 3}."""
    if x_norm <= r:
        return 1.0
    if n == 2:
        return (2.0 / math.pi) * math.asin(r / x_norm)
    if n == 3:
        return r / x_norm
    raise ValueError("analytic form implemented for n in {2, 3} only")


def check_monotonicity(
    cloud: PointCloud,
    theta_grid,
    m_list,
    sched: ScaleSchedule | None = None,
    slack: float = 0.02,
    solver_tol: float = 1e-8,
) -> CheckReport:
    """Capacity profiles nondecreasing in theta and in m within ``slack``."""
    sched = sched or ScaleSchedule.geometric()
    thetas = sorted(float(t) for t in theta_grid)
    ms = sorted(int(m) for m in m_list)
    est = {
        (theta, m): capacity_fixed_point(cloud, theta, m, sched, solver_tol=solver_tol)
        for theta in thetas
        for m in ms
    }
    out = []
    for m in ms:
        for t1, t2 in zip(thetas, thetas[1:]):
            margin = est[(t1, m)] - est[(t2, m)] - slack
            out.append(
                (margin, {"kind": "theta", "m": m, "from": t1, "to": t2,
                          "low": est[(t1, m)], "high": est[(t2, m)]})
            )
    for theta in thetas:
        for m1, m2 in zip(ms, ms[1:]):
            margin = est[(theta, m1)] - est[(theta, m2)] - slack
            out.append(
                (margin, {"kind": "m", "theta": theta, "from": m1, "to": m2,
                          "low": est[(theta, m1)], "high": est[(theta, m2)]})
            )
    return _report("monotonicity", out)


def check_truncated_lower_bound(
    cloud: PointCloud,
    r: float,
    theta: float,
    s: float,
    solver_tol: float = 1e-8,
) -> CheckReport:
    """Equilibrium mass under the truncated kernel bounds the covering sum below.

    With gamma the truncated-kernel equilibrium energy and F the support
    points whose potential stays within (1 + 10 tol) gamma, the quantity
    mu(F) r^s / gamma must not exceed the covering sum times the dyadic
    slack (the dyadic sum already dominates the unrestricted one, so the
    slack is pure headroom outside band-fallback situations).
    """
    n = cloud.ambient_dim
    factory = GramFactory(cloud, r, theta, n, "truncated")
    res = minimize_energy(factory.gram(s), tol=solver_tol)
    bound_pot = (1.0 + 10.0 * solver_tol) * res.energy
    on_support = res.weights > res.support_tolerance
    in_f = on_support & (res.potentials <= bound_pot)
    mass = float(res.weights[in_f].sum())
    lower = mass * r**s / bound_pot
    cover = cover_sum_value(cloud, r, theta, s)
    margin = math.log(max(lower, 1e-300)) - math.log(cover * dyadic_slack(n)) - FLOAT_SLACK
    detail = {
        "r": r,
        "theta": theta,
        "s": s,
        "mass": mass,
        "energy": res.energy,
        "lower_bound": lower,
        "cover_sum": cover,
        "margin_without_slack": math.log(max(lower, 1e-300)) - math.log(cover),
    }
    return _report("truncated_lower_bound", [(margin, detail)])


def canonical_suite() -> dict:
    """The standing test sets for the verification suite (sizes kept modest)."""
    return {
        "single_point": PointCloud([[0.5]]),
        "interval_grid": interval_grid(512),
        "cantor_depth8": generate_ifs_attractor(IfsSystem.cantor_middle_thirds(), 8),
        "f1": generate_sequence_set(1.0, 400),
        "f1xf1": product(generate_sequence_set(1.0, 30), generate_sequence_set(1.0, 30)),
        "square_grid": square_grid(25),
    }


def run_canonical_checks(
    seed: int = 0,
    pairs_per_set: int = 10,
    r_exponents=(4, 6, 8, 10),
    thetas=(0.3, 0.7, 1.0),
    mc_trials: int = 2_000_000,
    slab_mc_trials: int = 8_000_000,
    solver_tol: float = 1e-8,
) -> list[CheckReport]:
    """The full verification sweep used by the CLI ``verify`` command."""
    rng = np.random.default_rng(seed)
    suite = canonical_suite()
    reports = []

    with warnings.catch_warnings():
        # Lipschitz bounds stay exact below the sample separation; silence
        # the estimation-oriented saturation warning for these sweeps.
        warnings.simplefilter("ignore")
        for name, cloud in suite.items():
            n = cloud.ambient_dim
            for k in r_exponents:
                r = 2.0**-k
                for theta in thetas:
                    pairs = np.sort(rng.random((pairs_per_set, 2)) * n, axis=1)
                    rep = check_sum_lipschitz(cloud, r, theta, pairs)
                    rep.name = f"sum_lipschitz[{name},r=2^-{k},theta={theta}]"
                    reports.append(rep)
                    cap_pairs = np.sort(rng.random((pairs_per_set, 2)) * n, axis=1)
                    rep = check_capacity_lipschitz(cloud, r, theta, n, cap_pairs, solver_tol)
                    rep.name = f"capacity_lipschitz[{name},r=2^-{k},theta={theta}]"
                    reports.append(rep)

        sandwich_sched = ScaleSchedule.geometric(4, 10)
        for name, cloud in suite.items():
            if len(cloud) == 1:
                continue  # trend fit needs several informative scales
            rep = check_sandwich(cloud, 0.5, 0.5, sandwich_sched, solver_tol)
            rep.name = f"sandwich[{name}]"
            reports.append(rep)
            rep = check_truncated_lower_bound(cloud, 2.0**-6, 0.7, 0.4, solver_tol)
            rep.name = f"truncated_lower_bound[{name}]"
            reports.append(rep)

    for name in ("interval_grid", "f1xf1"):
        cloud = suite[name]
        rep = check_monotonicity(
            cloud,
            theta_grid=(0.25, 0.5, 0.75, 1.0),
            m_list=list(range(1, cloud.ambient_dim + 1)),
            solver_tol=solver_tol,
        )
        rep.name = f"monotonicity[{name}]"
        reports.append(rep)

    for n, m in ((2, 1), (3, 1), (3, 2)):
        r_grid = (2.0**-6, 2.0**-8)
        x_samples = sorted(
            set(branch_spanning_samples(r_grid[0], 0.5) + branch_spanning_samples(r_grid[1], 0.5))
        )
        rep = check_kernel_comparison(
            x_samples, r_grid, theta=0.5, s=0.5, m=m, n=n, mc_trials=mc_trials, seed=seed
        )
        rep.name = f"kernel_comparison[n={n},m={m}]"
        reports.append(rep)
        slab_x = sorted(
            {rv * f for rv in r_grid for f in (0.1, 0.5, 1.0, 3.0, 10.0)}
            | {10.0 * math.sqrt(rv) for rv in r_grid}
        )
        rep = check_slab_integral(slab_x, r_grid, m=m, n=n, mc_trials=slab_mc_trials, seed=seed)
        rep.name = f"slab_integral[n={n},m={m}]"
        reports.append(rep)

    return reports


def branch_spanning_samples(r: float, theta: float) -> list[float]:
    """|x| values hitting the inner, middle, and outer kernel branches."""
    rt = r**theta
    return [0.5 * r, 0.9 * r, 2.0 * r, math.sqrt(r * rt), 0.9 * rt, 2.0 * rt, 4.0 * rt]
