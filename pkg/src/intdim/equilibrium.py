"""Minimal-energy probability measures and capacities on point clouds.

Given a kernel Gram matrix G (symmetric, unit diagonal, entries in [0, 1]),
the discrete equilibrium problem is

    minimise  w' G w  over the probability simplex.

The reciprocal of the minimum is the capacity of the cloud for that kernel.
At any first-order optimum the potential vector p = G w satisfies
p_i >= energy for all i, with equality on the support; that inequality is
the optimality certificate every solve must exhibit before returning.

The solver is Frank-Wolfe with paired toward/away steps on the simplex
(the linear oracle is a coordinate argmin, so gap tracking is free).  These
Gram matrices are genuinely indefinite, but every swap direction e_i - e_j
has curvature 2 (1 - G_ij) >= 0, which keeps the line search exact and the
descent monotone.  An active-set polish accelerates the endgame: on the
final support the optimum solves the linear system G_SS z = 1 up to
scaling, so one solve often lands a machine-precision certificate long
before first-order steps alone would.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, solve as dense_solve
from scipy.sparse.linalg import LinearOperator, minres

from .errors import BudgetError, CertificateError
from .geometry import PointCloud
from .kernels import DEFAULT_GRAM_CAP, KernelSpec, gram_matrix

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 200_000
DEFAULT_SUPPORT_TOL = 1e-10

_DIRECT_SOLVE_CAP = 1200  # larger active sets go through MINRES


@dataclass
class EquilibriumResult:
    """Equilibrium weights with their optimality certificate.

    ``energy`` is w' G w, ``capacity`` its reciprocal, ``potentials`` the
    vector G w, and ``kkt_gap`` the relative certificate defect
    max(energy - min potential, 0) / energy.
    """

    weights: np.ndarray
    energy: float
    capacity: float
    potentials: np.ndarray
    kkt_gap: float
    support_tolerance: float
    iterations: int

    def support(self) -> np.ndarray:
        """Indices carrying more than ``support_tolerance`` of mass."""
        return np.flatnonzero(self.weights > self.support_tolerance)

    def to_json_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "energy": self.energy,
            "capacity": self.capacity,
            "potentials": self.potentials.tolist(),
            "kkt_gap": self.kkt_gap,
            "support_tolerance": self.support_tolerance,
            "iterations": self.iterations,
        }

    def dump_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)


def minimize_energy(
    gram: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    support_tolerance: float = DEFAULT_SUPPORT_TOL,
    start: np.ndarray | None = None,
) -> EquilibriumResult:
    """Minimise w' G w over the simplex to relative certificate gap ``tol``.

    ``start`` warm-starts the first attempt (weights from a nearby kernel
    parameter cut iteration counts drastically during bisection).  Restarts
    from perturbed points when a run stalls without certifying; raises
    ``CertificateError`` if no restart certifies.
    """
    gram = np.asarray(gram, dtype=float)
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise ValueError("gram must be a square matrix")
    if tol <= 0 or max_iters < 1:
        raise ValueError("tol and max_iters must be positive")
    n = gram.shape[0]
    if n == 1:
        w = np.ones(1)
        p = gram @ w
        return EquilibriumResult(w, float(p[0]), 1.0 / float(p[0]), p, 0.0, support_tolerance, 0)
    diag = np.diagonal(gram)
    if not np.allclose(diag, 1.0, atol=1e-9):
        raise ValueError("gram must have unit diagonal")

    rng = np.random.default_rng(0)
    if start is not None and start.shape == (n,) and start.min() >= 0 and start.sum() > 0:
        w0 = start / start.sum()
    else:
        w0 = np.full(n, 1.0 / n)
    last_gap = np.inf
    for attempt in range(3):
        result = _fw_away(gram, w0, tol, max_iters, support_tolerance)
        if result is not None:
            return result
        # perturbed restart: bias towards a random vertex mixture
        mix = rng.dirichlet(np.ones(n)) if n <= 4096 else rng.random(n)
        w0 = 0.5 * np.full(n, 1.0 / n) + 0.5 * mix / mix.sum()
        last_gap = _certificate_gap(gram, w0)[0]
    raise CertificateError(
        f"no certificate with relative gap <= {tol} after {max_iters} iterations "
        f"and 3 starts (last gap {last_gap:.3e})",
        gap=last_gap,
    )


def capacity(
    cloud: PointCloud,
    spec: KernelSpec,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    max_points: int = DEFAULT_GRAM_CAP,
) -> EquilibriumResult:
    """Equilibrium result for a cloud under a kernel spec."""
    if len(cloud) > max_points:
        raise BudgetError(f"{len(cloud)} points exceed the capacity cap {max_points}")
    return minimize_energy(gram_matrix(cloud, spec, max_points=max_points), tol, max_iters)


def _certificate_gap(gram, w):
    p = gram @ w
    energy = float(w @ p)
    gap = max(energy - float(p.min()), 0.0) / energy
    return gap, p, energy


def _finalize(gram, w, support_tolerance, iterations):
    w = np.maximum(w, 0.0)
    w /= w.sum()
    gap, p, energy = _certificate_gap(gram, w)
    return EquilibriumResult(
        weights=w,
        energy=energy,
        capacity=1.0 / energy,
        potentials=p,
        kkt_gap=gap,
        support_tolerance=support_tolerance,
        iterations=iterations,
    )


def _try_polish(gram, w, tol, support_tolerance, energy):
    polished = _active_set_polish(gram, w, tol, support_tolerance)
    if polished is None:
        return None
    w_c, p_c, e_c = polished
    gap_c = max(e_c - float(p_c.min()), 0.0) / e_c
    certified = gap_c <= tol and e_c <= energy * (1 + 1e-12)
    return w_c, p_c, e_c, certified


def _fw_away(gram, w0, tol, max_iters, support_tolerance):
    """Pairwise Frank-Wolfe: paired toward/away steps over the simplex.

    Each iteration moves mass from the active coordinate with the largest
    potential to the coordinate with the smallest one (the linear oracle of
    the simplex).  Along swap directions the quadratic has curvature
    2 (1 - G_ij) >= 0, so exact line search is always well defined even
    though the Gram matrices are indefinite, and the swap gap dominates the
    certificate gap.  An active-set polish runs on a backoff schedule and
    usually terminates benign instances with machine-precision certificates.
    """
    n = gram.shape[0]
    w = w0.copy()
    p = gram @ w
    energy = float(w @ p)
    start_support = int(np.count_nonzero(w))

    if n <= 2048 and start_support < n // 4:
        # warm starts with a small support: the face solve often closes it
        out = _try_polish(gram, w, tol, support_tolerance, energy)
        if out is not None and out[3]:
            return _finalize(gram, out[0], support_tolerance, 0)

    polish_interval = 500
    polish_at = polish_interval
    for it in range(max_iters):
        i = int(np.argmin(p))
        active = np.flatnonzero(w > 0)
        j = active[int(np.argmax(p[active]))]
        swap_gap = float(p[j]) - float(p[i])
        if swap_gap <= tol * energy:
            res = _finalize(gram, w, support_tolerance, it)
            if res.kkt_gap <= tol:
                return res
            # incremental potentials had drifted; resume from fresh ones
            w = res.weights.copy()
            p = res.potentials.copy()
            energy = res.energy
            continue
        if it >= polish_at:
            if active.size <= _DIRECT_SOLVE_CAP:
                out = _try_polish(gram, w, tol, support_tolerance, energy)
                if out is not None:
                    w_c, p_c, e_c, certified = out
                    if certified:
                        return _finalize(gram, w_c, support_tolerance, it)
                    if e_c < energy:
                        w, p, energy = w_c, p_c, e_c
                polish_interval = min(polish_interval * 2, 16000)
            polish_at = it + polish_interval

        curvature = 2.0 * (1.0 - float(gram[i, j]))
        raw = swap_gap / curvature if curvature > 1e-18 else float(w[j])
        step = min(max(raw, 0.0), float(w[j]))
        if step <= 0.0:
            break
        w[j] -= step
        w[i] += step
        p += step * (gram[:, i] - gram[:, j])
        energy += step * step * curvature - 2.0 * step * swap_gap
        if (it + 1) % 4096 == 0:
            w = np.maximum(w, 0.0)
            w /= w.sum()
            p = gram @ w
            energy = float(w @ p)

    res = _finalize(gram, w, support_tolerance, max_iters)
    if res.kkt_gap <= tol:
        return res
    out = _try_polish(gram, res.weights, tol, support_tolerance, res.energy)
    if out is not None and out[3]:
        return _finalize(gram, out[0], support_tolerance, max_iters)
    return None


def _solve_on_support(gram, idx):
    """Solve the stationarity system G[idx, idx] z = 1.

    The Gram matrices of these kernels are symmetric but indefinite, so the
    dense path uses a Bunch-Kaufman factorisation (with an SVD least-squares
    fallback for exactly singular duplicate blocks: the min-norm solution
    splits their weight evenly), and the iterative path uses MINRES.
    Returns None when nothing converges; callers treat candidates as
    suggestions and keep only energy-decreasing, certificate-checked ones.
    """
    k = idx.size
    n = gram.shape[0]
    ones = np.ones(k)
    if k <= _DIRECT_SOLVE_CAP:
        sub = gram[np.ix_(idx, idx)]
        try:
            return dense_solve(sub, ones, assume_a="sym")
        except LinAlgError:
            z, *_ = np.linalg.lstsq(sub, ones, rcond=None)
            return z
    if k == n:
        matvec = gram.__matmul__
        maxiter = max(60, min(400, 1_200_000 // n))
    elif k <= 4000:
        sub = gram[np.ix_(idx, idx)]
        matvec = sub.__matmul__
        maxiter = 400
    else:
        def matvec(x, idx=idx):
            xf = np.zeros(n)
            xf[idx] = x
            return (gram @ xf)[idx]
        maxiter = max(60, min(250, 1_200_000 // n))
    op = LinearOperator((k, k), matvec=matvec, dtype=float)
    z, info = minres(op, ones, rtol=1e-10, maxiter=maxiter)
    if info != 0:
        return None
    # MINRES reports success on least-squares solutions of inconsistent
    # systems too; verify the residual before trusting it.
    if np.linalg.norm(matvec(z) - ones) > 1e-7 * math.sqrt(k):
        return None
    return z


def _select_candidates(gram, order, short, cap):
    """Worst-potential violators, at most one per kernel-identical cluster.

    Batch-adding several points whose mutual kernel value is (numerically)
    one would make the support system singular; clusters get a single
    representative per round and the rest re-qualify later if still short.
    """
    accepted: list[int] = []
    for i in order:
        if not short[i]:
            continue
        if accepted and float(gram[i, accepted].max()) >= 1.0 - 1e-9:
            continue
        accepted.append(int(i))
        if len(accepted) >= cap:
            break
    return accepted


def _restricted_minimum(gram, idx, mu, budget):
    """Energy-guarded minimisation over the simplex face spanned by ``idx``.

    Lawson-Hanson style inner loop: solve the stationarity system on the
    face; while the target leaves the nonnegative cone, step from the
    current feasible ``mu`` to the first vanishing coordinate and drop it.
    Because the Gram matrices are indefinite, every move is checked for
    descent and saddle suggestions are rejected rather than followed.
    ``budget`` is a mutable one-element solve-call allowance.
    """
    n = gram.shape[0]

    def face_energy(idx_, mu_):
        w_ = np.zeros(n)
        w_[idx_] = mu_
        return float(w_ @ (gram @ w_))

    e_cur = face_energy(idx, mu)
    for _ in range(25):
        if budget[0] <= 0:
            return idx, mu, False
        budget[0] -= 1
        z = _solve_on_support(gram, idx)
        if z is None or not np.all(np.isfinite(z)) or z.sum() <= 0:
            return idx, mu, False
        z = z / z.sum()
        if np.all(z >= -1e-13):
            z = np.maximum(z, 0.0)
            z /= z.sum()
            if face_energy(idx, z) <= e_cur * (1.0 + 1e-12):
                return idx, z, True
            return idx, mu, False
        blocked = z <= 1e-15
        zero_block = blocked & (mu <= 1e-15)
        if np.any(zero_block):
            # contributes nothing and wants to be negative: discard outright
            keep = ~zero_block
            idx, mu = idx[keep], mu[keep]
            if idx.size == 0 or mu.sum() <= 0:
                return idx, mu, False
            mu = mu / mu.sum()
            continue
        steps = mu[blocked] / (mu[blocked] - z[blocked])
        alpha = min(max(float(steps.min()), 0.0), 1.0)
        trial = mu + alpha * (z - mu)
        keep = trial > 1e-15
        if not np.any(keep):
            return idx, mu, False
        trial_idx = idx[keep]
        trial_mu = trial[keep]
        trial_mu /= trial_mu.sum()
        e_new = face_energy(trial_idx, trial_mu)
        if e_new > e_cur * (1.0 + 1e-12):
            return idx, mu, False  # indefinite direction; bail out
        idx, mu, e_cur = trial_idx, trial_mu, e_new
    return idx, mu, False


def _active_set_polish(gram, w, tol, support_tolerance):
    """Active-set refinement: equalise potentials on a support guess.

    Alternates the restricted nonnegative solve with adding coordinates
    whose potential undercuts the energy.  Returns (weights, potentials,
    energy) for the best feasible point found; None if no solve succeeded.
    """
    n = gram.shape[0]
    idx = np.flatnonzero(w > max(support_tolerance, 1e-14))
    if idx.size == 0:
        idx = np.array([int(np.argmin(gram.sum(axis=0)))])
    mu = w[idx]
    mu = mu / mu.sum() if mu.sum() > 0 else np.full(idx.size, 1.0 / idx.size)
    best = None
    prev_energy = np.inf
    budget = [30]
    for _round in range(40):
        idx, mu, ok = _restricted_minimum(gram, idx, mu, budget)
        if not ok:
            return best
        w_c = np.zeros(n)
        w_c[idx] = mu
        p_c = gram @ w_c
        e_c = float(w_c @ p_c)
        if best is None or e_c < best[2]:
            best = (w_c, p_c, e_c)
        short = p_c < (1.0 - 0.5 * tol) * e_c
        if not np.any(short):
            return w_c, p_c, e_c
        order = np.argsort(p_c)
        if e_c < prev_energy * (1.0 - 1e-14):
            candidates = _select_candidates(gram, order, short, cap=max(16, idx.size // 2))
            grown = np.setdiff1d(np.asarray(candidates, dtype=idx.dtype), idx)
            if grown.size:
                prev_energy = e_c
                idx = np.concatenate([idx, grown])
                mu = np.concatenate([mu, np.zeros(grown.size)])
                srt = np.argsort(idx)
                idx, mu = idx[srt], mu[srt]
                continue
        # Batch adds stopped paying off (degenerate trades): force progress
        # with an exact line-search step toward the worst violator, which is
        # a strict descent direction whenever a short point exists.
        prev_energy = e_c
        c = int(order[0])
        denom = 1.0 - 2.0 * float(p_c[c]) + e_c
        step = (e_c - float(p_c[c])) / denom if denom > 1e-18 else 0.5
        step = min(max(step, 1e-12), 1.0)
        w_c = (1.0 - step) * w_c
        w_c[c] += step
        idx = np.flatnonzero(w_c > 1e-15)
        mu = w_c[idx]
        mu /= mu.sum()
    return best
