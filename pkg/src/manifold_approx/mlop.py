"""Locally-optimal-projection style denoiser for manifold-sampled clouds.

A small moving set Q is attracted to the weighted smoothed-median of the
noisy sample P while its points keep each other at distance through a
pairwise separation force. Gradient descent with per-point
Barzilai-Borwein steps drives the iteration; per-point balance factors
equalize the two force magnitudes at initialization.

All scalar norms feeding the weights and coefficients can optionally be
evaluated through a data-adapted sketch (see the sketch module), which is
what keeps the scheme usable when noise spreads over many ambient
coordinates. Direction vectors always stay full-dimensional.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .geometry import as_points, squared_distances
from .rng import normals, stream
from .sketch import SketchOperator, build_sketch, default_sketch_dim, sketched_norm

# Separation profiles: name -> (eta(r), d eta / d r), both vectorized.
ETA_PROFILES = {
    "inverse_cubic": (lambda r: 1.0 / (3.0 * r**3), lambda r: -1.0 / r**4),
}


@dataclass
class MlopConfig:
    """Hyperparameters of one denoiser run.

    h1 and h2 are the attraction/repulsion support widths; when left unset
    the pipeline derives them from the data (see pipeline.denoise_graph).
    gamma0 is the first-iteration step size; None picks
    0.1 * h1 / (1 + max initial gradient norm).
    """

    eps: float = 0.1
    h1: float | None = None
    h2: float | None = None
    eta_kind: str = "inverse_cubic"
    max_iters: int = 150
    grad_tol: float = 0.0
    gamma0: float | None = None
    seed: int = 0
    use_sketch: bool = False
    sketch_dim: int | None = None
    lambda_schedule: str = "first"  # "first" or "every"
    sketch_support_sizes: bool = True

    def validate(self, need_supports: bool = True) -> None:
        if not (self.eps > 0):
            raise ValueError(f"eps must be positive, got {self.eps}")
        if need_supports and not (self.h1 and self.h1 > 0 and self.h2 and self.h2 > 0):
            raise ValueError("support widths h1 and h2 must be set and positive")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.grad_tol < 0:
            raise ValueError(f"grad_tol must be >= 0, got {self.grad_tol}")
        if self.gamma0 is not None and not (self.gamma0 > 0):
            raise ValueError(f"gamma0 must be positive, got {self.gamma0}")
        if self.eta_kind not in ETA_PROFILES:
            raise ValueError(f"unknown eta profile {self.eta_kind!r}")
        if self.lambda_schedule not in ("first", "every"):
            raise ValueError(f"lambda_schedule must be 'first' or 'every', got {self.lambda_schedule!r}")


@dataclass
class TraceRow:
    iteration: int
    max_grad_norm: float
    mean_displacement: float
    cost_estimate: float


def trace_to_csv(trace, fileobj) -> None:
    """Write per-iteration diagnostics as CSV."""
    writer = csv.writer(fileobj)
    writer.writerow(["iter", "maxGradNorm", "meanDisplacement", "costEstimate"])
    for row in trace:
        writer.writerow([row.iteration, repr(row.max_grad_norm),
                         repr(row.mean_displacement), repr(row.cost_estimate)])


def _sketch_for(points: np.ndarray, cfg: MlopConfig) -> SketchOperator | None:
    if not cfg.use_sketch:
        return None
    count, n = points.shape
    m = cfg.sketch_dim if cfg.sketch_dim is not None else default_sketch_dim(n, count)
    return build_sketch(points, m, cfg.seed)


def _metric(points: np.ndarray, op: SketchOperator | None) -> np.ndarray:
    return points if op is None else points @ op.s_matrix


def _alpha_from_d2(d2, cfg: MlopConfig):
    """Attraction coefficients from squared distances (metric space)."""
    w = np.exp(-d2 / cfg.h1**2)
    heps2 = d2 + cfg.eps
    heps = np.sqrt(heps2)
    return w / heps * (1.0 - 2.0 * heps2 / cfg.h1**2)


def _beta_from_r(r, cfg: MlopConfig):
    """Repulsion coefficients from distances (metric space), r > 0 required."""
    eta, eta_prime = ETA_PROFILES[cfg.eta_kind]
    what = np.exp(-(r * r) / cfg.h2**2)
    return what / r * (np.abs(eta_prime(r)) + 2.0 * eta(r) * r / cfg.h2**2)


def attraction_coeff(qi, pj, cfg: MlopConfig) -> float:
    """Scalar weight alpha of the pair (q, p) in the attraction force.

    Satisfies (q - p) * alpha = grad_q [ ||q - p||_Heps * w ] with
    w = exp(-||q - p||^2 / h1^2); distances are taken in whatever space
    the vectors live in (pass sketched vectors for sketched coefficients).
    """
    cfg.validate()
    diff = np.asarray(qi, dtype=np.float64) - np.asarray(pj, dtype=np.float64)
    if not np.isfinite(diff).all():
        raise ValueError("attraction_coeff: non-finite input")
    return float(_alpha_from_d2(np.dot(diff, diff), cfg))


def repulsion_coeff(qi, qip, cfg: MlopConfig) -> float:
    """Scalar weight beta of the pair (q, q') in the separation force.

    Positive for every positive distance and satisfies
    (q - q') * beta = -grad_q [ eta(r) * w_hat ]. Raises at r = 0 where the
    separation profile blows up.
    """
    cfg.validate()
    diff = np.asarray(qi, dtype=np.float64) - np.asarray(qip, dtype=np.float64)
    r = float(np.linalg.norm(diff))
    if r == 0.0:
        raise ValueError("repulsion_coeff: coincident points (eta diverges at 0)")
    return float(_beta_from_r(r, cfg))


def _check_distinct(q_metric: np.ndarray) -> np.ndarray:
    d2 = squared_distances(q_metric, q_metric)
    np.fill_diagonal(d2, np.inf)
    if d2.min() == 0.0:
        raise ValueError("Q contains a coincident pair")
    return d2


def cost(points, q, lambdas, cfg: MlopConfig) -> float:
    """Total objective: smoothed-median attraction plus weighted separation.

    The separation half sums lambdas[i] * sum_{i' != i} eta(r) * w_hat over
    ordered pairs, exactly as the per-point balance factors weight it.
    """
    cfg.validate()
    p = as_points(points)
    qq = as_points(q, "q")
    lam = np.asarray(lambdas, dtype=np.float64).ravel()
    if lam.shape[0] != qq.shape[0]:
        raise ValueError("lambdas must have one entry per q point")
    op = _sketch_for(p, cfg)
    pm, qm = _metric(p, op), _metric(qq, op)
    d2 = squared_distances(qm, pm)
    attraction = float((np.sqrt(d2 + cfg.eps) * np.exp(-d2 / cfg.h1**2)).sum())
    if qq.shape[0] < 2:
        return attraction
    d2q = _check_distinct(qm)
    r = np.sqrt(d2q)
    eta, _ = ETA_PROFILES[cfg.eta_kind]
    pair = eta(r) * np.exp(-d2q / cfg.h2**2)
    np.fill_diagonal(pair, 0.0)
    return attraction + float(lam @ pair.sum(axis=1))


def per_point_cost(points, q, index: int, lam: float, cfg: MlopConfig) -> float:
    """Objective seen by a single moving point, everything else frozen.

    This is the function whose gradient the per-point update direction is:
    the point's own attraction terms plus lam times its separation terms.
    """
    cfg.validate()
    p = as_points(points)
    qq = as_points(q, "q")
    op = _sketch_for(p, cfg)
    pm, qm = _metric(p, op), _metric(qq, op)
    d2 = squared_distances(qm[index : index + 1], pm)[0]
    total = float((np.sqrt(d2 + cfg.eps) * np.exp(-d2 / cfg.h1**2)).sum())
    if qq.shape[0] > 1:
        d2q = squared_distances(qm[index : index + 1], qm)[0]
        d2q = np.delete(d2q, index)
        if d2q.min() == 0.0:
            raise ValueError("Q contains a coincident pair")
        r = np.sqrt(d2q)
        eta, _ = ETA_PROFILES[cfg.eta_kind]
        total += lam * float((eta(r) * np.exp(-d2q / cfg.h2**2)).sum())
    return total


def _force_sums(p, pm, q, qm, cfg: MlopConfig):
    """Attraction and separation force sums for every q point, full dimension."""
    d2 = squared_distances(qm, pm)
    alpha = _alpha_from_d2(d2, cfg)
    attraction = q * alpha.sum(axis=1)[:, None] - alpha @ p

    if q.shape[0] < 2:
        return attraction, np.zeros_like(q)
    d2q = _check_distinct(qm)
    r = np.sqrt(d2q)
    np.fill_diagonal(r, 1.0)  # placeholder; the diagonal is zeroed below
    beta = _beta_from_r(r, cfg)
    np.fill_diagonal(beta, 0.0)
    separation = q * beta.sum(axis=1)[:, None] - beta @ q
    return attraction, separation


def balance_lambdas(points, q, cfg: MlopConfig, op: SketchOperator | None = None) -> np.ndarray:
    """Per-point balance factors: minus the attraction/separation norm ratio.

    Non-positive by construction. A point with a vanishing separation sum
    gets factor 0 with a warning instead of a division error.
    """
    cfg.validate()
    p = as_points(points)
    qq = as_points(q, "q")
    if op is None:
        op = _sketch_for(p, cfg)
    attraction, separation = _force_sums(p, _metric(p, op), qq, _metric(qq, op), cfg)
    if op is None:
        attr_norm = np.linalg.norm(attraction, axis=1)
        sep_norm = np.linalg.norm(separation, axis=1)
    else:
        attr_norm = sketched_norm(op, attraction)
        sep_norm = sketched_norm(op, separation)
    lam = np.zeros(qq.shape[0])
    ok = sep_norm > 0.0
    if not ok.all():
        warnings.warn("isolated q points: balance factor set to 0 where the "
                      "separation sum vanishes")
    lam[ok] = -attr_norm[ok] / sep_norm[ok]
    return lam


def gradient(points, q, lambdas, cfg: MlopConfig) -> np.ndarray:
    """Per-point update directions: attraction sum minus lambda-weighted separation sum."""
    cfg.validate()
    p = as_points(points)
    qq = as_points(q, "q")
    lam = np.asarray(lambdas, dtype=np.float64).ravel()
    if lam.shape[0] != qq.shape[0]:
        raise ValueError("lambdas must have one entry per q point")
    op = _sketch_for(p, cfg)
    attraction, separation = _force_sums(p, _metric(p, op), qq, _metric(qq, op), cfg)
    return attraction - lam[:, None] * separation


def bb_step(dq, dg, fallback: float | None = None) -> float:
    """Barzilai-Borwein step <dq, dg> / <dg, dg>; fallback when dg vanishes."""
    dq = np.asarray(dq, dtype=np.float64).ravel()
    dg = np.asarray(dg, dtype=np.float64).ravel()
    den = float(np.dot(dg, dg))
    if den == 0.0:
        if fallback is None:
            raise ValueError("bb_step undefined: gradient difference is zero")
        return fallback
    return float(np.dot(dq, dg) / den)


def init_q_indices(count: int, size: int, seed: int) -> np.ndarray:
    if not (1 <= size <= count):
        raise ValueError(f"subset size {size} must be in [1, {count}]")
    rng = stream(seed, "init-q")
    return rng.choice(count, size=size, replace=False)


def init_q(points, size: int, seed: int) -> np.ndarray:
    """Draw the initial moving set: distinct rows of P, uniform without replacement."""
    p = as_points(points)
    return p[init_q_indices(p.shape[0], size, seed)].copy()


def _separate_coincident(q: np.ndarray, h2: float, rng, op: SketchOperator | None) -> np.ndarray:
    """Nudge apart any pair that coincides in the metric the forces use."""
    tol = 1e-12 * h2
    for _ in range(8):
        qm = _metric(q, op)
        d2 = squared_distances(qm, qm)
        np.fill_diagonal(d2, np.inf)
        i, j = np.unravel_index(int(np.argmin(d2)), d2.shape)
        if d2[i, j] > tol * tol:
            return q
        direction = normals(rng, (q.shape[1],))
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            direction = np.zeros(q.shape[1])
            direction[0] = 1.0
            norm = 1.0
        q[j] = q[j] + 1e-9 * h2 * (direction / norm)
    return q


def run_mlop(points, q0, cfg: MlopConfig):
    """Run the gradient-descent denoiser.

    Iterates every point of q0 until max_iters or until the largest
    per-point gradient norm drops to grad_tol. Balance factors follow
    cfg.lambda_schedule; BB step sizes are per point with gamma0 as the
    fallback. Returns (final q, trace rows).
    """
    cfg.validate()
    p = as_points(points)
    q = as_points(q0, "q0").copy()
    if p.shape[1] != q.shape[1]:
        raise ValueError("points and q0 must share the ambient dimension")
    count_q = q.shape[0]

    op = _sketch_for(p, cfg)
    pm = _metric(p, op)
    bbox = p.max(axis=0) - p.min(axis=0)
    diameter = float(np.linalg.norm(bbox))
    blowup = 1e6 * (diameter if diameter > 0 else 1.0)
    guard_rng = stream(cfg.seed, "separate")

    # The update must push q points apart, so the separation enters the
    # descent direction with the positive magnitude of the balance factor.
    lam_use = None
    gamma_fallback = cfg.gamma0
    # BB steps are unbounded where the landscape flattens; uncapped they let
    # points hop out of their attraction basin and drift. Displacement stays
    # below half the attraction support and gamma below 100x the fallback.
    step_cap = 0.5 * cfg.h1
    prev_q = prev_grad = None
    trace: list[TraceRow] = []

    for it in range(cfg.max_iters):
        if count_q > 1:
            q = _separate_coincident(q, cfg.h2, guard_rng, op)
        qm = _metric(q, op)
        attraction, separation = _force_sums(p, pm, q, qm, cfg)
        if lam_use is None or cfg.lambda_schedule == "every":
            if op is None:
                attr_norm = np.linalg.norm(attraction, axis=1)
                sep_norm = np.linalg.norm(separation, axis=1)
            else:
                attr_norm = sketched_norm(op, attraction)
                sep_norm = sketched_norm(op, separation)
            lam_use = np.zeros(count_q)
            ok = sep_norm > 0.0
            lam_use[ok] = attr_norm[ok] / sep_norm[ok]
        grad = attraction - lam_use[:, None] * separation
        grad_norms = np.linalg.norm(grad, axis=1)
        max_grad = float(grad_norms.max())
        cost_est = _cost_estimate(pm, qm, lam_use, cfg)
        if max_grad <= cfg.grad_tol:
            trace.append(TraceRow(it, max_grad, 0.0, cost_est))
            break
        if prev_q is None:
            if gamma_fallback is None:
                gamma_fallback = 0.1 * cfg.h1 / (1.0 + max_grad)
            gamma = np.full(count_q, gamma_fallback)
        else:
            dq = q - prev_q
            dg = grad - prev_grad
            den = (dg * dg).sum(axis=1)
            num = (dq * dg).sum(axis=1)
            gamma = np.divide(num, den, out=np.full(count_q, gamma_fallback), where=den > 0)
            gamma[gamma <= 0.0] = gamma_fallback
        np.minimum(gamma, 100.0 * gamma_fallback, out=gamma)
        over = gamma * grad_norms > step_cap
        gamma[over] = step_cap / grad_norms[over]
        prev_q, prev_grad = q, grad
        step = gamma[:, None] * grad
        q = q - step
        if not np.isfinite(q).all() or np.abs(q).max() > blowup:
            raise RuntimeError(
                f"denoiser diverged at iteration {it}: coordinates exceeded "
                f"{blowup:.3e} (max gradient norm {max_grad:.3e}); "
                "check the support widths and gamma0"
            )
        trace.append(TraceRow(it, max_grad, float(np.linalg.norm(step, axis=1).mean()), cost_est))
    return q, trace


def _cost_estimate(pm: np.ndarray, qm: np.ndarray, lam_use: np.ndarray, cfg: MlopConfig) -> float:
    """Objective value with the effective (positive) separation weights."""
    d2 = squared_distances(qm, pm)
    total = float((np.sqrt(d2 + cfg.eps) * np.exp(-d2 / cfg.h1**2)).sum())
    if qm.shape[0] > 1:
        d2q = squared_distances(qm, qm)
        r = np.sqrt(d2q)
        np.fill_diagonal(r, 1.0)  # placeholder; the diagonal is zeroed below
        eta, _ = ETA_PROFILES[cfg.eta_kind]
        pair = eta(r) * np.exp(-d2q / cfg.h2**2)
        np.fill_diagonal(pair, 0.0)
        total += float(lam_use @ pair.sum(axis=1))
    return total


def clone_config(cfg: MlopConfig, **updates) -> MlopConfig:
    return replace(cfg, **updates)
