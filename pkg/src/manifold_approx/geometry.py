"""Point-cloud metric utilities.

Point clouds are plain float arrays of shape (count, dim), one point per
row. Everything here is a pure function over such arrays: the smoothed
norm used by the denoiser, the (median-based, outlier-robust) fill
distance, neighborhood-radius selection, a ball-counting density check,
and nearest-reference lookup.

Sizes stay desk-scale (a couple thousand points, ambient dimension below
a hundred), so pairwise scans are brute force by design.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Candidate multipliers scanned by neighborhood_radius: 1.0, 1.1, ..., 50.0.
# A fixed ascending grid keeps the "smallest satisfying c" reproducible.
RADIUS_CANDIDATES = np.arange(10, 501) / 10.0

_SUPPORT_FACTOR = 2.0 * np.sqrt(2.0)  # Gaussian support width per unit radius


def as_points(x, name: str = "points") -> np.ndarray:
    """Validate and return a (count, dim) float64 point array."""
    pts = np.asarray(x, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError(f"{name} must be a 2-D (count, dim) array, got shape {pts.shape}")
    if pts.shape[0] < 1 or pts.shape[1] < 1:
        raise ValueError(f"{name} must contain at least one point and one coordinate")
    if not np.isfinite(pts).all():
        raise ValueError(f"{name} contains non-finite coordinates")
    return pts


def squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All-pairs squared Euclidean distances, shape (len(a), len(b))."""
    a2 = (a * a).sum(axis=1)
    b2 = (b * b).sum(axis=1)
    d2 = a2[:, None] + b2[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


@dataclass(frozen=True)
class HRhoParams:
    """Parameters of the ball-counting density condition.

    h is the fill distance, rho the density bound, and k_max the largest
    integer radius multiplier checked.
    """

    h: float
    rho: float
    k_max: int = 4

    def __post_init__(self):
        if not (self.h > 0):
            raise ValueError(f"h must be positive, got {self.h}")
        if not (self.rho > 0):
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.k_max < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max}")


@dataclass(frozen=True)
class SupportSizes:
    """Neighborhood scales derived from a sample P and a subset-scale set Q.

    h0 is the fill distance of P, h0_hat = c1 * h0 the radius that puts at
    least nu = floor(|P| / |Q|) sample points in every ball centered on Q,
    and h1/h2 the Gaussian support widths for the attraction (Q vs P) and
    repulsion (Q vs Q) weights.
    """

    h0: float
    h0_hat: float
    c1: float
    h1: float
    h2: float
    nu: int


def h_eps_norm(x, eps: float) -> float:
    """Smoothed Euclidean norm sqrt(||x||^2 + eps).

    Strictly positive and differentiable everywhere, which is what makes
    the denoiser's median-style cost smooth at coincidence.
    """
    if not (eps > 0):
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(x).all():
        raise ValueError("h_eps_norm: input contains non-finite values")
    return float(np.sqrt(np.dot(x.ravel(), x.ravel()) + eps))


def fill_distance(points) -> float:
    """Median over points of the distance to the nearest other point.

    The median (rather than the classical supremum) keeps the statistic
    robust to outliers. An even count averages the two middle order
    statistics. Raises if fewer than two points are given or if duplicate
    points drive the median to zero.
    """
    pts = as_points(points)
    if pts.shape[0] < 2:
        raise ValueError("fill_distance needs at least two points")
    d2 = squared_distances(pts, pts)
    np.fill_diagonal(d2, np.inf)
    nearest = np.sqrt(d2.min(axis=1))
    h0 = float(np.median(nearest))
    if h0 == 0.0:
        raise ValueError("fill_distance is zero: input is degenerate (duplicate points dominate)")
    return h0


def neighborhood_radius(points, queries, nu: int) -> tuple[float, float]:
    """Smallest grid multiplier c so every ball B(q, c*h0) holds >= nu points.

    Returns (c1, h0_hat) where h0_hat = c1 * fill_distance(points). Balls
    are closed and count a query itself when it belongs to the sample. The
    candidate multipliers are scanned ascending over RADIUS_CANDIDATES;
    if even the largest fails, the worst query is reported.
    """
    pts = as_points(points)
    qry = as_points(queries, "queries")
    if pts.shape[1] != qry.shape[1]:
        raise ValueError(
            f"dimension mismatch: points have dim {pts.shape[1]}, queries {qry.shape[1]}"
        )
    if nu < 1:
        raise ValueError(f"nu must be >= 1, got {nu}")
    if nu > pts.shape[0]:
        raise ValueError(f"nu={nu} exceeds the number of available points ({pts.shape[0]})")
    h0 = fill_distance(pts)
    d2 = squared_distances(qry, pts)
    # nu-th smallest distance per query: the ball must reach at least this far.
    kth = np.sqrt(np.partition(d2, nu - 1, axis=1)[:, nu - 1])
    worst = int(np.argmax(kth))
    c_needed = kth[worst] / h0
    idx = int(np.searchsorted(RADIUS_CANDIDATES, c_needed, side="left"))
    if idx >= len(RADIUS_CANDIDATES):
        raise ValueError(
            f"no candidate multiplier up to {RADIUS_CANDIDATES[-1]} captures {nu} points "
            f"around query {worst} (radius {kth[worst]:.6g} needed, fill distance {h0:.6g})"
        )
    c1 = float(RADIUS_CANDIDATES[idx])
    return c1, c1 * h0


def support_sizes(points, queries) -> SupportSizes:
    """Derive the attraction/repulsion support widths for a (P, Q) pair.

    h1 widens the ball radius that guarantees nu = floor(|P|/|Q|) sample
    points per query; h2 applies the same construction to Q against itself
    with nu = 1, i.e. h2 = support factor times the fill distance of Q.
    """
    pts = as_points(points)
    qry = as_points(queries, "queries")
    if qry.shape[0] < 2:
        raise ValueError("support_sizes needs at least two query points")
    if pts.shape[0] < qry.shape[0]:
        raise ValueError(
            f"expected at least as many points ({pts.shape[0]}) as queries ({qry.shape[0]})"
        )
    nu = pts.shape[0] // qry.shape[0]
    c1, h0_hat = neighborhood_radius(pts, qry, nu)
    h0 = h0_hat / c1
    _, h0_hat_q = neighborhood_radius(qry, qry, 1)
    return SupportSizes(
        h0=h0,
        h0_hat=h0_hat,
        c1=c1,
        h1=_SUPPORT_FACTOR * h0_hat,
        h2=_SUPPORT_FACTOR * h0_hat_q,
        nu=nu,
    )


def check_h_rho(points, params: HRhoParams, probes) -> tuple[bool, dict | None]:
    """Check the ball-counting density bound #(P in B(y, k*h)) <= rho * k^n.

    The exponent n is the ambient dimension. Probe centers are supplied by
    the caller; the check runs every probe against k = 1..k_max and returns
    (True, None) or (False, report) with the first violation found.
    """
    pts = as_points(points)
    prb = as_points(probes, "probes")
    if pts.shape[1] != prb.shape[1]:
        raise ValueError("probes must match the ambient dimension of the points")
    n = pts.shape[1]
    d2 = squared_distances(prb, pts)
    for k in range(1, params.k_max + 1):
        radius2 = (k * params.h) ** 2
        counts = (d2 <= radius2).sum(axis=1)
        bound = params.rho * float(k) ** n
        bad = np.nonzero(counts > bound)[0]
        if bad.size:
            first = int(bad[0])
            return False, {
                "probe_index": first,
                "k": k,
                "count": int(counts[first]),
                "bound": bound,
            }
    return True, None


def nearest_reference(z, references) -> int:
    """Index of the reference point closest to z; ties go to the lowest index."""
    ref = as_points(references, "references")
    z = np.asarray(z, dtype=np.float64).ravel()
    if z.shape[0] != ref.shape[1]:
        raise ValueError(
            f"dimension mismatch: query has dim {z.shape[0]}, references {ref.shape[1]}"
        )
    d2 = ((ref - z[None, :]) ** 2).sum(axis=1)
    return int(np.argmin(d2))
