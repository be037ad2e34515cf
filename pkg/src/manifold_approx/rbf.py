"""Radial basis function approximation and the locally weighted average.

Three locally supported Gaussian-family kernels, plain interpolation
(solve the kernel Gram system at the centers), a polynomial-augmented
variant with moment side conditions, and the Gaussian weighted-average
baseline used for comparison runs.

Gram matrices of Gaussian kernels get ill-conditioned quickly, so the
solver falls back to a small ridge when the condition estimate blows up.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import as_points, squared_distances

KERNEL_KINDS = ("phi1", "phi2", "phi3")

_CONDITION_LIMIT = 1e12
_RIDGE_SCALE = 1e-10


def phi(kind: str, r, h: float):
    """Evaluate a kernel at radius r (scalar or array) with support width h.

    phi1(r) = exp(-(r/h)^2)
    phi2(r) = exp(-(r/h)^2) * (1 + r/h)
    phi3(r) = exp(-(r/h)^2) * (15 + 15 (r/h) + 6 (r/h)^2 + (r/h)^3)
    """
    if not (h > 0):
        raise ValueError(f"support width h must be positive, got {h}")
    s = np.asarray(r, dtype=np.float64) / h
    if np.any(s < 0):
        raise ValueError("radius must be non-negative")
    gauss = np.exp(-(s * s))
    if kind == "phi1":
        out = gauss
    elif kind == "phi2":
        out = gauss * (1.0 + s)
    elif kind == "phi3":
        out = gauss * (15.0 + 15.0 * s + 6.0 * s * s + s * s * s)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")
    return out if isinstance(r, np.ndarray) else float(out)


@dataclass
class RbfModel:
    """Fitted interpolant: value(x) = sum_j coeffs[j] * phi(||x - centers[j]||)."""

    kernel: str
    width: float
    centers: np.ndarray
    coeffs: np.ndarray  # (num_centers, codomain_dim)
    fit_residual: float = 0.0
    condition: float = 0.0


@dataclass
class RbfPolyModel:
    """Interpolant augmented with a polynomial tail and moment side conditions."""

    base: RbfModel
    poly_degree: int
    poly_coeffs: np.ndarray  # (num_monomials, codomain_dim)
    exponents: tuple = field(default_factory=tuple)


def _as_values(values, count: int) -> np.ndarray:
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.ndim != 2 or vals.shape[0] != count:
        raise ValueError(f"values must align with centers: expected {count} rows, got {vals.shape}")
    if not np.isfinite(vals).all():
        raise ValueError("values contain non-finite entries")
    return vals


def _gram(centers: np.ndarray, kind: str, h: float) -> np.ndarray:
    d = np.sqrt(squared_distances(centers, centers))
    return phi(kind, d, h)


def _solve_gram(gram: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, float]:
    """Solve gram @ x = rhs with a ridge fallback for bad conditioning."""
    cond = float(np.linalg.cond(gram))
    matrix = gram
    if not np.isfinite(cond) or cond > _CONDITION_LIMIT:
        ridge = _RIDGE_SCALE * np.trace(gram) / gram.shape[0]
        matrix = gram + ridge * np.eye(gram.shape[0])
    try:
        sol = np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"kernel system singular beyond regularization (cond~{cond:.3e})") from exc
    if not np.isfinite(sol).all():
        raise ValueError(f"kernel system produced non-finite coefficients (cond~{cond:.3e})")
    return sol, cond


def fit_rbf(centers, values, kind: str = "phi1", h: float = 1.0) -> RbfModel:
    """Interpolate the given values at the centers.

    All codomain components share one Gram factorization. The maximum
    training residual and the condition estimate are kept on the model.
    """
    ctr = as_points(centers, "centers")
    vals = _as_values(values, ctr.shape[0])
    if ctr.shape[0] > 1:
        d2 = squared_distances(ctr, ctr)
        np.fill_diagonal(d2, np.inf)
        if d2.min() == 0.0:
            raise ValueError("centers must be distinct")
    gram = _gram(ctr, kind, h)
    coeffs, cond = _solve_gram(gram, vals)
    residual = float(np.abs(gram @ coeffs - vals).max())
    return RbfModel(kernel=kind, width=float(h), centers=ctr, coeffs=coeffs,
                    fit_residual=residual, condition=cond)


def eval_rbf(model: RbfModel, z):
    """Evaluate at a single point (returns a codomain vector) or row-wise."""
    pts = np.asarray(z, dtype=np.float64)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != model.centers.shape[1]:
        raise ValueError(
            f"dimension mismatch: points have shape {np.shape(z)}, "
            f"centers have dim {model.centers.shape[1]}"
        )
    d = np.sqrt(squared_distances(pts, model.centers))
    out = phi(model.kernel, d, model.width) @ model.coeffs
    return out[0] if single else out


def monomial_exponents(dim: int, degree: int) -> tuple:
    """Exponent tuples of all monomials of total degree <= degree.

    Ordered by total degree, then by the deterministic order produced by
    combinations_with_replacement within each degree.
    """
    exps = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(dim), d):
            e = [0] * dim
            for v in combo:
                e[v] += 1
            exps.append(tuple(e))
    return tuple(exps)


def _poly_matrix(points: np.ndarray, exponents: tuple) -> np.ndarray:
    """(num_monomials, num_points) matrix of monomials evaluated at points."""
    rows = []
    for e in exponents:
        col = np.ones(points.shape[0])
        for j, p in enumerate(e):
            if p:
                col = col * points[:, j] ** p
        rows.append(col)
    return np.asarray(rows)


def fit_rbf_poly(centers, values, kind: str = "phi1", h: float = 1.0,
                 poly_degree: int = 0) -> RbfPolyModel:
    """Fit the polynomial-augmented form via the saddle-point system.

    Solves [[Gram, Poly^T], [Poly, 0]] [coeffs; poly_coeffs] = [values; 0],
    so kernel coefficients satisfy the moment conditions Poly @ coeffs = 0.
    Centers must be unisolvent for the requested polynomial degree.
    """
    ctr = as_points(centers, "centers")
    vals = _as_values(values, ctr.shape[0])
    exps = monomial_exponents(ctr.shape[1], poly_degree)
    poly = _poly_matrix(ctr, exps)
    npoly = poly.shape[0]
    if np.linalg.matrix_rank(poly) < npoly:
        raise ValueError(
            f"centers are not unisolvent for degree {poly_degree} "
            f"(polynomial block rank < {npoly})"
        )
    gram = _gram(ctr, kind, h)
    k = ctr.shape[0]
    saddle = np.zeros((k + npoly, k + npoly))
    saddle[:k, :k] = gram
    saddle[:k, k:] = poly.T
    saddle[k:, :k] = poly
    rhs = np.vstack([vals, np.zeros((npoly, vals.shape[1]))])
    sol, cond = _solve_gram(saddle, rhs)
    coeffs, alpha = sol[:k], sol[k:]
    residual = float(np.abs(gram @ coeffs + poly.T @ alpha - vals).max())
    base = RbfModel(kernel=kind, width=float(h), centers=ctr, coeffs=coeffs,
                    fit_residual=residual, condition=cond)
    return RbfPolyModel(base=base, poly_degree=poly_degree, poly_coeffs=alpha, exponents=exps)


def eval_rbf_poly(model: RbfPolyModel, z):
    """Evaluate the augmented interpolant at one point or row-wise."""
    pts = np.asarray(z, dtype=np.float64)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    base = eval_rbf(model.base, pts)
    tail = _poly_matrix(pts, model.exponents).T @ model.poly_coeffs
    out = base + tail
    return out[0] if single else out


def weighted_average(z, points, values, h: float):
    """Gaussian weighted mean of the values, weights exp(-||x_i - z||^2 / h^2).

    Stays inside the componentwise range of the values. If every weight
    underflows to zero the nearest point's value is returned with a warning.
    """
    pts = as_points(points)
    vals = _as_values(values, pts.shape[0])
    zv = np.asarray(z, dtype=np.float64).ravel()
    if zv.shape[0] != pts.shape[1]:
        raise ValueError(f"dimension mismatch: z has dim {zv.shape[0]}, points {pts.shape[1]}")
    if not (h > 0):
        raise ValueError(f"support width h must be positive, got {h}")
    d2 = ((pts - zv[None, :]) ** 2).sum(axis=1)
    w = np.exp(-d2 / (h * h))
    total = w.sum()
    if total == 0.0:
        warnings.warn("all weights underflowed; falling back to the nearest point's value")
        return vals[int(np.argmin(d2))].copy()
    return (w @ vals) / total


def model_to_json(model: RbfModel | RbfPolyModel) -> str:
    """Serialize a fitted model. Decimal encoding round-trips bit-exactly."""
    if isinstance(model, RbfPolyModel):
        doc = json.loads(model_to_json(model.base))
        doc["polyDegree"] = model.poly_degree
        doc["polyCoeffs"] = model.poly_coeffs.tolist()
        return json.dumps(doc)
    doc = {
        "kernel": model.kernel,
        "h": model.width,
        "centers": model.centers.tolist(),
        "coeffs": model.coeffs.tolist(),
    }
    return json.dumps(doc)


def model_from_json(text: str) -> RbfModel | RbfPolyModel:
    doc = json.loads(text)
    base = RbfModel(
        kernel=doc["kernel"],
        width=float(doc["h"]),
        centers=np.asarray(doc["centers"], dtype=np.float64),
        coeffs=np.asarray(doc["coeffs"], dtype=np.float64),
    )
    if "polyDegree" in doc:
        degree = int(doc["polyDegree"])
        exps = monomial_exponents(base.centers.shape[1], degree)
        return RbfPolyModel(
            base=base,
            poly_degree=degree,
            poly_coeffs=np.asarray(doc["polyCoeffs"], dtype=np.float64),
            exponents=exps,
        )
    return base
