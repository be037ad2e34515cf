"""Data-adapted random linear sketching for cheap approximate norms.

High-dimensional distance computations degrade badly once noise spreads
over every coordinate. The sketch builds a column-orthonormal matrix S
from random combinations of the data itself (Gaussian mix of the sample,
then a QR), so that ||S^t x|| tracks ||x|| well for vectors living near
the sample's span while shrinking isotropic noise by roughly sqrt(m/n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import as_points
from .rng import normals, stream

DEFAULT_SKETCH_DIM = 20


@dataclass(frozen=True)
class SketchOperator:
    """Column-orthonormal n x m reducer plus the seed that produced it."""

    s_matrix: np.ndarray
    m: int
    seed: int

    @property
    def ambient_dim(self) -> int:
        return self.s_matrix.shape[0]


def default_sketch_dim(n: int, count: int) -> int:
    return min(n, count, DEFAULT_SKETCH_DIM)


def build_sketch(points, m: int, seed: int) -> SketchOperator:
    """Build the sketch operator for a point cloud.

    Draws a (count, m) standard-normal mixing matrix G from the seeded
    stream, forms B = P^t G (random combinations of the sample points) and
    keeps the orthonormal factor of its QR decomposition. Raises when B is
    rank-deficient, which means m exceeds what the data can support.
    """
    pts = as_points(points)
    count, n = pts.shape
    if not (1 <= m <= min(n, count)):
        raise ValueError(f"sketch dimension m={m} must satisfy 1 <= m <= min(n={n}, count={count})")
    g = normals(stream(seed, "sketch-gaussian"), (count, m))
    b = pts.T @ g
    q, r = np.linalg.qr(b)
    diag = np.abs(np.diag(r))
    scale = diag.max() if diag.size else 0.0
    if scale == 0.0 or diag.min() <= 1e-12 * scale:
        effective = int((diag > 1e-12 * scale).sum()) if scale > 0.0 else 0
        raise ValueError(
            f"sketch basis is rank-deficient ({effective} usable directions); "
            f"use a sketch dimension m <= {max(effective, 1)}"
        )
    return SketchOperator(s_matrix=q, m=m, seed=int(seed))


def sketched_norm(op: SketchOperator, x) -> float | np.ndarray:
    """||S^t x|| for a single vector or row-wise for a (count, n) array.

    Never exceeds the true Euclidean norm (the columns of S are
    orthonormal) and is exact for vectors inside the sketch span.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        if arr.shape[0] != op.ambient_dim:
            raise ValueError(
                f"dimension mismatch: vector has dim {arr.shape[0]}, sketch expects {op.ambient_dim}"
            )
        return float(np.linalg.norm(arr @ op.s_matrix))
    if arr.ndim == 2:
        if arr.shape[1] != op.ambient_dim:
            raise ValueError(
                f"dimension mismatch: rows have dim {arr.shape[1]}, sketch expects {op.ambient_dim}"
            )
        return np.linalg.norm(arr @ op.s_matrix, axis=1)
    raise ValueError("sketched_norm expects a vector or a 2-D array of row vectors")
