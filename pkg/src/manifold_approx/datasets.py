"""Seeded generators for the synthetic benchmark manifolds.

Four families embedded in a high-dimensional ambient space (default 60):
a rotation-group circle pushed through a random orthogonal matrix, a 2-D
cylinder spanned by three fixed direction vectors, a higher-dimensional
cylinder built over a hypersphere, and a Swiss roll. Each generator
returns clean and noise-perturbed copies of both the points and the
attached test-function values, plus the intrinsic parameters, so error
metrics always have an exact reference available.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import normals, stream


@dataclass
class GeneratedSet:
    """One synthetic draw: clean/noisy points and values plus provenance."""

    clean_points: np.ndarray
    noisy_points: np.ndarray
    params: np.ndarray
    clean_values: np.ndarray
    noisy_values: np.ndarray
    embedding_matrix: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


def random_orthogonal(n: int, seed: int) -> np.ndarray:
    """Orthogonal n x n matrix from the QR of a seeded Gaussian matrix."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    g = normals(stream(seed, "orthogonal"), (n, n))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs[None, :]


def add_uniform_noise(points, amplitude: float, seed: int) -> np.ndarray:
    """Perturb every coordinate by an independent U(-amplitude, amplitude) draw."""
    pts = np.asarray(points, dtype=np.float64)
    if amplitude < 0:
        raise ValueError(f"noise amplitude must be >= 0, got {amplitude}")
    if amplitude == 0.0:
        return pts.copy()
    rng = stream(seed, "uniform-noise")
    return pts + amplitude * (2.0 * rng.random(pts.shape) - 1.0)


def _noisy(arr: np.ndarray, amplitude: float, rng) -> np.ndarray:
    if amplitude == 0.0:
        return arr.copy()
    return arr + amplitude * (2.0 * rng.random(arr.shape) - 1.0)


def o2_smooth(theta: np.ndarray) -> np.ndarray:
    return 0.25 * (1.0 + np.sin(10.0 * theta))


def o2_nonsmooth(theta: np.ndarray) -> np.ndarray:
    return (1.0 + np.arccos(np.cos(10.0 * theta))) / 6.0


_O2_FUNCTIONS = {"smooth": o2_smooth, "nonsmooth": o2_nonsmooth}


def gen_o2(count: int = 500, n: int = 60, seed: int = 0, noise: float = 0.1,
           value_noise: float | None = None, function: str = "smooth") -> GeneratedSet:
    """Circle of 2x2 rotation matrices embedded by a random orthogonal map.

    Parameters are equally spaced angles on [-pi, pi) (half-open so the
    seam point is not duplicated). Every clean point has norm sqrt(2).
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    if n < 4:
        raise ValueError("ambient dimension must be >= 4")
    if function not in _O2_FUNCTIONS:
        raise ValueError(f"unknown test function {function!r}")
    theta = -np.pi + 2.0 * np.pi * np.arange(count) / count
    flat = np.zeros((count, n))
    flat[:, 0] = np.cos(theta)
    flat[:, 1] = -np.sin(theta)
    flat[:, 2] = np.sin(theta)
    flat[:, 3] = np.cos(theta)
    a = random_orthogonal(n, seed)
    clean = flat @ a.T
    values = _O2_FUNCTIONS[function](theta)[:, None]
    vnoise = noise if value_noise is None else value_noise
    noisy = _noisy(clean, noise, stream(seed, "o2-domain-noise"))
    noisy_values = _noisy(values, vnoise, stream(seed, "o2-value-noise"))
    return GeneratedSet(
        clean_points=clean,
        noisy_points=noisy,
        params=theta[:, None],
        clean_values=values,
        noisy_values=noisy_values,
        embedding_matrix=a,
        meta={"generator": "o2", "seed": seed, "noise": noise, "value_noise": vnoise,
              "n": n, "count": count, "function": function},
    )


def _grid_shape(total: int, aspect: float) -> tuple[int, int]:
    """Divisor pair (a, b) with a*b = total and a/b closest to aspect."""
    best = (total, 1)
    best_err = abs(total / 1 - aspect)
    for b in range(1, int(np.sqrt(total)) + 1):
        if total % b:
            continue
        a = total // b
        for pair in ((a, b), (b, a)):
            err = abs(pair[0] / pair[1] - aspect)
            if err < best_err:
                best, best_err = pair, err
    return best


def cylinder2d_value(t: np.ndarray, u: np.ndarray) -> np.ndarray:
    return 1.3 * (1.0 + np.sin(0.5 * u + 1.5 * t))


def gen_cylinder2d(count: int = 800, n: int = 60, radius: float = float(np.sqrt(2.0)),
                   t_range: tuple = (0.0, 2.0),
                   u_range: tuple = (0.1 * np.pi, 1.5 * np.pi),
                   seed: int = 0, noise: float = 0.1,
                   value_noise: float | None = None) -> GeneratedSet:
    """Two-dimensional cylinder: an axis direction plus a circular section.

    Points come from an equally spaced (t, u) grid whose shape is the
    divisor pair of `count` closest to a 2:1 aspect. The default radius
    sqrt(2) normalizes the circular coefficient to one.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    if n < 4:
        raise ValueError("ambient dimension must be >= 4")
    v1 = np.ones(n)
    v2 = np.zeros(n)
    v2[1], v2[2] = 1.0, -1.0
    v3 = np.zeros(n)
    v3[0], v3[3] = 1.0, -1.0
    nt, nu = _grid_shape(count, 2.0)
    t = np.linspace(t_range[0], t_range[1], nt)
    u = np.linspace(u_range[0], u_range[1], nu)
    tt, uu = [a.ravel() for a in np.meshgrid(t, u, indexing="ij")]
    clean = (tt[:, None] * v1[None, :]
             + (radius / np.sqrt(2.0))
             * (np.cos(uu)[:, None] * v2[None, :] + np.sin(uu)[:, None] * v3[None, :]))
    values = cylinder2d_value(tt, uu)[:, None]
    vnoise = noise if value_noise is None else value_noise
    noisy = _noisy(clean, noise, stream(seed, "cyl2-domain-noise"))
    noisy_values = _noisy(values, vnoise, stream(seed, "cyl2-value-noise"))
    return GeneratedSet(
        clean_points=clean,
        noisy_points=noisy,
        params=np.column_stack([tt, uu]),
        clean_values=values,
        noisy_values=noisy_values,
        meta={"generator": "cyl2", "seed": seed, "noise": noise, "value_noise": vnoise,
              "n": n, "count": count, "radius": radius,
              "grid": [nt, nu], "t_range": list(t_range), "u_range": list(u_range)},
    )


def _sphere_chain(u: np.ndarray, radius: float) -> np.ndarray:
    """Hypersphere coordinates x_k = R prod(sin u_<k) cos u_k, last one with sin."""
    count, d = u.shape
    x = np.empty((count, d))
    running = np.full(count, radius)
    for k in range(d - 1):
        x[:, k] = running * np.cos(u[:, k])
        running = running * np.sin(u[:, k])
    x[:, d - 1] = running * np.sin(u[:, d - 1])
    return x


def gen_cylinder_nd(count: int = 1200, n: int = 60, d: int = 6, radius: float = 1.5,
                    t_range: tuple = (0.0, 2.0),
                    u_range: tuple = (0.1 * np.pi, 0.6 * np.pi),
                    seed: int = 0, noise: float = 0.2,
                    value_noise: float | None = None) -> GeneratedSet:
    """Higher-dimensional cylinder over a hypersphere section.

    The axis direction has ones in the first d+1 coordinates; the sphere
    block is scaled by radius^2. Parameters (t, u_1..u_d) are sampled
    uniformly at random in their ranges; the value is the angle sum.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if n < d + 1:
        raise ValueError(f"ambient dimension must be >= {d + 1}")
    rng = stream(seed, "cylnd-params")
    t = t_range[0] + (t_range[1] - t_range[0]) * rng.random(count)
    u = u_range[0] + (u_range[1] - u_range[0]) * rng.random((count, d))
    sphere = _sphere_chain(u, radius)
    v0 = np.zeros(n)
    v0[: d + 1] = 1.0
    clean = t[:, None] * v0[None, :]
    clean[:, :d] += radius * radius * sphere
    values = u.sum(axis=1)[:, None]
    vnoise = noise if value_noise is None else value_noise
    noisy = _noisy(clean, noise, stream(seed, "cylnd-domain-noise"))
    noisy_values = _noisy(values, vnoise, stream(seed, "cylnd-value-noise"))
    return GeneratedSet(
        clean_points=clean,
        noisy_points=noisy,
        params=np.column_stack([t, u]),
        clean_values=values,
        noisy_values=noisy_values,
        meta={"generator": "cyl6", "seed": seed, "noise": noise, "value_noise": vnoise,
              "n": n, "count": count, "d": d, "radius": radius,
              "t_range": list(t_range), "u_range": list(u_range)},
    )


def gen_swiss_roll(count: int = 800, n: int = 60, seed: int = 0, noise: float = 0.1,
                   value_noise: float | None = None) -> GeneratedSet:
    """Swiss roll scaled by 1/10, with the spiral parameter as the target value.

    t_j = 2 + 8 j / count sweeps [2, 10); the second coordinate is uniform
    in [-6, 6] before scaling. Every clean point satisfies
    x^2 + z^2 = (t/10)^2 on coordinates 0 and 2.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    if n < 3:
        raise ValueError("ambient dimension must be >= 3")
    t = 2.0 + 8.0 * np.arange(count) / count
    y = -6.0 + 12.0 * stream(seed, "swiss-y").random(count)
    clean = np.zeros((count, n))
    clean[:, 0] = t * np.sin(t) / 10.0
    clean[:, 1] = y / 10.0
    clean[:, 2] = t * np.cos(t) / 10.0
    values = t[:, None].copy()
    vnoise = noise if value_noise is None else value_noise
    noisy = _noisy(clean, noise, stream(seed, "swiss-domain-noise"))
    noisy_values = _noisy(values, vnoise, stream(seed, "swiss-value-noise"))
    return GeneratedSet(
        clean_points=clean,
        noisy_points=noisy,
        params=t[:, None],
        clean_values=values,
        noisy_values=noisy_values,
        meta={"generator": "swiss", "seed": seed, "noise": noise, "value_noise": vnoise,
              "n": n, "count": count},
    )


GENERATORS = {
    "o2": gen_o2,
    "cyl2": gen_cylinder2d,
    "cyl6": gen_cylinder_nd,
    "swiss": gen_swiss_roll,
}


def generate(name: str, **kwargs) -> GeneratedSet:
    if name not in GENERATORS:
        raise ValueError(f"unknown generator {name!r}; expected one of {sorted(GENERATORS)}")
    return GENERATORS[name](**kwargs)


def value_function(meta: dict):
    """Callable mapping a params array back to the exact clean values."""
    name = meta["generator"]
    if name == "o2":
        fn = _O2_FUNCTIONS[meta.get("function", "smooth")]
        return lambda params: fn(params[:, 0])[:, None]
    if name == "cyl2":
        return lambda params: cylinder2d_value(params[:, 0], params[:, 1])[:, None]
    if name == "cyl6":
        return lambda params: params[:, 1:].sum(axis=1)[:, None]
    if name == "swiss":
        return lambda params: params[:, 0][:, None]
    raise ValueError(f"unknown generator {name!r}")


def _write_csv(path: Path, array: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.atleast_2d(array):
            writer.writerow([repr(float(v)) for v in row])


def _read_csv(path: Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    return np.asarray(rows, dtype=np.float64)


def save_generated(gs: GeneratedSet, out_dir) -> None:
    """Write one generated set as CSV files plus a JSON manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "points.csv", gs.noisy_points)
    _write_csv(out / "values.csv", gs.noisy_values)
    _write_csv(out / "params.csv", gs.params)
    _write_csv(out / "clean_points.csv", gs.clean_points)
    _write_csv(out / "clean_values.csv", gs.clean_values)
    with open(out / "manifest.json", "w") as fh:
        json.dump(gs.meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_generated(in_dir) -> GeneratedSet:
    src = Path(in_dir)
    with open(src / "manifest.json") as fh:
        meta = json.load(fh)
    embedding = None
    if meta.get("generator") == "o2":
        embedding = random_orthogonal(meta["n"], meta["seed"])
    return GeneratedSet(
        clean_points=_read_csv(src / "clean_points.csv"),
        noisy_points=_read_csv(src / "points.csv"),
        params=_read_csv(src / "params.csv"),
        clean_values=_read_csv(src / "clean_values.csv"),
        noisy_values=_read_csv(src / "values.csv"),
        embedding_matrix=embedding,
        meta=meta,
    )
