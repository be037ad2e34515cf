"""End-to-end flow: embed values, denoise, split, approximate at new points.

Pairing each sample point with its (rescaled) function value turns joint
point/value denoising into plain point-cloud denoising one dimension up:
run the denoiser on the stacked cloud, then split the result back into
cleaned points and cleaned values. New-point predictions interpolate the
cleaned values with an RBF whose centers are the cleaned points.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .geometry import as_points, fill_distance, neighborhood_radius, support_sizes
from .mlop import MlopConfig, clone_config, init_q_indices, run_mlop
from .rbf import eval_rbf, fit_rbf, weighted_average
from .sketch import build_sketch, default_sketch_dim

_SUPPORT_FACTOR = 2.0 * np.sqrt(2.0)

EVALUATOR_KINDS = ("phi1", "phi2", "phi3", "wavg")


@dataclass
class DenoisedGraph:
    """Cleaned points with the cleaned values aligned row by row."""

    points: np.ndarray
    values: np.ndarray


@dataclass
class DenoiseDetails:
    """Side products of a denoise run, mostly for diagnostics and reports."""

    initial: DenoisedGraph
    trace: list
    norm_factor: float
    h1: float
    h2: float
    indices: np.ndarray
    config: MlopConfig
    embedded_initial: np.ndarray | None = None
    embedded_final: np.ndarray | None = None


def _as_values(values, count: int) -> np.ndarray:
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.ndim != 2 or vals.shape[0] != count:
        raise ValueError(f"values must have {count} rows, got shape {vals.shape}")
    if not np.isfinite(vals).all():
        raise ValueError("values contain non-finite entries")
    return vals


def embed_graph(points, values) -> tuple[np.ndarray, float]:
    """Stack each point with its rescaled value vector.

    The value columns are multiplied by max|point coordinate| divided by
    max|value| so neither block dominates distance computations (factor 1
    for an identically zero value set). Returns the stacked cloud and the
    factor, which makes the split exact.
    """
    pts = as_points(points)
    vals = _as_values(values, pts.shape[0])
    max_p = float(np.abs(pts).max())
    max_f = float(np.abs(vals).max())
    if max_f == 0.0 or max_p == 0.0:
        factor = 1.0
    else:
        factor = max_p / max_f
    return np.hstack([pts, factor * vals]), factor


def split_graph(stacked, n: int, norm_factor: float) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of embed_graph: first n columns are points, the rest values."""
    arr = as_points(stacked, "stacked")
    if not (0 < n < arr.shape[1]):
        raise ValueError(f"cannot split dimension {arr.shape[1]} at n={n}")
    if not (norm_factor > 0):
        raise ValueError(f"norm_factor must be positive, got {norm_factor}")
    return arr[:, :n].copy(), arr[:, n:] / norm_factor


def denoise_graph(points, values, q_count: int, cfg: MlopConfig,
                  return_details: bool = False):
    """Denoise points and values jointly; returns the cleaned graph.

    Embeds, samples the initial moving set from the stacked cloud, derives
    the support widths there when the config leaves them unset (in the
    sketched metric when the config asks for it), runs the denoiser, and
    splits the result. With return_details=True also returns the initial
    sampled graph, the iteration trace and the effective parameters.
    """
    pts = as_points(points)
    cfg.validate(need_supports=False)
    if not (1 <= q_count <= pts.shape[0]):
        raise ValueError(f"q_count={q_count} must be in [1, {pts.shape[0]}]")
    stacked, factor = embed_graph(pts, values)
    idx = init_q_indices(stacked.shape[0], q_count, cfg.seed)
    q0 = stacked[idx].copy()

    run_cfg = cfg
    if cfg.h1 is None or cfg.h2 is None:
        base, subset = stacked, q0
        if cfg.use_sketch and cfg.sketch_support_sizes:
            m = cfg.sketch_dim
            if m is None:
                m = default_sketch_dim(stacked.shape[1], stacked.shape[0])
            op = build_sketch(stacked, m, cfg.seed)
            base, subset = stacked @ op.s_matrix, q0 @ op.s_matrix
        sizes = support_sizes(base, subset)
        run_cfg = clone_config(cfg,
                               h1=cfg.h1 if cfg.h1 is not None else sizes.h1,
                               h2=cfg.h2 if cfg.h2 is not None else sizes.h2)

    q_final, trace = run_mlop(stacked, q0, run_cfg)
    q_points, q_values = split_graph(q_final, pts.shape[1], factor)
    graph = DenoisedGraph(points=q_points, values=q_values)
    if not return_details:
        return graph
    p0, v0 = split_graph(q0, pts.shape[1], factor)
    details = DenoiseDetails(
        initial=DenoisedGraph(points=p0, values=v0),
        trace=trace,
        norm_factor=factor,
        h1=run_cfg.h1,
        h2=run_cfg.h2,
        indices=idx,
        config=run_cfg,
        embedded_initial=q0,
        embedded_final=q_final,
    )
    return graph, details


def rbf_support_width(points) -> float:
    """Default interpolation width: the repulsion-support rule on one set."""
    pts = as_points(points)
    _, h0_hat = neighborhood_radius(pts, pts, 1)
    return _SUPPORT_FACTOR * h0_hat


def approximate_at(graph: DenoisedGraph, new_points, kind: str = "phi1",
                   width: float | None = None) -> np.ndarray:
    """Predict values at new points from a (cleaned) graph.

    RBF kinds fit one interpolant on the graph and evaluate it everywhere;
    "wavg" computes the Gaussian weighted average per point with the fill
    distance of the centers as default width.
    """
    z = as_points(new_points, "new_points")
    if z.shape[1] != graph.points.shape[1]:
        raise ValueError(
            f"dimension mismatch: new points have dim {z.shape[1]}, "
            f"graph points {graph.points.shape[1]}"
        )
    if kind == "wavg":
        h = width if width is not None else fill_distance(graph.points)
        return np.vstack([weighted_average(row, graph.points, graph.values, h) for row in z])
    if kind not in EVALUATOR_KINDS:
        raise ValueError(f"unknown evaluator kind {kind!r}; expected one of {EVALUATOR_KINDS}")
    h = width if width is not None else rbf_support_width(graph.points)
    model = fit_rbf(graph.points, graph.values, kind, h)
    return np.atleast_2d(eval_rbf(model, z))


def approximate_function(points, values, q_count: int, new_points, cfg: MlopConfig,
                         kind: str = "phi1", width: float | None = None):
    """Full pipeline: denoise, then predict at the new points.

    Returns (denoised graph, predicted values at new_points).
    """
    graph = denoise_graph(points, values, q_count, cfg)
    return graph, approximate_at(graph, new_points, kind=kind, width=width)


def save_denoised(graph: DenoisedGraph, details: DenoiseDetails | None, out_dir) -> None:
    """Persist a denoised graph as two CSV files plus a JSON manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, arr in (("q_points.csv", graph.points), ("q_values.csv", graph.values)):
        with open(out / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in arr:
                writer.writerow([repr(float(v)) for v in row])
    manifest: dict = {"count": int(graph.points.shape[0]),
                      "n": int(graph.points.shape[1]),
                      "s": int(graph.values.shape[1])}
    if details is not None:
        manifest["normFactor"] = details.norm_factor
        manifest["h1"] = details.h1
        manifest["h2"] = details.h2
        manifest["seed"] = details.config.seed
        manifest["config"] = {k: v for k, v in asdict(details.config).items()}
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_denoised(in_dir) -> DenoisedGraph:
    src = Path(in_dir)

    def read(path):
        with open(path, newline="") as fh:
            return np.asarray([[float(v) for v in row] for row in csv.reader(fh) if row])

    return DenoisedGraph(points=read(src / "q_points.csv"), values=read(src / "q_values.csv"))
