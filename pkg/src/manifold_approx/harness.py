"""Error metrics and the benchmark experiment runner.

An experiment generates a synthetic set, denoises it, evaluates a fixed
list of predictors at freshly drawn reference points and reports three
statistics per row: the maximum error relative to the largest reference
value, the RMSE, and the per-point error variance. Rows are emitted in a
fixed order and all randomness is derived from one master seed, so a
repeated run reproduces its results byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import datasets
from .geometry import as_points, squared_distances
from .mlop import MlopConfig
from .pipeline import DenoisedGraph, approximate_at, denoise_graph
from .rng import stream

RESULT_COLUMNS = ("scenario", "evaluator", "maxRelative", "rmse", "variance",
                  "denominator", "seed")


@dataclass
class ErrorReport:
    """Error statistics of one predictor against a clean reference."""

    max_relative: float
    rmse: float
    variance: float
    per_point: np.ndarray
    denominator: float


def error_report(predicted, eval_points, ref_points, ref_values) -> ErrorReport:
    """Compare predictions against the nearest clean reference values.

    Each prediction is matched to the reference point closest to its
    evaluation location; the per-point error is the L1 distance between
    the predicted and matched reference value. The relative denominator is
    the largest reference L1 value and is reported for auditability. No
    clamping: the relative maximum can exceed 1.
    """
    pred = np.asarray(predicted, dtype=np.float64)
    if pred.ndim == 1:
        pred = pred[:, None]
    pts = as_points(eval_points, "eval_points")
    refs = as_points(ref_points, "ref_points")
    ref_vals = np.asarray(ref_values, dtype=np.float64)
    if ref_vals.ndim == 1:
        ref_vals = ref_vals[:, None]
    if refs.shape[0] == 0 or ref_vals.shape[0] != refs.shape[0]:
        raise ValueError("reference points and values must be non-empty and aligned")
    if pred.shape[0] != pts.shape[0]:
        raise ValueError("predicted values and evaluation points must align")
    nearest = np.argmin(squared_distances(pts, refs), axis=1)
    errors = np.abs(pred - ref_vals[nearest]).sum(axis=1)
    denominator = float(np.abs(ref_vals).sum(axis=1).max())
    if denominator == 0.0:
        raise ValueError("degenerate reference: all values are zero")
    variance = float(errors.var(ddof=1)) if errors.size > 1 else 0.0
    return ErrorReport(
        max_relative=float(errors.max() / denominator),
        rmse=float(np.sqrt((errors * errors).mean())),
        variance=variance,
        per_point=errors,
        denominator=denominator,
    )


# Default evaluator rows, in the order tables report them.
DEFAULT_EVALUATORS = (
    ("phi1", "noisy"),
    ("phi1", "clean"),
    ("phi2", "clean"),
    ("phi3", "clean"),
    ("wavg", "noisy"),
    ("wavg", "clean"),
)


@dataclass
class ExperimentConfig:
    """One scenario: a generator, a denoiser setup and an evaluator list."""

    scenario: str
    generator: str
    generator_params: dict = field(default_factory=dict)
    noise: float = 0.1
    value_noise: float | None = None
    q_count: int = 55
    iterations: int = 150
    evaluators: tuple = DEFAULT_EVALUATORS
    num_new_points: int = 100
    seed: int = 0
    use_sketch: bool = True
    sketch_dim: int | None = None
    sketch_support_sizes: bool = True
    lambda_schedule: str = "first"

    def mlop_config(self) -> MlopConfig:
        return MlopConfig(
            max_iters=self.iterations,
            seed=self.seed,
            use_sketch=self.use_sketch,
            sketch_dim=self.sketch_dim,
            sketch_support_sizes=self.sketch_support_sizes,
            lambda_schedule=self.lambda_schedule,
        )


_CONFIG_KEYS = frozenset(ExperimentConfig.__dataclass_fields__)


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a config from a JSON document, rejecting unknown keys."""
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    doc = dict(doc)
    if "evaluators" in doc:
        doc["evaluators"] = tuple((str(m), str(c)) for m, c in doc["evaluators"])
    return ExperimentConfig(**doc)


def preset_scenarios(name: str, seed: int = 0) -> list[ExperimentConfig]:
    """Scenario lists for the bundled benchmark presets."""
    if name == "o2-smooth" or name == "o2-nonsmooth":
        fn = "nonsmooth" if "nonsmooth" in name else "smooth"
        return [ExperimentConfig(
            scenario=name, generator="o2",
            generator_params={"count": 500, "function": fn},
            noise=0.1, q_count=55, iterations=150, seed=seed,
        )]
    if name == "cyl2":
        return [ExperimentConfig(
            scenario=name, generator="cyl2",
            generator_params={"count": 800},
            noise=0.1, q_count=150, iterations=300, seed=seed,
        )]
    if name == "cyl6":
        return [ExperimentConfig(
            scenario=name, generator="cyl6",
            generator_params={"count": 1200},
            noise=0.2, q_count=460, iterations=300, seed=seed,
        )]
    if name == "swiss-noise":
        return [ExperimentConfig(
            scenario=f"swiss-a{amp}", generator="swiss",
            generator_params={"count": 800},
            noise=amp, q_count=200, iterations=300, seed=seed,
            evaluators=(("phi1", "noisy"), ("phi1", "clean")),
        ) for amp in (0.1, 0.2, 0.5, 0.7)]
    raise ValueError(f"unknown preset {name!r}")


PRESET_NAMES = ("o2-smooth", "o2-nonsmooth", "cyl2", "cyl6", "swiss-noise")


@dataclass
class ExperimentArtifacts:
    """Data behind one scenario's rows, kept for plot exports and tests."""

    generated: datasets.GeneratedSet
    cleaned: DenoisedGraph
    initial: DenoisedGraph
    details: object
    new_points: np.ndarray
    reports: dict


def _row(scenario: str, evaluator: str, report: ErrorReport | None, seed: int) -> dict:
    if report is None:
        return {"scenario": scenario, "evaluator": evaluator,
                "maxRelative": math.nan, "rmse": math.nan, "variance": math.nan,
                "denominator": math.nan, "seed": seed}
    return {"scenario": scenario, "evaluator": evaluator,
            "maxRelative": report.max_relative, "rmse": report.rmse,
            "variance": report.variance, "denominator": report.denominator,
            "seed": seed}


def run_experiment(cfg: ExperimentConfig):
    """Run one scenario; returns (rows, artifacts).

    Row order: the initial and final value errors at the moving set, then
    one row per configured evaluator over the freshly drawn new points.
    Rows that fail are emitted with NaN statistics rather than aborting
    the table.
    """
    gen_kwargs = dict(cfg.generator_params)
    gen_kwargs.update({"seed": cfg.seed, "noise": cfg.noise})
    if cfg.value_noise is not None:
        gen_kwargs["value_noise"] = cfg.value_noise
    gs = datasets.generate(cfg.generator, **gen_kwargs)

    cleaned, details = denoise_graph(gs.noisy_points, gs.noisy_values, cfg.q_count,
                                     cfg.mlop_config(), return_details=True)

    ref_points, ref_values = gs.clean_points, gs.clean_values
    rng = stream(cfg.seed, "new-points")
    pick = rng.choice(ref_points.shape[0],
                      size=min(cfg.num_new_points, ref_points.shape[0]), replace=False)
    new_points = ref_points[pick]

    rows, reports = [], {}
    for label, graph in (("q-initial", details.initial), ("q-final", cleaned)):
        report = error_report(graph.values, graph.points, ref_points, ref_values)
        reports[label] = report
        rows.append(_row(cfg.scenario, label, report, cfg.seed))

    for kind, centers in cfg.evaluators:
        label = f"{'rbf-' if kind != 'wavg' else ''}{kind}-{centers}"
        graph = details.initial if centers == "noisy" else cleaned
        try:
            predicted = approximate_at(graph, new_points, kind=kind)
            report = error_report(predicted, new_points, ref_points, ref_values)
        except Exception:
            report = None
        reports[label] = report
        rows.append(_row(cfg.scenario, label, report, cfg.seed))

    artifacts = ExperimentArtifacts(generated=gs, cleaned=cleaned,
                                    initial=details.initial, details=details,
                                    new_points=new_points, reports=reports)
    return rows, artifacts


def write_results(rows, path) -> None:
    """Write rows as CSV with a stable float encoding (repr round-trip)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([
                row["scenario"], row["evaluator"],
                repr(float(row["maxRelative"])), repr(float(row["rmse"])),
                repr(float(row["variance"])), repr(float(row["denominator"])),
                int(row["seed"]),
            ])


def _plot_export(artifacts: ExperimentArtifacts, scenario: str, out_dir: Path) -> None:
    """First-coordinate views of the point sets, unrotated where applicable."""
    gs = artifacts.generated
    k = 2 if gs.embedding_matrix is not None else 3
    k = min(k, gs.noisy_points.shape[1])

    def view(points):
        pts = points
        if gs.embedding_matrix is not None:
            pts = points @ gs.embedding_matrix
        return pts[:, :k]

    exports = {
        "points": (view(gs.noisy_points), gs.noisy_values),
        "q-initial": (view(artifacts.initial.points), artifacts.initial.values),
        "q-final": (view(artifacts.cleaned.points), artifacts.cleaned.values),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, (coords, values) in exports.items():
        with open(out_dir / f"{scenario}-{name}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"c{i}" for i in range(coords.shape[1])]
                            + [f"v{i}" for i in range(values.shape[1])])
            for crow, vrow in zip(coords, values):
                writer.writerow([repr(float(v)) for v in crow]
                                + [repr(float(v)) for v in vrow])


def run_preset(name: str, seed: int = 0, out_dir=None):
    """Run every scenario of a preset; optionally write the report files."""
    rows_all = []
    artifacts_all = {}
    for cfg in preset_scenarios(name, seed):
        rows, artifacts = run_experiment(cfg)
        rows_all.extend(rows)
        artifacts_all[cfg.scenario] = artifacts
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_results(rows_all, out / "results.csv")
        with open(out / "report.json", "w") as fh:
            json.dump({"preset": name, "seed": seed, "rows": rows_all}, fh,
                      indent=2, sort_keys=True)
            fh.write("\n")
        for scenario, artifacts in artifacts_all.items():
            _plot_export(artifacts, scenario, out / "plotdata")
    return rows_all, artifacts_all
