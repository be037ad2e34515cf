"""Command-line entry points: generate, denoise, approx, experiment."""

from __future__ import annotations

import argparse
import csv
import json
from pathlib import Path

import numpy as np

from . import datasets, harness, pipeline
from .mlop import MlopConfig


def _read_points(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    return np.asarray(rows, dtype=np.float64)


def _cmd_generate(args) -> None:
    kwargs = {"seed": args.seed, "noise": args.noise}
    if args.points is not None:
        kwargs["count"] = args.points
    if args.preset == "o2" and args.function:
        kwargs["function"] = args.function
    gs = datasets.generate(args.preset, **kwargs)
    datasets.save_generated(gs, args.out)
    print(f"wrote {gs.noisy_points.shape[0]} points "
          f"(dim {gs.noisy_points.shape[1]}) to {args.out}")


def _cmd_denoise(args) -> None:
    gs = datasets.load_generated(args.in_dir)
    cfg = MlopConfig(max_iters=args.iters, seed=args.seed,
                     use_sketch=args.sketch_dim != 0,
                     sketch_dim=args.sketch_dim or None)
    graph, details = pipeline.denoise_graph(gs.noisy_points, gs.noisy_values,
                                            args.qsize, cfg, return_details=True)
    pipeline.save_denoised(graph, details, args.out)
    print(f"denoised {args.qsize} points in {args.iters} iterations "
          f"(h1={details.h1:.4g}, h2={details.h2:.4g}) -> {args.out}")


def _cmd_approx(args) -> None:
    graph = pipeline.load_denoised(args.centers)
    points = _read_points(args.points)
    predicted = pipeline.approximate_at(graph, points, kind=args.model,
                                        width=args.width)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.atleast_2d(predicted):
            writer.writerow([repr(float(v)) for v in row])
    print(f"wrote {predicted.shape[0]} predictions to {args.out}")


def _cmd_experiment(args) -> None:
    if args.config:
        with open(args.config) as fh:
            docs = json.load(fh)
        if isinstance(docs, dict):
            docs = [docs]
        rows_all, artifacts = [], {}
        for doc in docs:
            doc.setdefault("seed", args.seed)
            cfg = harness.config_from_dict(doc)
            rows, art = harness.run_experiment(cfg)
            rows_all.extend(rows)
            artifacts[cfg.scenario] = art
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        harness.write_results(rows_all, out / "results.csv")
        with open(out / "report.json", "w") as fh:
            json.dump({"rows": rows_all}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        rows = rows_all
    else:
        rows, _ = harness.run_preset(args.preset, seed=args.seed, out_dir=args.out)
    for row in rows:
        print(f"{row['scenario']:>14} {row['evaluator']:>16} "
              f"maxRel={row['maxRelative']:.4g} rmse={row['rmse']:.4g}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manifold-approx",
        description="Denoise manifold-sampled point clouds with attached "
                    "function values and approximate the function at new points.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset to a directory")
    gen.add_argument("--preset", required=True, choices=sorted(datasets.GENERATORS))
    gen.add_argument("--noise", type=float, default=0.1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--points", type=int, default=None, help="override the point count")
    gen.add_argument("--function", default=None, help="test function for the o2 preset")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_generate)

    den = sub.add_parser("denoise", help="denoise a generated dataset")
    den.add_argument("--in", dest="in_dir", required=True)
    den.add_argument("--qsize", type=int, required=True)
    den.add_argument("--iters", type=int, default=150)
    den.add_argument("--sketch-dim", type=int, default=None,
                     help="sketch dimension (0 disables sketching)")
    den.add_argument("--seed", type=int, default=0)
    den.add_argument("--out", required=True)
    den.set_defaults(func=_cmd_denoise)

    app = sub.add_parser("approx", help="evaluate a model at new points")
    app.add_argument("--model", required=True, choices=pipeline.EVALUATOR_KINDS)
    app.add_argument("--centers", required=True, help="directory written by denoise")
    app.add_argument("--points", required=True, help="CSV of new points, one per row")
    app.add_argument("--width", type=float, default=None)
    app.add_argument("--out", required=True)
    app.set_defaults(func=_cmd_approx)

    exp = sub.add_parser("experiment", help="run a benchmark preset")
    exp.add_argument("--preset", choices=harness.PRESET_NAMES, default="o2-smooth")
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--config", default=None, help="JSON scenario config overriding the preset")
    exp.add_argument("--out", required=True)
    exp.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
