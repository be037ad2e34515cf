"""Denoising of manifold-sampled point clouds with attached function values,
and radial-basis-function approximation at new points."""

from .datasets import (
    GeneratedSet,
    add_uniform_noise,
    gen_cylinder2d,
    gen_cylinder_nd,
    gen_o2,
    gen_swiss_roll,
    generate,
    random_orthogonal,
)
from .geometry import (
    HRhoParams,
    SupportSizes,
    check_h_rho,
    fill_distance,
    h_eps_norm,
    nearest_reference,
    neighborhood_radius,
    support_sizes,
)
from .harness import ErrorReport, ExperimentConfig, error_report, run_experiment, run_preset
from .mlop import MlopConfig, balance_lambdas, bb_step, cost, gradient, init_q, run_mlop
from .pipeline import (
    DenoisedGraph,
    approximate_at,
    approximate_function,
    denoise_graph,
    embed_graph,
    split_graph,
)
from .rbf import (
    RbfModel,
    RbfPolyModel,
    eval_rbf,
    eval_rbf_poly,
    fit_rbf,
    fit_rbf_poly,
    model_from_json,
    model_to_json,
    phi,
    weighted_average,
)
from .sketch import SketchOperator, build_sketch, sketched_norm

__version__ = "0.1.0"
