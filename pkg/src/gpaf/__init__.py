"""Geometric preferential attachment with fitness: simulation and checks.

The package grows random graphs on the unit-area sphere whose new
vertices attach proportionally to (degree + delta) times a fitness
kernel of angular distance, computes the model's quantitative
predictions independently (limiting degree distribution, tail
exponent, expected total attraction, self-loop law, degree growth),
and verifies simulation against prediction, including a two-urn
coupling of perturbed process pairs.
"""

__version__ = "0.1.0"

from .kernels import (
    ConstantKernel,
    FitnessKernel,
    PowerLawKernel,
    RangeIndicatorKernel,
    TabulatedKernel,
    attractiveness_integral,
    kernel_from_json,
    kernel_report,
    kernel_to_json,
    solve_rho,
)
from .process import (
    GraphState,
    ProcessParams,
    RunResult,
    attachment_distribution,
    fast_sampler,
    grow_one_step,
    replica_seed,
    run,
    run_ensemble,
    total_attraction,
)
from .theory import (
    TheoryPrediction,
    limit_degree_distribution,
    powerlaw_exponent,
    predict,
    selfloop_degree_pmf,
)
from .graphstats import (
    DegreeHistogram,
    compare_empirical_theory,
    connected_components,
    degree_histogram,
    diameter,
    tail_exponent_fit,
)
from .coupling import CoupledRun, build_urns, joint_draw, mismatch_growth_fit, run_coupled

__all__ = [
    "__version__",
    "ConstantKernel",
    "FitnessKernel",
    "PowerLawKernel",
    "RangeIndicatorKernel",
    "TabulatedKernel",
    "attractiveness_integral",
    "kernel_from_json",
    "kernel_report",
    "kernel_to_json",
    "solve_rho",
    "GraphState",
    "ProcessParams",
    "RunResult",
    "attachment_distribution",
    "fast_sampler",
    "grow_one_step",
    "replica_seed",
    "run",
    "run_ensemble",
    "total_attraction",
    "TheoryPrediction",
    "limit_degree_distribution",
    "powerlaw_exponent",
    "predict",
    "selfloop_degree_pmf",
    "DegreeHistogram",
    "compare_empirical_theory",
    "connected_components",
    "degree_histogram",
    "diameter",
    "tail_exponent_fit",
    "CoupledRun",
    "build_urns",
    "joint_draw",
    "mismatch_growth_fit",
    "run_coupled",
]
