"""Particle-based Bayesian inference via kernel Stein transport along a tempered curve."""

from .diagnostics import MomentSummary, ess, moments, test_accuracy
from .dynamics import (
    AdagradParams,
    AdagradState,
    DiagnosticsRecord,
    Ensemble,
    RunResult,
    Schedule,
    Variant,
    adjusted_run,
    gradient_free_run,
    interp_score,
    logz_accumulate,
    run_variant,
    stein_transport_run,
    stein_transport_step,
    svgd_run,
    svgd_step,
    weighted_run,
)
from .errors import (
    ConfigError,
    DatasetFormatError,
    DegenerateEnsembleError,
    DimensionMismatchError,
    NumericalError,
    SteinflowError,
    UnsupportedKernelError,
)
from .kernels import KernelConfig, KernelFamily, median_bandwidth
from .stein import SolveOutput, ksd, ksd_gram, solve_phi, stein_apply, velocity
from .targets import (
    LogisticData,
    ReferenceMoments,
    TargetProblem,
    gaussian_conjugate,
    joker,
    load_dataset,
    logistic_regression,
    low_rank_mixture,
    synthetic_logistic,
)

__version__ = "0.1.0"

__all__ = [
    "AdagradParams", "AdagradState", "ConfigError", "DatasetFormatError",
    "DegenerateEnsembleError", "DiagnosticsRecord", "DimensionMismatchError",
    "Ensemble", "KernelConfig", "KernelFamily", "LogisticData", "MomentSummary",
    "NumericalError", "ReferenceMoments", "RunResult", "Schedule", "SolveOutput",
    "SteinflowError", "TargetProblem", "UnsupportedKernelError", "Variant",
    "adjusted_run", "ess", "gaussian_conjugate", "gradient_free_run", "interp_score",
    "joker", "ksd", "ksd_gram", "load_dataset", "logistic_regression",
    "logz_accumulate", "low_rank_mixture", "median_bandwidth", "moments",
    "run_variant", "solve_phi", "stein_apply", "stein_transport_run",
    "stein_transport_step", "svgd_run", "svgd_step", "synthetic_logistic",
    "test_accuracy", "velocity", "weighted_run",
]
