"""Stable quasi-likelihood estimation for pure-jump Levy-driven SDEs."""

from .errors import (
    DomainError,
    ModelViolationError,
    NumericError,
    OptimizationError,
    PartialFailureError,
    SimulationOverflowError,
    StableQLError,
    UsageError,
)
from .harness import Design, ExperimentConfig, preset_config, run_experiment, summarize
from .inference import StudentizedReport, confidence_intervals, studentize
from .llt import CfModel, RateFit, bessel_ratio, invert_density, l1_distance, rate_fit
from .models import MODEL_REGISTRY, ModelSpec, Theta, build_model
from .samplers import NoiseSpec, RngStream, sample_nig, sample_stable
from .sde import FinePath, ObservationSeries, simulate_fine, thin
from .sqlik import (
    FitResult,
    OptimizerConfig,
    fit,
    quasi_hessian,
    quasi_loglik,
    quasi_score,
    residuals,
)
from .stable_core import InfoConstants, KernelConfig, StableKernel, stable_tail_coefficient

__all__ = [
    "CfModel",
    "Design",
    "DomainError",
    "ExperimentConfig",
    "FinePath",
    "FitResult",
    "InfoConstants",
    "KernelConfig",
    "MODEL_REGISTRY",
    "ModelSpec",
    "ModelViolationError",
    "NoiseSpec",
    "NumericError",
    "ObservationSeries",
    "OptimizationError",
    "OptimizerConfig",
    "PartialFailureError",
    "RateFit",
    "RngStream",
    "SimulationOverflowError",
    "StableKernel",
    "StableQLError",
    "StudentizedReport",
    "Theta",
    "UsageError",
    "bessel_ratio",
    "build_model",
    "confidence_intervals",
    "fit",
    "invert_density",
    "l1_distance",
    "preset_config",
    "quasi_hessian",
    "quasi_loglik",
    "quasi_score",
    "rate_fit",
    "residuals",
    "run_experiment",
    "sample_nig",
    "sample_stable",
    "simulate_fine",
    "studentize",
    "summarize",
    "thin",
]

__version__ = "0.1.0"
