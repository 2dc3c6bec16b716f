"""Recovery of structured signals and sparse corruption from dithered, quantized measurements."""

from .model import (
    GroundTruth,
    MeasurementEnsemble,
    NoiseSpec,
    ParameterError,
    StructureSpec,
    derive_seed,
    generate_ground_truth,
    linear_observe,
    sample_matrix,
    sample_noise,
)
from .quantize import QuantizationScheme, observe, quantization_error_diagnostics, quantize_uniform, sample_dither
from .prox import L1Norm, NuclearNorm, norm_for, operator_norm, project_l1_ball, project_nuclear_ball, soft_threshold, svt
from .solve import (
    RecoverySolution,
    RegularizationPlan,
    SolverConfig,
    plan_lambdas,
    solve_constrained,
    solve_pbp,
    solve_unconstrained,
)
from .harness import ExperimentConfig, fit_loglog_slope, reproduce, run_sweep, run_trial

__version__ = "0.1.0"
