"""Gaussian-kernel KLMS filtering with a fixed dictionary, and its convergence model."""

from .dictionary import Dictionary, coherence_threshold_for_size, validate
from .errors import (
    ConfigError,
    DimensionMismatchError,
    DivergedError,
    HorizonMismatchError,
    IllConditionedError,
    KlmsError,
    NonFiniteError,
    SingularMatrixError,
    UnstableError,
)
from .experiments import (
    EXPERIMENT_1,
    EXPERIMENT_2,
    Ar1Source,
    ExperimentConfig,
    FluidFlowSystem,
    LearningCurve,
    Tolerances,
    WienerPolySystem,
    compare,
    experiment1_dictionary,
    experiment2_dictionary,
    generate,
    monte_carlo,
    theory_pipeline,
)
from .filters import FilterState, StepRecord, kernelize, run
from .kernels import GaussianKernel
from .moments import (
    InputModel,
    QuadraticFormSpec,
    fourth_moment_entry,
    fourth_moment_matrix,
    kernel_correlation_entry,
    kernel_correlation_matrix,
    mgf_quadratic,
    weighted_norm_sq,
)
from .theory import (
    OptimalSolution,
    PredictedCurve,
    TheoryModel,
    build_theory_model,
    covariance_recursion,
    covariance_step_direct,
    covariance_transition,
    estimate_optimal,
    fourth_moment_tensor,
    mean_stability_bound,
    mean_weight_recursion,
    ms_stability,
    predict_curve,
    steady_state,
)

__version__ = "0.1.0"
