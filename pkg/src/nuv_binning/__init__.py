"""
nuv-binning - Binning strategies for the normalized unexplained variance measure

Template matching with the nUV / matching-by-tone-mapping dissimilarity:
the measure itself, four binning strategies, first-order predictions of its
expected value and a Monte-Carlo harness comparing the strategies.
"""

__version__ = "0.1.0"
__author__ = "nuv-binning contributors"
__license__ = "MIT"

from .errors import (
    NuvError,
    DomainError,
    DegenerateVarianceError,
    InfeasibleParameterError,
    InfeasibleBinningError,
    InvariantViolationError,
    DegenerateModelError,
    GreedyConvergenceError,
    ConfigurationError,
    VectorFileError,
)
from .models import (
    Template,
    FullRankDecomposition,
    BinPartition,
    BinAssignment,
    CrossProductMatrix,
    GreedyConfig,
    GreedyResult,
    BinCountRules,
    NoiseModel,
    Prediction,
    DistortionModel,
    FunctionFamilySample,
    ExperimentConfig,
    CellResult,
    TrialRecord,
    AggregateResult,
    RunManifest,
    STRATEGY_EQW,
    STRATEGY_EQF,
    STRATEGY_KMEANS,
    STRATEGY_GREEDY,
    STRATEGIES,
    REGIME_GENERAL,
    REGIME_SPHERICAL,
    EQF_COORDINATES,
    EQF_VALUES,
)
from .measure import (
    population_variance,
    full_rank_decompose,
    assign_bins,
    bin_means,
    conditional_means,
    nuv,
    explained_variance,
    representation_error,
    hat_matrix,
)
from .binning import (
    eqw_binning,
    eqf_binning,
    eqf_coordinate_binning,
    kmeans_binning,
    greedy_binning,
    frobenius_objective,
    assignment_objective,
    bin_count_rules,
    resolve_bin_count,
    make_partition,
)
from .theory import (
    predict_noise,
    predict_distorted,
    predict_localized,
    predict_spherical,
    predict_corollary,
    discrimination_power,
    expected_discrimination_power,
)
from .distortion import (
    cross_from_model,
    estimate_cross,
    sample_distortion,
    random_general_model,
    spherical_model,
    gamma_family_sample,
    model_fingerprint,
    trial_generator,
)
from .statistics import paired_auc, mann_whitney_auc, mcnemar, mcnemar_matrix
from .experiments import sample_template, run_trial, run_experiment, aggregate
from .reporting import ReportGenerator

__all__ = [
    # Errors
    "NuvError",
    "DomainError",
    "DegenerateVarianceError",
    "InfeasibleParameterError",
    "InfeasibleBinningError",
    "InvariantViolationError",
    "DegenerateModelError",
    "GreedyConvergenceError",
    "ConfigurationError",
    "VectorFileError",

    # Models
    "Template",
    "FullRankDecomposition",
    "BinPartition",
    "BinAssignment",
    "CrossProductMatrix",
    "GreedyConfig",
    "GreedyResult",
    "BinCountRules",
    "NoiseModel",
    "Prediction",
    "DistortionModel",
    "FunctionFamilySample",
    "ExperimentConfig",
    "CellResult",
    "TrialRecord",
    "AggregateResult",
    "RunManifest",
    "STRATEGY_EQW",
    "STRATEGY_EQF",
    "STRATEGY_KMEANS",
    "STRATEGY_GREEDY",
    "STRATEGIES",
    "REGIME_GENERAL",
    "REGIME_SPHERICAL",
    "EQF_COORDINATES",
    "EQF_VALUES",

    # Measure
    "population_variance",
    "full_rank_decompose",
    "assign_bins",
    "bin_means",
    "conditional_means",
    "nuv",
    "explained_variance",
    "representation_error",
    "hat_matrix",

    # Binning
    "eqw_binning",
    "eqf_binning",
    "eqf_coordinate_binning",
    "kmeans_binning",
    "greedy_binning",
    "frobenius_objective",
    "assignment_objective",
    "bin_count_rules",
    "resolve_bin_count",
    "make_partition",

    # Theory
    "predict_noise",
    "predict_distorted",
    "predict_localized",
    "predict_spherical",
    "predict_corollary",
    "discrimination_power",
    "expected_discrimination_power",

    # Distortion
    "cross_from_model",
    "estimate_cross",
    "sample_distortion",
    "random_general_model",
    "spherical_model",
    "gamma_family_sample",
    "model_fingerprint",
    "trial_generator",

    # Experiments
    "paired_auc",
    "mann_whitney_auc",
    "mcnemar",
    "mcnemar_matrix",
    "sample_template",
    "run_trial",
    "run_experiment",
    "aggregate",
    "ReportGenerator",
]

# Package metadata
__description__ = "Binning strategies for the normalized unexplained variance template matching measure"
