"""Matrix-weighted combination of observational and interventional linear effect estimates."""

from .errors import (
    DegenerateWeight,
    DimensionMismatch,
    ExcessiveFailures,
    InsufficientData,
    NoConvergence,
    SingularMoment,
)
from .linmodel import Dataset, FitResult, Regime, fit_lasso, fit_ols, fit_ridge
from .pipeline import EffectEstimate, EstimateOptions, estimate_effects
from .preprocess import PreprocessedPair, center_and_augment
from .scm import (
    Confounding,
    GroundTruth,
    ScmParams,
    ground_truth,
    sample_interventional,
    sample_observational,
    table1_params,
)
from .weighting import (
    EstimatorInputs,
    Penalty,
    Scheme,
    WeightMatrix,
    combine,
    cross_validate_lambda,
    delta_hat_plain,
    delta_hat_regularized,
    estimator_inputs,
    optimal_diagonal_weight,
    optimal_scalar_weight,
    optimal_weight_matrix,
    plugin_weight_matrix,
    rosenman_weight,
    weight_pooled,
    weight_ridge,
)

__version__ = "0.1.0"
