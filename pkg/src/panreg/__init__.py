"""Personalized angle (PAN) regression and the PAN-ridge combination.

The angle penalty ``lambda2 (x0'beta)^2 / (|x0|^2 |beta|^2)`` shrinks the
prediction for a specific covariate vector ``x0`` towards zero (or away from
it for negative ``lambda2``) by rotating the coefficient vector, giving
coefficients that are personal to ``x0``.
"""

from .core_math import (
    Dataset,
    HypersphericalCoords,
    center,
    cosine_similarity,
    from_hyperspherical,
    orthonormalize,
    standardize,
    to_hyperspherical,
)
from .estimators import (
    CoefficientVector,
    PanFit,
    ols_fit,
    pan_fit_2d,
    pan_fit_orthonormal,
    pan_predict,
    pan_ridge_fit_orthonormal,
    pan_ridge_prediction,
    ridge_fit,
    shrinkage_factor,
)
from .evaluation import EvaluationReport, loocv, per_observation_report, test_mse
from .exceptions import (
    ConvergenceError,
    DataError,
    DegenerateInputError,
    DomainError,
    NumericError,
    PanError,
    ParseError,
    RankError,
    SchemaError,
    TuningError,
)
from .optimizer import OptimizerConfig, fit_general, fit_general_batch, fit_personalized
from .simulation import SimulationConfig, SimulationReport, emit_table, run_study
from .theory import (
    TheoryInstance,
    inner_product_density,
    lambda1_star,
    mc_mse_curve,
    mse_derivative_at_zero,
    oracle_fridge_lambda,
    proportion_within,
)
from .tuning import TuningGrid, TuningResult, bootstrap_tune, estimate_sigma, oracle_tune

__version__ = "0.1.0"
