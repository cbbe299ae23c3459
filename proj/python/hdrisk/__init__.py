"""Out-of-sample risk estimates for penalized M-estimators."""

from ._hdrisk import (
    RESULT_CSV_HEADER,
    DegenerateFactor,
    DimensionMismatch,
    Error,
    NoClosedForm,
    NonPositiveDefinite,
    NotConverged,
    ValidationError,
    default_config,
    estimate,
    experiment_csv,
    fit,
    huber_scale_from_lambda_star,
    loss_eval,
    random_instance,
    run_experiment,
    selftest,
)

__all__ = [
    "RESULT_CSV_HEADER",
    "DegenerateFactor",
    "DimensionMismatch",
    "Error",
    "NoClosedForm",
    "NonPositiveDefinite",
    "NotConverged",
    "ValidationError",
    "default_config",
    "estimate",
    "experiment_csv",
    "fit",
    "huber_scale_from_lambda_star",
    "loss_eval",
    "random_instance",
    "run_experiment",
    "selftest",
]
