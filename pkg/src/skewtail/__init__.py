"""Tail dependence of the bivariate skew-t distribution."""

from .asymptotics import (
    CrossQuantileExpansion,
    IntegrationLimits,
    TailExpansion,
    cross_quantile_expansion,
    integration_limits,
    quantile_asymptotic,
    tail_constants,
)
from .errors import (
    BracketError,
    DegenerateFitError,
    DomainError,
    NumericalError,
    SamplerError,
    SkewTailError,
    ToleranceNotReached,
    UnreliableEstimateWarning,
)
from .model import (
    SamplePairs,
    SkewTParams,
    joint_pdf,
    marginal_cdf,
    marginal_pdf,
    marginal_quantile,
    marginal_skewness,
    read_samples_csv,
    sample,
)
from .numerics import QuadConfig, QuadResult, find_root_monotone, fit_line, integrate
from .special import log_gamma, student_t_cdf, student_t_pdf, student_t_quantile
from .tail import (
    RateConstants,
    RateFitResult,
    conditional_tail_cdf,
    copula_diag_derivative,
    empirical_lambda,
    fit_rate,
    joint_tail_probability,
    lambda_limit,
    lambda_of_u,
    rate_constants,
)

__version__ = "0.1.0"
