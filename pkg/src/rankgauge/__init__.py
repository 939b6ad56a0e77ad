"""Simultaneous confidence intervals for ranks, with coverage rescaling."""

from .core import Method, Observations, RankCiResult, RankInterval, SetRank, set_rank_bounds, set_ranks, validate_observations
from .errors import (
    ConvergenceFailure,
    DuplicateId,
    EmptyInput,
    InvalidInput,
    NonFiniteValue,
    NonPositiveSigma,
    RankGaugeError,
    ResolutionExhausted,
)
from .rankability import RankabilityEstimate, estimated_rankability, true_rankability
from .rescaler import MethodSettings, RescaleResult, coverage_at, coverage_curve, rescale_alpha, worst_case_sigma_ordering
from .studentized_range import QuantileRequest, critical_value
from .tukey import tukey_rank_cis
from .zhang import ZhangConfig, zhang_simultaneous_cis

__all__ = [
    "ConvergenceFailure",
    "DuplicateId",
    "EmptyInput",
    "InvalidInput",
    "Method",
    "MethodSettings",
    "NonFiniteValue",
    "NonPositiveSigma",
    "Observations",
    "QuantileRequest",
    "RankCiResult",
    "RankGaugeError",
    "RankInterval",
    "RankabilityEstimate",
    "RescaleResult",
    "ResolutionExhausted",
    "SetRank",
    "ZhangConfig",
    "coverage_at",
    "coverage_curve",
    "critical_value",
    "estimated_rankability",
    "rescale_alpha",
    "set_rank_bounds",
    "set_ranks",
    "true_rankability",
    "tukey_rank_cis",
    "validate_observations",
    "worst_case_sigma_ordering",
    "zhang_simultaneous_cis",
]
