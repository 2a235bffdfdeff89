"""Constraint compliance: mapping the filter posterior into the feasible range.

An out-of-bounds posterior mean is replaced by the mean of the posterior
truncated to the feasible interval, computed from the one-dimensional
truncated standard Gaussian. The filter's own belief is deliberately left
untouched: only the copy handed to the estimators is constrained, so the
filter recursion never sees the truncation.
"""

import math
from dataclasses import dataclass

from . import kernels
from .sae import EkfBelief


@dataclass(frozen=True)
class AccuracyBounds:
    """Feasible accuracy interval; [0.5, 1.0] for a binary sensor."""

    lower: float = 0.5
    upper: float = 1.0

    def __post_init__(self):
        if not 0.5 <= self.lower < self.upper <= 1.0:
            raise ValueError(
                f"bounds must satisfy 0.5 <= lower < upper <= 1.0, "
                f"got [{self.lower}, {self.upper}]"
            )


@dataclass(frozen=True)
class TruncationResult:
    """Standardized limits, unit-Gaussian truncated mean and constrained value.

    For an in-bounds posterior the limits are still reported (infinite when
    the variance is zero) and ``accuracy`` equals the posterior mean.
    """

    lower_limit: float
    upper_limit: float
    standardized_mean: float
    accuracy: float


def truncated_mean(lower: float, upper: float) -> float:
    """Mean of a standard Gaussian truncated to (lower, upper).

    Strictly inside the interval except deep in one tail, where the closed
    form underflows and the nearer limit is returned instead.
    """
    if not (math.isfinite(lower) and math.isfinite(upper)):
        raise ValueError(f"limits must be finite, got [{lower}, {upper}]")
    if not lower < upper:
        raise ValueError(f"limits must satisfy lower < upper, got [{lower}, {upper}]")
    return kernels.truncated_mean(lower, upper)


def constrain(posterior: EkfBelief, bounds: AccuracyBounds) -> TruncationResult:
    """Constrained assumed accuracy for a posterior belief.

    In-bounds means pass through unchanged. Out-of-bounds means shift by the
    scaled truncated mean; a zero-variance out-of-bounds belief clamps to the
    nearest bound. The posterior itself is never modified.
    """
    mean = posterior.mean
    rho = posterior.variance**0.5
    if rho > 0.0:
        d_lower = (bounds.lower - mean) / rho
        d_upper = (bounds.upper - mean) / rho
        y = kernels.truncated_mean(d_lower, d_upper)
    else:
        d_lower, d_upper, y = float("-inf"), float("inf"), 0.0
    accuracy = kernels.constrain_accuracy(
        mean, posterior.variance, bounds.lower, bounds.upper
    )
    return TruncationResult(
        lower_limit=d_lower,
        upper_limit=d_upper,
        standardized_mean=y,
        accuracy=accuracy,
    )
