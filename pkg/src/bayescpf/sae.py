"""Scalar Kalman filtering of the assumed sensor accuracy.

The state transition adds the assumed drift to the mean and the squared
assumed diffusion to the variance. The measurement is the black count over
the current observation window, modeled through the Gaussian limit of the
count distribution with the moving-average informed estimate standing in for
the unknown fill ratio. Because the measurement map is affine in the
accuracy, the update is exact Bayes for a Gaussian prior; a small-count gate
skips updates where the Gaussian limit is untrustworthy.
"""

from dataclasses import dataclass
from typing import Tuple

from . import kernels

MEASUREMENT_VARIANCE_FLOOR = kernels.MEASUREMENT_VARIANCE_FLOOR


@dataclass(frozen=True)
class EkfBelief:
    """Mean and variance of the accuracy belief (support unconstrained)."""

    mean: float
    variance: float

    def __post_init__(self):
        if self.variance < 0.0:
            raise ValueError(f"variance must be >= 0, got {self.variance}")


@dataclass(frozen=True)
class AssumedDegradationParams:
    """Drift/diffusion the filter assumes, expressed per filter activation.

    The experiment configuration supplies per-control-step values and converts
    them here: over an activation period of ``T`` control steps the drift
    scales by ``T`` and the diffusion by ``sqrt(T)`` (the increment variance
    accumulates linearly).
    """

    drift: float = -5e-5
    diffusion: float = 1e-4 * 5**0.5

    def __post_init__(self):
        if self.diffusion < 0.0:
            raise ValueError(f"diffusion must be >= 0, got {self.diffusion}")


def predict(belief: EkfBelief, params: AssumedDegradationParams) -> EkfBelief:
    """Shift the mean by the assumed drift and grow the variance."""
    return EkfBelief(
        mean=belief.mean + params.drift,
        variance=belief.variance + params.diffusion * params.diffusion,
    )


def measurement_model(b: float, t: int, reference: float) -> Tuple[float, float]:
    """Expected black count for accuracy ``b`` and its Jacobian in ``b``."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if not 0.0 <= reference <= 1.0:
        raise ValueError(f"reference must be in [0, 1], got {reference}")
    return kernels.measurement_model(b, t, reference)


def gate_open(t: int, predicted_mean: float) -> bool:
    """Small-count rule: both expected class counts must reach five."""
    return kernels.gate_open(t, predicted_mean)


def update(prior: EkfBelief, n: int, t: int, reference: float) -> EkfBelief:
    """Gated measurement update; returns the prior unchanged when gated out."""
    if not 0 <= n <= t:
        raise ValueError(f"n must be in [0, t], got n={n}, t={t}")
    if not 0.0 <= reference <= 1.0:
        raise ValueError(f"reference must be in [0, 1], got {reference}")
    if not kernels.gate_open(t, prior.mean):
        return prior
    mean, variance = kernels.ekf_update(prior.mean, prior.variance, n, t, reference)
    return EkfBelief(mean=mean, variance=variance)
