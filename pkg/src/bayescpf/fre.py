"""Fill ratio estimation: local MLE, confidence weighting and belief fusion.

The local estimate inverts the black-observation rate through the assumed
sensor accuracy; its confidence is the estimator's Fisher information.
Neighbor beliefs fuse into a confidence-weighted social estimate, and the
informed estimate is the convex combination of the two. A triangular moving
average over past informed estimates, weighted toward older values, provides
the quasi-static reference the accuracy filter needs.
"""

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import kernels
from .swarm import EstimatePacket

# Assumed accuracies are clamped at least this far above 0.5 before entering
# the estimate, whose formula has a pole there.
MIN_ASSUMED_ACCURACY = kernels.ACCURACY_EPS


@dataclass(frozen=True)
class LocalBelief:
    estimate: float
    confidence: float


@dataclass(frozen=True)
class SocialBelief:
    estimate: float = 0.0
    confidence: float = 0.0


class InformedHistory:
    """Bounded ring of past informed estimates, newest last."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self._buf = np.zeros(capacity, dtype=float)
        self._pos = 0
        self._len = 0

    def __len__(self) -> int:
        return self._len

    @property
    def capacity(self) -> int:
        return self._buf.shape[0]

    def push(self, value: float) -> None:
        self._buf[self._pos] = value
        self._pos = (self._pos + 1) % self.capacity
        self._len = min(self._len + 1, self.capacity)

    def newest_first(self) -> np.ndarray:
        idx = (self._pos - 1 - np.arange(self._len)) % self.capacity
        return self._buf[idx]

    def raw(self):
        return self._buf, self._pos, self._len


def guard_accuracy(b: float) -> float:
    """Clamp an assumed accuracy above the estimate formula's pole at 0.5."""
    return b if b >= MIN_ASSUMED_ACCURACY else MIN_ASSUMED_ACCURACY


def local_estimate(n: int, t: int, b_prev: float) -> float:
    """Maximum-likelihood fill ratio from ``n`` black in ``t`` observations.

    Clamped to [0, 1]; for a perfect sensor it reduces to n / t.
    """
    _check_counts(n, t)
    _check_accuracy(b_prev)
    return kernels.local_estimate(n, t, b_prev)


def local_confidence(
    n: int,
    t: int,
    b_prev: float,
    estimate: float,
    b_current: Optional[float] = None,
) -> float:
    """Fisher-information weight matching ``estimate`` from ``local_estimate``.

    All accuracy factors are evaluated at ``b_prev``. Passing ``b_current``
    splits the evaluation (squared factors at the newer value), a sensitivity
    variant kept behind the ``filter.literal_confidence`` config switch.
    """
    _check_counts(n, t)
    _check_accuracy(b_prev)
    b_sq = b_prev if b_current is None else b_current
    if 0.0 < estimate < 1.0 and (n == 0 or n == t):
        raise ValueError(
            f"interior estimate with degenerate counts n={n}, t={t}"
        )
    return kernels.local_confidence(n, t, b_prev, b_sq, estimate)


def social_fuse(packets: Iterable[EstimatePacket]) -> SocialBelief:
    """Confidence-weighted average of neighbor estimates; (0, 0) when empty."""
    total = 0.0
    weighted = 0.0
    for p in packets:
        total += p.confidence
        weighted += p.confidence * p.estimate
    if total <= 0.0:
        return SocialBelief(0.0, 0.0)
    return SocialBelief(weighted / total, total)


def informed_estimate(local: LocalBelief, social: SocialBelief) -> float:
    """Convex combination of local and social beliefs by their confidences.

    With zero total confidence the local estimate passes through unchanged.
    """
    return kernels.informed_estimate(
        local.estimate, local.confidence, social.estimate, social.confidence
    )


def wma_reference(history: InformedHistory, window: int) -> float:
    """Triangular moving average over the newest ``window`` informed estimates.

    The entry ``j`` steps old carries weight ``j + 1``, so older estimates
    dominate; the window is clipped to the stored length.
    """
    if len(history) == 0:
        raise ValueError("cannot form a reference from an empty history")
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    buf, pos, length = history.raw()
    return kernels.weighted_moving_average(buf, pos, length, window)


def _check_counts(n: int, t: int) -> None:
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if not 0 <= n <= t:
        raise ValueError(f"n must be in [0, t], got n={n}, t={t}")


def _check_accuracy(b: float) -> None:
    if not 0.5 < b <= 1.0:
        raise ValueError(
            f"assumed accuracy must lie in (0.5, 1.0], got {b}; "
            "clamp with guard_accuracy first"
        )
