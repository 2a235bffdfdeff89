"""Observation quantity adjustment: how much history is still in-distribution.

As the sensor degrades, old observations come from a different distribution
than new ones. The window size grows inversely with how fast the black-
observation probability is drifting, estimated from the trail of past assumed
accuracies, and is capped by the bounded observation queue.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import kernels
from .world import Observation


@dataclass(frozen=True)
class OqaParams:
    """Window-adjustment knobs.

    ``sensitivity`` is the tolerated change in observation probability across
    the window; ``derivative_window`` smooths the accuracy rate estimate;
    ``queue_capacity`` bounds stored observations; ``observation_period`` is
    the number of control steps between observations.
    """

    sensitivity: float = 0.02
    derivative_window: int = 500
    queue_capacity: int = 1000
    observation_period: int = 5

    def __post_init__(self):
        if self.sensitivity < 0.0:
            raise ValueError(f"sensitivity must be >= 0, got {self.sensitivity}")
        for name in ("derivative_window", "queue_capacity", "observation_period"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")


class ObservationQueue:
    """Bounded FIFO of binary observations; pushing past capacity evicts the
    oldest entry."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self._buf = np.zeros(capacity, dtype=np.int8)
        self._pos = 0
        self._len = 0

    def __len__(self) -> int:
        return self._len

    @property
    def capacity(self) -> int:
        return self._buf.shape[0]

    def push(self, obs: Observation) -> None:
        self._buf[self._pos] = obs.value
        self._pos = (self._pos + 1) % self.capacity
        self._len = min(self._len + 1, self.capacity)

    def values_oldest_first(self) -> np.ndarray:
        idx = (self._pos - self._len + np.arange(self._len)) % self.capacity
        return self._buf[idx].astype(int)

    def raw(self):
        return self._buf, self._pos, self._len


class AccuracyTrail:
    """Ring of past assumed accuracies, sized to yield ``window`` differences."""

    def __init__(self, window: int):
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        self.window = window
        self._buf = np.zeros(window + 1, dtype=float)
        self._pos = 0
        self._len = 0

    def __len__(self) -> int:
        return self._len

    def push(self, accuracy: float) -> None:
        self._buf[self._pos] = accuracy
        self._pos = (self._pos + 1) % self._buf.shape[0]
        self._len = min(self._len + 1, self._buf.shape[0])

    def raw(self):
        return self._buf, self._pos, self._len


def accuracy_derivative(trail: AccuracyTrail, literal: bool = False) -> float:
    """Weighted average change per stored entry of the accuracy trail.

    Differences between consecutive entries get weight ``j + 1`` at age ``j``,
    mirroring the informed-estimate average, so a constant-rate trail returns
    exactly that rate. ``literal=True`` leaves the numerator unweighted over a
    triangular denominator (comparison variant; damps a constant rate by
    2 / (w + 1)). The result is per trail interval; divide by the filter
    period for a per-step rate.
    """
    if len(trail) < 2:
        raise ValueError("need at least 2 stored accuracies to take a derivative")
    buf, pos, length = trail.raw()
    return kernels.accuracy_derivative(buf, pos, length, trail.window, literal)


def adjusted_observation_count(
    params: OqaParams,
    reference: float,
    accuracy_rate: float,
    step: int,
) -> int:
    """Observation window size for the current drift estimate.

    During warm-up (before ``derivative_window`` observation periods have
    elapsed) the window simply tracks how many observations exist. After
    warm-up it is ``sensitivity`` divided by the expected per-observation
    change of the black-observation probability, rounded up. A vanishing
    denominator (ambiguous reference or flat accuracy) yields the full
    capacity. Always in [1, capacity].
    """
    if step < 0:
        raise ValueError(f"step must be >= 0, got {step}")
    return kernels.adjusted_observation_count(
        params.sensitivity,
        params.observation_period,
        reference,
        accuracy_rate,
        step,
        params.derivative_window,
        params.queue_capacity,
    )


def window_counts(queue: ObservationQueue, t: int) -> Tuple[int, int]:
    """Black count among the newest ``min(t, len)`` queue entries, with the
    effective window size. An empty queue reports (0, 0), telling the
    estimators to skip the cycle."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    buf, pos, length = queue.raw()
    n, t_eff = kernels.window_counts(buf, pos, length, t)
    return int(n), int(t_eff)
