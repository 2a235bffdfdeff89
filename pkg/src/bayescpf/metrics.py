"""Swarm error metrics: per-step RMSD, degradation phases and phase averages."""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

TRANSIENT = "transient"
EQUILIBRIUM = "equilibrium"


@dataclass(frozen=True)
class StepMetrics:
    """Swarm-wide errors at one recorded step."""

    step: int
    informed_rmsd: float
    accuracy_rmsd: float


@dataclass(frozen=True)
class PhaseBoundary:
    """Transient/equilibrium split as half-open step intervals.

    ``transient_end == equilibrium_start`` always; an empty equilibrium phase
    (no expected saturation within the run) is encoded by both equilibrium
    edges sitting one past the final step.
    """

    transient_start: int
    transient_end: int
    equilibrium_start: int
    equilibrium_end: int

    @property
    def has_equilibrium(self) -> bool:
        return self.equilibrium_start < self.equilibrium_end

    def segment(self, phase: str) -> Tuple[int, int]:
        if phase == TRANSIENT:
            return self.transient_start, self.transient_end
        if phase == EQUILIBRIUM:
            return self.equilibrium_start, self.equilibrium_end
        raise ValueError(f"unknown phase {phase!r}")


@dataclass(frozen=True)
class TrialSummary:
    """Per-phase time averages for one trial; the ablation difference is
    present only for matched filter/baseline pairs."""

    phase: str
    informed_nrmsd: float
    accuracy_nrmsd: float
    ablation_difference: Optional[float] = None


def step_rmsd(values: Sequence[float], reference) -> float:
    """Root mean square of residuals against a scalar or per-agent reference."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("step_rmsd needs at least one value")
    r = np.asarray(reference, dtype=float)
    if r.ndim > 0 and r.shape != v.shape:
        raise ValueError(f"reference shape {r.shape} does not match {v.shape}")
    d = v - r
    return math.sqrt(float(np.mean(d * d)))


def phase_boundary(
    b0: float, drift: float, floor: float, k_max: int
) -> PhaseBoundary:
    """Where the expected (drift-only) accuracy path reaches its floor.

    With non-negative drift, or a crossing at or beyond ``k_max``, the whole
    run is transient. The epsilon nudge keeps a float quotient that lands a
    hair above an integer from shifting the boundary by one step.
    """
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    if drift < 0.0:
        crossing = int(math.ceil((floor - b0) / drift - 1e-9))
        if crossing < 0:
            crossing = 0
    else:
        crossing = k_max + 1
    if crossing >= k_max:
        return PhaseBoundary(0, k_max + 1, k_max + 1, k_max + 1)
    return PhaseBoundary(0, crossing, crossing, k_max + 1)


def phase_nrmsd(
    series: Sequence[StepMetrics], boundary: PhaseBoundary, phase: str
) -> TrialSummary:
    """Average the per-step errors over the recorded steps inside one phase."""
    start, end = boundary.segment(phase)
    dx = [m.informed_rmsd for m in series if start <= m.step < end]
    db = [m.accuracy_rmsd for m in series if start <= m.step < end]
    if not dx:
        raise ValueError(f"no recorded steps inside phase segment [{start}, {end})")
    return TrialSummary(
        phase=phase,
        informed_nrmsd=float(np.mean(dx)),
        accuracy_nrmsd=float(np.mean(db)),
    )


def nrmsd_difference(zeta: float, zeta_baseline: float) -> float:
    """Signed gap to the known-accuracy baseline; negative means the filter won."""
    return zeta - zeta_baseline


def segment_mean(
    steps: np.ndarray, values: np.ndarray, segment: Tuple[int, int]
) -> float:
    """Array form of ``phase_nrmsd`` for one metric series."""
    start, end = segment
    mask = (steps >= start) & (steps < end)
    if not np.any(mask):
        raise ValueError(f"no recorded steps inside phase segment [{start}, {end})")
    return float(np.mean(values[mask]))
