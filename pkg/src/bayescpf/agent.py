"""Per-robot state machine tying observation, communication and the filter
stack together on their schedules.

This is the readable object-level pipeline. The experiment engine runs the
same logic through fused array kernels; the two are cross-checked for exact
equality in the test suite. Within a step the order is: motion and sensor
degradation (driven by the trial owner), observation, packet exchange, fill
ratio estimation, then the accuracy filter with constraint compliance and
window adjustment.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import cc, fre, oqa, sae, world
from .swarm import EstimatePacket, Pose

BAYESCPF = "bayescpf"
ABLATION = "ablation"


@dataclass(frozen=True)
class Schedule:
    """Module activation periods, in control steps."""

    observation_period: int = 5
    comms_period: int = 5
    filter_period: int = 5

    def __post_init__(self):
        for name in ("observation_period", "comms_period", "filter_period"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")


@dataclass(frozen=True)
class FilterSettings:
    """Everything an agent's estimation stack is parametrized by."""

    schedule: Schedule = field(default_factory=Schedule)
    assumed_model: sae.AssumedDegradationParams = field(
        default_factory=sae.AssumedDegradationParams
    )
    bounds: cc.AccuracyBounds = field(default_factory=cc.AccuracyBounds)
    oqa_params: oqa.OqaParams = field(default_factory=oqa.OqaParams)
    literal_confidence: bool = False
    literal_derivative: bool = False


@dataclass
class AgentState:
    """One robot's pose, sensor and filter state.

    In ablation mode the assumed accuracy shadows the true accuracy exactly
    and the Kalman belief is never touched; everything else runs unchanged.
    """

    agent_id: int
    pose: Pose
    sensor: world.SensorState
    ekf: sae.EkfBelief
    assumed_accuracy: float
    queue: oqa.ObservationQueue
    history: fre.InformedHistory
    trail: oqa.AccuracyTrail
    settings: FilterSettings = field(default_factory=FilterSettings)
    mode: str = BAYESCPF
    local: Optional[fre.LocalBelief] = None
    social: fre.SocialBelief = field(default_factory=fre.SocialBelief)
    informed: float = 0.0
    wma_reference: float = 0.0
    accuracy_rate: float = 0.0
    window: Tuple[int, int] = (0, 0)
    assumed_accuracy_prev: float = 0.0

    def __post_init__(self):
        if self.mode not in (BAYESCPF, ABLATION):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.assumed_accuracy_prev == 0.0:
            self.assumed_accuracy_prev = self.assumed_accuracy


def make_agent(
    agent_id: int,
    pose: Pose,
    sensor: world.SensorState,
    initial_assumed: float,
    initial_variance: float,
    settings: FilterSettings,
    mode: str = BAYESCPF,
) -> AgentState:
    """Fresh agent with seeded trail and empty queues."""
    assumed = sensor.accuracy if mode == ABLATION else initial_assumed
    state = AgentState(
        agent_id=agent_id,
        pose=pose,
        sensor=sensor,
        ekf=sae.EkfBelief(mean=initial_assumed, variance=initial_variance),
        assumed_accuracy=assumed,
        queue=oqa.ObservationQueue(settings.oqa_params.queue_capacity),
        history=fre.InformedHistory(settings.oqa_params.queue_capacity),
        trail=oqa.AccuracyTrail(settings.oqa_params.derivative_window),
        settings=settings,
        mode=mode,
    )
    state.trail.push(assumed)
    return state


def make_packet(state: AgentState, k: int) -> Optional[EstimatePacket]:
    """Current local belief as a broadcast payload; None before the first
    estimate exists."""
    if state.local is None:
        return None
    return EstimatePacket(
        sender=state.agent_id,
        estimate=state.local.estimate,
        confidence=state.local.confidence,
        step=k,
    )


def agent_step(
    state: AgentState,
    grid: world.TileGrid,
    inbox: List[EstimatePacket],
    k: int,
    rng: np.random.Generator,
) -> AgentState:
    """Advance one agent through step ``k`` (pose and sensor already updated).

    ``rng`` is consumed only for the observation coin flip. ``inbox`` holds
    the packets deliverable this step; it is ignored off the communication
    schedule. Sub-stages that lack their inputs (no window yet, short trail)
    are skipped for the cycle rather than raised.
    """
    s = state.settings
    sched = s.schedule

    if state.mode == ABLATION:
        state.assumed_accuracy = state.sensor.accuracy

    if k % sched.observation_period == 0:
        obs = world.observe(
            grid, (state.pose.x, state.pose.y), state.sensor, rng, step_index=k
        )
        state.queue.push(obs)

    if k % sched.comms_period == 0:
        state.social = fre.social_fuse(inbox)

    n_win, t_win = state.window
    if t_win >= 1:
        if s.literal_confidence and state.mode == BAYESCPF:
            b_lin = fre.guard_accuracy(state.assumed_accuracy_prev)
            b_sq = fre.guard_accuracy(state.assumed_accuracy)
        else:
            b_lin = fre.guard_accuracy(state.assumed_accuracy)
            b_sq = b_lin
        est = fre.local_estimate(n_win, t_win, b_lin)
        conf = fre.local_confidence(n_win, t_win, b_lin, est, b_current=b_sq)
        state.local = fre.LocalBelief(est, conf)
        state.informed = fre.informed_estimate(state.local, state.social)
        state.history.push(state.informed)
        state.wma_reference = fre.wma_reference(state.history, window=t_win)

    if k % sched.filter_period == 0:
        if state.mode == BAYESCPF:
            predicted = sae.predict(state.ekf, s.assumed_model)
            posterior = sae.update(predicted, n_win, t_win, state.wma_reference)
            state.ekf = posterior
            state.assumed_accuracy_prev = state.assumed_accuracy
            state.assumed_accuracy = cc.constrain(posterior, s.bounds).accuracy
        state.trail.push(state.assumed_accuracy)
        if len(state.trail) >= 2:
            state.accuracy_rate = (
                oqa.accuracy_derivative(state.trail, literal=s.literal_derivative)
                / sched.filter_period
            )
        else:
            state.accuracy_rate = 0.0
        t_new = oqa.adjusted_observation_count(
            s.oqa_params, state.wma_reference, state.accuracy_rate, k
        )
        state.window = oqa.window_counts(state.queue, t_new)

    return state
