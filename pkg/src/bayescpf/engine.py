"""Trial execution: seeded randomness, the fast fused loop and a reference loop.

Seed scheme
-----------
Trial ``m`` of a run with base seed ``s`` uses ``trial_seed = s + m``. Streams
are PCG64 generators keyed by entropy tuples:

* grid:                  ``(trial_seed, 0)``
* agent ``i`` motion:      ``(trial_seed, 1, i)``
* agent ``i`` degradation: ``(trial_seed, 2, i)``
* agent ``i`` observation: ``(trial_seed, 3, i)``
* agent ``i`` packet drop: ``(trial_seed, 4, i)``

Draw order is fixed so block pre-draws and live scalar draws coincide: the
motion stream yields three spawn uniforms (x, y, heading) then two uniforms
per step (turn coin, turn angle); the degradation stream one normal per step;
the observation stream one uniform per observation event; the drop stream,
only when packet loss is enabled, one uniform per (comms step, sender slot).

Every random number is drawn up front from these streams and handed to the
kernels as arrays, which makes the compiled and interpreted backends, and the
object-level reference loop, bit-identical. Filter mode never touches the
draws, so matched-seed runs of the filter and its known-accuracy baseline
share the same world evolution by construction.
"""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from . import agent, kernels, metrics, world
from .config import TrialConfig

OCCUPANCY_BINS = 4


def grid_stream(trial_seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([trial_seed, 0]))


@dataclass
class AgentStreams:
    motion: np.random.Generator
    degradation: np.random.Generator
    observation: np.random.Generator
    packet_drop: np.random.Generator


def agent_streams(trial_seed: int, agent_id: int) -> AgentStreams:
    def make(kind: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence([trial_seed, kind, agent_id])
        )

    return AgentStreams(
        motion=make(1), degradation=make(2), observation=make(3), packet_drop=make(4)
    )


@dataclass
class TrialRandomness:
    """All draws for one trial, plus the generated arena."""

    grid: world.TileGrid
    spawn: np.ndarray  # (N, 3) uniforms for x, y, heading
    motion_u: np.ndarray  # (K, N, 2)
    degrade_g: np.ndarray  # (K, N)
    obs_u: np.ndarray  # (K // t_obs, N)
    drop_u: np.ndarray  # (K // t_comms, N, N) or empty


def predraw(config: TrialConfig, trial_index: int) -> TrialRandomness:
    trial_seed = config.sim.seed + trial_index
    n = config.sim.n_agents
    k_max = config.sim.max_steps
    arena = config.arena_config()

    grid = world.generate_tile_grid(
        arena.side_length,
        config.env.tile_size,
        config.env.fill_ratio,
        grid_stream(trial_seed),
    )

    spawn = np.zeros((n, 3))
    motion_u = np.zeros((k_max, n, 2))
    degrade_g = np.zeros((k_max, n))
    n_obs = k_max // config.schedule.observation_period
    obs_u = np.zeros((n_obs, n))
    if config.comms.drop_probability > 0.0:
        n_comms = k_max // config.schedule.comms_period
        drop_u = np.zeros((n_comms, n, n))
    else:
        drop_u = np.zeros((0, n, n))

    for i in range(n):
        streams = agent_streams(trial_seed, i)
        spawn[i] = streams.motion.random(3)
        motion_u[:, i, :] = streams.motion.random((k_max, 2))
        degrade_g[:, i] = streams.degradation.standard_normal(k_max)
        obs_u[:, i] = streams.observation.random(n_obs)
        if drop_u.shape[0]:
            drop_u[:, i, :] = streams.packet_drop.random((drop_u.shape[0], n))

    return TrialRandomness(
        grid=grid,
        spawn=spawn,
        motion_u=motion_u,
        degrade_g=degrade_g,
        obs_u=obs_u,
        drop_u=drop_u,
    )


@dataclass
class TrialResult:
    """Recorded trajectories and diagnostics for one trial in one mode."""

    mode: str
    steps: np.ndarray  # recorded step indices
    b_true: np.ndarray  # (n_rec, N)
    b_assumed: np.ndarray
    x_informed: np.ndarray
    x_wma: np.ndarray
    n_window: np.ndarray
    t_window: np.ndarray
    realized_fill_ratio: float
    occupancy: np.ndarray
    overlap_fraction: float

    def informed_rmsd(self) -> np.ndarray:
        d = self.x_informed - self.realized_fill_ratio
        return np.sqrt(np.mean(d * d, axis=1))

    def accuracy_rmsd(self) -> np.ndarray:
        d = self.b_assumed - self.b_true
        return np.sqrt(np.mean(d * d, axis=1))


def spawn_poses(config: TrialConfig, rnd: TrialRandomness) -> np.ndarray:
    """Positions/headings from the spawn uniforms; same arithmetic as
    ``swarm.spawn_pose``."""
    side = config.arena_config().side_length
    out = np.zeros((config.sim.n_agents, 3))
    out[:, 0] = side * rnd.spawn[:, 0]
    out[:, 1] = side * rnd.spawn[:, 1]
    out[:, 2] = -np.pi + 2.0 * np.pi * rnd.spawn[:, 2]
    return out


def _run_mode(config: TrialConfig, rnd: TrialRandomness, mode: str) -> TrialResult:
    n = config.sim.n_agents
    k_max = config.sim.max_steps
    record_every = config.record_every()
    n_rec = k_max // record_every
    ablation = mode == agent.ABLATION

    poses = spawn_poses(config, rnd)
    pos = np.ascontiguousarray(poses[:, :2])
    heading = np.ascontiguousarray(poses[:, 2])

    b_true = np.full(n, config.sensor.initial)
    ekf_mean = np.full(n, config.filter.initial)
    ekf_var = np.full(n, config.filter.initial_variance)
    b_assumed = np.full(n, b_true[0] if ablation else config.filter.initial)

    q_cap = config.oqa.queue_capacity
    w = config.oqa.derivative_window
    queue = np.zeros((n, q_cap), np.int8)
    queue_pos = np.zeros(n, np.int64)
    queue_len = np.zeros(n, np.int64)
    history = np.zeros((n, q_cap))
    hist_pos = np.zeros(n, np.int64)
    hist_len = np.zeros(n, np.int64)
    trail = np.zeros((n, w + 1))
    trail_pos = np.zeros(n, np.int64)
    trail_len = np.zeros(n, np.int64)
    for i in range(n):
        trail[i, 0] = b_assumed[i]
        trail_pos[i] = 1
        trail_len[i] = 1

    rec_step = np.zeros(n_rec, np.int64)
    rec_b_true = np.zeros((n_rec, n))
    rec_b_assumed = np.zeros((n_rec, n))
    rec_x = np.zeros((n_rec, n))
    rec_x_wma = np.zeros((n_rec, n))
    rec_n = np.zeros((n_rec, n), np.int64)
    rec_t = np.zeros((n_rec, n), np.int64)
    occupancy = np.zeros((OCCUPANCY_BINS, OCCUPANCY_BINS), np.int64)

    overlap_events = kernels.simulate(
        k_max,
        config.schedule.observation_period,
        config.schedule.comms_period,
        config.schedule.filter_period,
        record_every,
        ablation,
        config.arena_config().motion_spec(),
        kernels.DegradeSpec(
            drift=config.sensor.drift,
            diffusion=config.sensor.diffusion,
            floor=config.sensor.lower_saturation,
            ceiling=config.sensor.upper_saturation,
        ),
        config.filter_spec(),
        kernels.OqaSpec(
            sensitivity=config.oqa.sensitivity,
            window=w,
            capacity=q_cap,
            literal_derivative=config.oqa.literal_derivative,
        ),
        config.comms.drop_probability,
        rnd.grid.tiles,
        rnd.grid.tile_size,
        pos,
        heading,
        b_true,
        ekf_mean,
        ekf_var,
        b_assumed,
        rnd.motion_u,
        rnd.degrade_g,
        rnd.obs_u,
        rnd.drop_u,
        queue,
        queue_pos,
        queue_len,
        history,
        hist_pos,
        hist_len,
        trail,
        trail_pos,
        trail_len,
        rec_step,
        rec_b_true,
        rec_b_assumed,
        rec_x,
        rec_x_wma,
        rec_n,
        rec_t,
        occupancy,
    )

    pairs = n * (n - 1) // 2
    overlap_fraction = overlap_events / (k_max * pairs) if k_max * pairs else 0.0
    return TrialResult(
        mode=mode,
        steps=rec_step,
        b_true=rec_b_true,
        b_assumed=rec_b_assumed,
        x_informed=rec_x,
        x_wma=rec_x_wma,
        n_window=rec_n,
        t_window=rec_t,
        realized_fill_ratio=rnd.grid.realized_fill_ratio,
        occupancy=occupancy,
        overlap_fraction=overlap_fraction,
    )


def run_trial(config: TrialConfig, trial_index: int) -> Dict[str, TrialResult]:
    """One seeded trial; for mode ``both`` the filter and baseline runs share
    the same pre-drawn randomness and differ only in the estimation stack."""
    config.validate()
    rnd = predraw(config, trial_index)
    modes = (
        [agent.BAYESCPF, agent.ABLATION]
        if config.sim.mode == "both"
        else [config.sim.mode]
    )
    return {mode: _run_mode(config, rnd, mode) for mode in modes}


def trial_boundary(config: TrialConfig) -> metrics.PhaseBoundary:
    """Expected degradation phases from the true drift parameters."""
    return metrics.phase_boundary(
        config.sensor.initial,
        config.sensor.drift,
        config.sensor.lower_saturation,
        config.sim.max_steps,
    )


# ---------------------------------------------------------------------------
# reference loop (object pipeline; slow, used for cross-checking)
# ---------------------------------------------------------------------------


def run_reference_trial(
    config: TrialConfig,
    trial_index: int,
    mode: Optional[str] = None,
    max_steps: Optional[int] = None,
) -> TrialResult:
    """Drive the per-agent object pipeline step by step.

    Produces the same recorded trajectories as the fused kernel, drawing live
    from the documented streams instead of pre-drawn blocks. Quadratically
    slower; meant for tests and debugging at reduced scale.
    """
    from . import swarm as swarm_mod

    config.validate()
    mode = mode or config.sim.mode
    if mode == "both":
        raise ValueError("reference loop runs one mode at a time")
    k_max = config.sim.max_steps if max_steps is None else max_steps
    record_every = config.record_every()
    n = config.sim.n_agents
    trial_seed = config.sim.seed + trial_index
    arena = config.arena_config()

    grid = world.generate_tile_grid(
        arena.side_length,
        config.env.tile_size,
        config.env.fill_ratio,
        grid_stream(trial_seed),
    )
    streams = [agent_streams(trial_seed, i) for i in range(n)]
    settings = config.filter_settings()
    deg = config.degradation_params()

    agents = []
    for i in range(n):
        pose = swarm_mod.spawn_pose(arena, streams[i].motion)
        sensor = world.SensorState(accuracy=config.sensor.initial, params=deg)
        agents.append(
            agent.make_agent(
                i,
                pose,
                sensor,
                config.filter.initial,
                config.filter.initial_variance,
                settings,
                mode=mode,
            )
        )

    n_rec = k_max // record_every
    rec_step = np.zeros(n_rec, np.int64)
    rec = {
        name: np.zeros((n_rec, n))
        for name in ("b_true", "b_assumed", "x_informed", "x_wma")
    }
    rec_n = np.zeros((n_rec, n), np.int64)
    rec_t = np.zeros((n_rec, n), np.int64)
    occupancy = np.zeros((OCCUPANCY_BINS, OCCUPANCY_BINS), np.int64)
    occ_w = arena.side_length / OCCUPANCY_BINS
    drop_p = config.comms.drop_probability

    inboxes: Dict[int, list] = {i: [] for i in range(n)}
    for k in range(1, k_max + 1):
        snapshot = [(a.pose.x, a.pose.y) for a in agents]
        for i, a in enumerate(agents):
            obstacles = [p for j, p in enumerate(snapshot) if j != i]
            a.pose = swarm_mod.diffuse(a.pose, arena, obstacles, streams[i].motion)
            gx = min(int(a.pose.x / occ_w), OCCUPANCY_BINS - 1)
            gy = min(int(a.pose.y / occ_w), OCCUPANCY_BINS - 1)
            occupancy[gy, gx] += 1
        for i, a in enumerate(agents):
            a.sensor = world.degrade(a.sensor, streams[i].degradation)

        if k % config.schedule.comms_period == 0:
            packets = [agent.make_packet(a, k) for a in agents]
            positions = [(a.pose.x, a.pose.y) for a in agents]
            links = swarm_mod.neighbors(positions, arena.comm_radius)
            for i in range(n):
                drop_row = (
                    streams[i].packet_drop.random(n) if drop_p > 0.0 else None
                )
                inbox = []
                for j in links[i]:
                    if packets[j] is None:
                        continue
                    if drop_row is not None and drop_row[j] < drop_p:
                        continue
                    inbox.append(packets[j])
                inboxes[i] = inbox

        for i, a in enumerate(agents):
            agent.agent_step(a, grid, inboxes[i], k, streams[i].observation)

        if k % record_every == 0:
            row = k // record_every - 1
            rec_step[row] = k
            for i, a in enumerate(agents):
                rec["b_true"][row, i] = a.sensor.accuracy
                rec["b_assumed"][row, i] = a.assumed_accuracy
                rec["x_informed"][row, i] = a.informed
                rec["x_wma"][row, i] = a.wma_reference
                rec_n[row, i] = a.window[0]
                rec_t[row, i] = a.window[1]

    return TrialResult(
        mode=mode,
        steps=rec_step,
        b_true=rec["b_true"],
        b_assumed=rec["b_assumed"],
        x_informed=rec["x_informed"],
        x_wma=rec["x_wma"],
        n_window=rec_n,
        t_window=rec_t,
        realized_fill_ratio=grid.realized_fill_ratio,
        occupancy=occupancy,
        overlap_fraction=float("nan"),
    )
