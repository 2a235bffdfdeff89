"""Arena geometry, diffusion kinematics and radius-based neighborhoods."""

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Sequence

import numpy as np

from . import kernels


class Pose(NamedTuple):
    x: float
    y: float
    heading: float


@dataclass(frozen=True)
class EstimatePacket:
    """The (estimate, confidence) message an agent broadcasts to neighbors."""

    sender: int
    estimate: float
    confidence: float
    step: int

    def __post_init__(self):
        if not 0.0 <= self.estimate <= 1.0:
            raise ValueError(f"packet estimate must be in [0, 1], got {self.estimate}")
        if self.confidence < 0.0:
            raise ValueError(f"packet confidence must be >= 0, got {self.confidence}")


@dataclass(frozen=True)
class MotionParams:
    """Diffusion-walk knobs.

    The defaults give metre-scale straight runs between turns; shorter runs
    mix the arena too slowly to keep the long-run occupancy histogram flat at
    this arena size, which is the property the uniformity test pins down.
    """

    speed: float = 0.1
    robot_diameter: float = 0.14
    step_duration: float = 0.1
    turn_probability: float = 0.01
    avoidance_factor: float = 1.5

    @property
    def step_length(self) -> float:
        return self.speed * self.step_duration

    @property
    def avoid_range(self) -> float:
        return self.avoidance_factor * self.robot_diameter


@dataclass(frozen=True)
class ArenaConfig:
    """Swarm size, communication radius and density; side length is derived."""

    swarm_size: int = 15
    comm_radius: float = 0.7
    density: float = 1.0
    motion: MotionParams = field(default_factory=MotionParams)

    def __post_init__(self):
        if self.swarm_size < 1:
            raise ValueError(f"swarm_size must be >= 1, got {self.swarm_size}")
        if self.comm_radius <= 0.0 or self.density <= 0.0:
            raise ValueError("comm_radius and density must be positive")

    @property
    def side_length(self) -> float:
        return arena_side_length(self.swarm_size, self.comm_radius, self.density)

    def motion_spec(self) -> kernels.MotionSpec:
        m = self.motion
        return kernels.MotionSpec(
            step_length=m.step_length,
            turn_prob=m.turn_probability,
            avoid_range=m.avoid_range,
            radius=m.robot_diameter / 2.0,
            arena_side=self.side_length,
            comm_radius=self.comm_radius,
        )


def arena_side_length(swarm_size: int, comm_radius: float, density: float) -> float:
    """Edge length giving the requested communication-coverage density."""
    return math.sqrt(swarm_size * math.pi * comm_radius**2 / density)


def neighbors(positions: Sequence, radius: float) -> List[List[int]]:
    """Indices within ``radius`` of each position, self excluded, symmetric."""
    pts = np.asarray(positions, dtype=float)
    n = len(pts)
    out: List[List[int]] = [[] for _ in range(n)]
    r2 = radius * radius
    for i in range(n):
        for j in range(i + 1, n):
            d = pts[i] - pts[j]
            if float(d @ d) <= r2:
                out[i].append(j)
                out[j].append(i)
    return out


def diffuse(
    pose: Pose,
    arena: ArenaConfig,
    obstacles: Sequence,
    rng: np.random.Generator,
) -> Pose:
    """Advance one pose by one step of the diffusion walk.

    Always consumes exactly two uniform draws (turn coin, turn angle) so a
    replayed stream stays aligned. ``obstacles`` holds the other agents'
    positions from the step-start snapshot.
    """
    pts = np.asarray(obstacles, dtype=float).reshape(-1, 2)
    x, y, heading = kernels.diffuse_step(
        pose.x,
        pose.y,
        pose.heading,
        np.ascontiguousarray(pts[:, 0]),
        np.ascontiguousarray(pts[:, 1]),
        len(pts),
        arena.motion_spec(),
        rng.random(),
        rng.random(),
    )
    return Pose(x, y, heading)


def spawn_pose(arena: ArenaConfig, rng: np.random.Generator) -> Pose:
    """Uniform starting pose over the whole arena.

    Consumes exactly three uniform draws (x, y, heading).
    """
    side = arena.side_length
    x = side * rng.random()
    y = side * rng.random()
    heading = -math.pi + 2.0 * math.pi * rng.random()
    return Pose(x, y, heading)
