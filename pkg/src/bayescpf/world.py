"""Tile environment, noisy ground sensing and accuracy degradation.

The arena is a square lattice of black and white tiles realized from a target
fill ratio by exact count, so the realized proportion is within one tile of
the target and can serve as ground truth for error metrics. A sensor reads
the tile under a position correctly with probability equal to its current
accuracy, and that accuracy drifts downward between steps as a clamped
Gaussian random walk.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels


@dataclass(frozen=True)
class DegradationParams:
    """Random-walk coefficients and saturation bounds for a sensor's accuracy.

    ``drift`` is the expected per-step change (non-positive here), ``diffusion``
    scales a standard-normal draw added each step. The walk is clamped, not
    reflected, at the saturation bounds.
    """

    drift: float = -1e-5
    diffusion: float = 1e-4
    lower_saturation: float = 0.5
    upper_saturation: float = 1.0

    def __post_init__(self):
        if not 0.5 <= self.lower_saturation <= self.upper_saturation <= 1.0:
            raise ValueError(
                "saturation bounds must satisfy "
                f"0.5 <= lower <= upper <= 1.0, got [{self.lower_saturation}, "
                f"{self.upper_saturation}]"
            )
        if self.diffusion < 0.0:
            raise ValueError(f"diffusion must be >= 0, got {self.diffusion}")


@dataclass
class SensorState:
    """Current true accuracy of one ground sensor."""

    accuracy: float
    params: DegradationParams = field(default_factory=DegradationParams)

    def __post_init__(self):
        p = self.params
        if not p.lower_saturation <= self.accuracy <= p.upper_saturation:
            raise ValueError(
                f"accuracy {self.accuracy} outside saturation range "
                f"[{p.lower_saturation}, {p.upper_saturation}]"
            )


@dataclass(frozen=True)
class Observation:
    """One binary tile reading: 1 means black was reported."""

    value: int
    step_index: int = 0


@dataclass
class TileGrid:
    """Square lattice of tiles; 1 = black, 0 = white.

    ``tile_size`` is the effective size after fitting an integer number of
    tiles to the side length, so every arena position maps to exactly one
    tile.
    """

    side_length: float
    tile_size: float
    tiles: np.ndarray
    target_fill_ratio: float
    realized_fill_ratio: float

    @property
    def tiles_per_side(self) -> int:
        return self.tiles.shape[0]

    def tile_at(self, position) -> int:
        """Color of the tile under ``position`` (x, y)."""
        x, y = float(position[0]), float(position[1])
        if not (0.0 <= x <= self.side_length and 0.0 <= y <= self.side_length):
            raise ValueError(
                f"position ({x}, {y}) outside arena of side {self.side_length}"
            )
        n = self.tiles_per_side
        col = min(int(x / self.tile_size), n - 1)
        row = min(int(y / self.tile_size), n - 1)
        return int(self.tiles[row, col])

    def to_text(self) -> str:
        """Debug dump: one row of 0/1 characters per lattice row."""
        return "\n".join("".join(str(int(v)) for v in row) for row in self.tiles)


def generate_tile_grid(
    side_length: float,
    tile_size: float,
    target_fill_ratio: float,
    rng: np.random.Generator,
) -> TileGrid:
    """Lay out ``round(f * total)`` black tiles at uniformly shuffled positions."""
    if side_length <= 0.0:
        raise ValueError(f"side_length must be positive, got {side_length}")
    if not 0.0 < tile_size <= side_length:
        raise ValueError(
            f"tile_size must be in (0, side_length], got {tile_size} "
            f"for side {side_length}"
        )
    if not 0.0 <= target_fill_ratio <= 1.0:
        raise ValueError(f"fill ratio must be in [0, 1], got {target_fill_ratio}")

    n = max(1, round(side_length / tile_size))
    total = n * n
    n_black = round(target_fill_ratio * total)
    flat = np.zeros(total, dtype=np.int8)
    flat[:n_black] = 1
    tiles = rng.permutation(flat).reshape(n, n)
    return TileGrid(
        side_length=side_length,
        tile_size=side_length / n,
        tiles=tiles,
        target_fill_ratio=target_fill_ratio,
        realized_fill_ratio=n_black / total,
    )


def observe(
    grid: TileGrid,
    position,
    sensor: SensorState,
    rng: np.random.Generator,
    step_index: int = 0,
) -> Observation:
    """Read the tile under ``position`` through a noisy sensor.

    A uniform draw below the current accuracy reports the true color,
    otherwise the flipped color.
    """
    color = grid.tile_at(position)
    if rng.random() < sensor.accuracy:
        value = color
    else:
        value = 1 - color
    return Observation(value=value, step_index=step_index)


def degrade(sensor: SensorState, rng: np.random.Generator) -> SensorState:
    """Advance the accuracy by one drift-plus-noise step, clamped in place."""
    p = sensor.params
    accuracy = kernels.wiener_step(
        sensor.accuracy,
        p.drift,
        p.diffusion,
        rng.standard_normal(),
        p.lower_saturation,
        p.upper_saturation,
    )
    return SensorState(accuracy=accuracy, params=p)


def black_tile_probability(b: float, f: float) -> float:
    """Chance of reporting black given accuracy ``b`` and fill ratio ``f``."""
    if not 0.0 <= b <= 1.0 or not 0.0 <= f <= 1.0:
        raise ValueError(f"b and f must lie in [0, 1], got b={b}, f={f}")
    return kernels.black_tile_probability(b, f)


def degradation_paths(
    initial: float,
    params: DegradationParams,
    n_paths: int,
    n_steps: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Final accuracies of ``n_paths`` independent walks after ``n_steps`` steps."""
    noise = rng.standard_normal((n_steps, n_paths))
    return kernels.degradation_paths(
        initial,
        params.drift,
        params.diffusion,
        params.lower_saturation,
        params.upper_saturation,
        noise,
    )
