import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bayescpf import world


def grid_rng(seed=0):
    return np.random.default_rng(seed)


class TestGenerateTileGrid:
    def test_all_white_at_zero_fill(self):
        g = world.generate_tile_grid(2.0, 0.1, 0.0, grid_rng())
        assert g.tiles.sum() == 0
        assert g.realized_fill_ratio == 0.0

    def test_all_black_at_full_fill(self):
        g = world.generate_tile_grid(2.0, 0.1, 1.0, grid_rng())
        assert g.tiles.all()
        assert g.realized_fill_ratio == 1.0

    def test_exact_count_48x48(self):
        g = world.generate_tile_grid(4.8, 0.1, 0.75, grid_rng())
        assert g.tiles.shape == (48, 48)
        assert int(g.tiles.sum()) == 1728
        assert g.realized_fill_ratio == 0.75

    def test_realized_within_one_tile_of_target(self):
        g = world.generate_tile_grid(1.0, 0.1, 0.437, grid_rng())
        total = g.tiles.size
        assert abs(g.realized_fill_ratio - 0.437) <= 1.0 / total

    def test_deterministic_given_seed(self):
        a = world.generate_tile_grid(1.5, 0.1, 0.5, grid_rng(42))
        b = world.generate_tile_grid(1.5, 0.1, 0.5, grid_rng(42))
        assert np.array_equal(a.tiles, b.tiles)

    def test_lattice_rescales_to_cover_arena(self):
        g = world.generate_tile_grid(4.805, 0.1, 0.5, grid_rng())
        assert g.tiles_per_side == 48
        assert g.tile_size * g.tiles_per_side == pytest.approx(4.805)
        # the far corner still maps to a tile
        g.tile_at((4.805, 4.805))

    def test_invalid_dimensions_rejected(self):
        with pytest.raises(ValueError, match="side_length"):
            world.generate_tile_grid(-1.0, 0.1, 0.5, grid_rng())
        with pytest.raises(ValueError, match="tile_size"):
            world.generate_tile_grid(1.0, 0.0, 0.5, grid_rng())
        with pytest.raises(ValueError, match="fill ratio"):
            world.generate_tile_grid(1.0, 0.1, 1.5, grid_rng())

    def test_text_dump_shape(self):
        g = world.generate_tile_grid(0.5, 0.1, 0.4, grid_rng())
        lines = g.to_text().splitlines()
        assert len(lines) == 5
        assert all(len(line) == 5 and set(line) <= {"0", "1"} for line in lines)


class TestObserve:
    def test_perfect_sensor_reports_truth(self, rng):
        g = world.generate_tile_grid(1.0, 0.1, 1.0, grid_rng())
        sensor = world.SensorState(accuracy=1.0)
        for _ in range(50):
            assert world.observe(g, (0.5, 0.5), sensor, rng).value == 1

    def test_out_of_bounds_position(self, rng):
        g = world.generate_tile_grid(1.0, 0.1, 0.5, grid_rng())
        sensor = world.SensorState(accuracy=0.9)
        with pytest.raises(ValueError, match="outside arena"):
            world.observe(g, (1.2, 0.5), sensor, rng)

    def test_half_accuracy_is_coin_flip(self, rng):
        g = world.generate_tile_grid(1.0, 0.1, 1.0, grid_rng())
        sensor = world.SensorState(accuracy=0.5)
        vals = [world.observe(g, (0.5, 0.5), sensor, rng).value for _ in range(20000)]
        assert np.mean(vals) == pytest.approx(0.5, abs=3 * 0.5 / math.sqrt(20000))

    def test_match_rate_approaches_accuracy(self, rng):
        # Monte Carlo check at 1e5 draws, 3 sigma binomial tolerance.
        g = world.generate_tile_grid(1.0, 0.1, 1.0, grid_rng())
        sensor = world.SensorState(accuracy=0.8)
        draws = 100_000
        hits = sum(
            world.observe(g, (0.5, 0.5), sensor, rng).value for _ in range(draws)
        )
        tol = 3 * math.sqrt(0.8 * 0.2 / draws)
        assert hits / draws == pytest.approx(0.8, abs=tol)


class TestDegrade:
    def test_pure_drift_is_exact(self):
        params = world.DegradationParams(drift=-1e-5, diffusion=0.0)
        sensor = world.SensorState(accuracy=0.9, params=params)
        out = world.degrade(sensor, grid_rng())
        assert out.accuracy == 0.9 + (-1e-5)
        assert out.params is params

    def test_saturates_at_floor(self):
        params = world.DegradationParams(drift=-1e-3, diffusion=0.0)
        sensor = world.SensorState(accuracy=0.5, params=params)
        assert world.degrade(sensor, grid_rng()).accuracy == 0.5

    def test_drift_only_sequence_until_saturation(self):
        params = world.DegradationParams(drift=-0.01, diffusion=0.0)
        sensor = world.SensorState(accuracy=0.6, params=params)
        rng = grid_rng()
        values = []
        for _ in range(15):
            sensor = world.degrade(sensor, rng)
            values.append(sensor.accuracy)
        expected = [max(0.5, 0.6 - 0.01 * (k + 1)) for k in range(15)]
        assert values == pytest.approx(expected, abs=1e-12)
        assert min(values) == 0.5

    def test_never_exits_bounds(self, rng):
        params = world.DegradationParams(drift=-1e-3, diffusion=5e-2)
        sensor = world.SensorState(accuracy=0.8, params=params)
        for _ in range(2000):
            sensor = world.degrade(sensor, rng)
            assert 0.5 <= sensor.accuracy <= 1.0

    def test_wiener_statistics_oracle(self):
        # Unsaturated walk: sample mean within 3 SE of the drift line, sample
        # variance within 10% of the accumulated diffusion variance.
        steps, paths = 1000, 10_000
        drift, diffusion = -1e-5, 1e-4
        params = world.DegradationParams(drift=drift, diffusion=diffusion)
        finals = world.degradation_paths(0.95, params, paths, steps, grid_rng(2024))
        expected_mean = 0.95 + steps * drift
        se = diffusion * math.sqrt(steps) / math.sqrt(paths)
        assert abs(finals.mean() - expected_mean) < 3 * se
        expected_var = steps * diffusion**2
        assert abs(finals.var() - expected_var) < 0.1 * expected_var


class TestBlackTileProbability:
    def test_examples(self):
        assert world.black_tile_probability(0.5, 0.3) == 0.5
        assert world.black_tile_probability(1.0, 0.75) == 0.75
        assert world.black_tile_probability(0.8, 0.75) == pytest.approx(0.65)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            world.black_tile_probability(1.2, 0.5)

    @given(
        st.floats(0.0, 1.0, allow_nan=False),
        st.floats(0.0, 1.0, allow_nan=False),
    )
    def test_complement_symmetry(self, b, f):
        assert world.black_tile_probability(b, f) == pytest.approx(
            world.black_tile_probability(1.0 - b, 1.0 - f), abs=1e-12
        )

    @given(
        st.floats(0.0, 1.0, allow_nan=False),
        st.floats(0.0, 1.0, allow_nan=False),
    )
    def test_stays_in_unit_interval(self, b, f):
        assert 0.0 <= world.black_tile_probability(b, f) <= 1.0


class TestInvariantValidation:
    def test_bad_saturation_order(self):
        with pytest.raises(ValueError, match="saturation"):
            world.DegradationParams(lower_saturation=0.9, upper_saturation=0.6)

    def test_accuracy_outside_range(self):
        with pytest.raises(ValueError, match="accuracy"):
            world.SensorState(accuracy=0.2)
