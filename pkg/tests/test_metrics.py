import numpy as np
import pytest

from bayescpf import metrics


class TestStepRmsd:
    def test_zero_residual(self):
        assert metrics.step_rmsd([0.5, 0.5, 0.5], 0.5) == 0.0

    def test_single_value(self):
        assert metrics.step_rmsd([0.6], 0.5) == pytest.approx(0.1)

    def test_two_values(self):
        assert metrics.step_rmsd([0.4, 0.6], 0.5) == pytest.approx(0.1)

    def test_per_agent_reference(self):
        got = metrics.step_rmsd([0.9, 0.7], [1.0, 0.7])
        assert got == pytest.approx(np.sqrt(0.01 / 2))

    def test_permutation_invariant(self):
        a = metrics.step_rmsd([0.1, 0.5, 0.9], 0.4)
        b = metrics.step_rmsd([0.9, 0.1, 0.5], 0.4)
        assert a == pytest.approx(b)

    def test_bounded_by_max_residual(self):
        vals = [0.2, 0.8, 0.55]
        got = metrics.step_rmsd(vals, 0.5)
        assert 0.0 <= got <= max(abs(v - 0.5) for v in vals)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            metrics.step_rmsd([], 0.5)
        with pytest.raises(ValueError, match="shape"):
            metrics.step_rmsd([0.1, 0.2], [0.1])


class TestPhaseBoundary:
    def test_full_degradation_crossing(self):
        b = metrics.phase_boundary(1.0, -1e-5, 0.5, 60000)
        assert b.transient_end == 50000
        assert b.equilibrium_start == 50000
        assert b.has_equilibrium

    def test_partial_floor(self):
        b = metrics.phase_boundary(0.8, -1e-5, 0.7, 60000)
        assert b.transient_end == 10000

    def test_zero_drift_all_transient(self):
        b = metrics.phase_boundary(1.0, 0.0, 0.5, 60000)
        assert not b.has_equilibrium
        assert b.segment(metrics.TRANSIENT) == (0, 60001)

    def test_crossing_at_horizon_is_empty_equilibrium(self):
        b = metrics.phase_boundary(1.0, -0.5 / 60000, 0.5, 60000)
        assert not b.has_equilibrium

    def test_started_at_floor_all_equilibrium(self):
        b = metrics.phase_boundary(0.5, -1e-5, 0.5, 1000)
        assert b.segment(metrics.EQUILIBRIUM) == (0, 1001)
        assert b.segment(metrics.TRANSIENT) == (0, 0)

    def test_phases_partition_the_run(self):
        b = metrics.phase_boundary(1.0, -1e-5, 0.5, 60000)
        steps = np.arange(0, 60001)
        in_t = (steps >= b.transient_start) & (steps < b.transient_end)
        in_e = (steps >= b.equilibrium_start) & (steps < b.equilibrium_end)
        assert np.all(in_t ^ in_e)


class TestPhaseNrmsd:
    series = [
        metrics.StepMetrics(step=5, informed_rmsd=0.1, accuracy_rmsd=0.02),
        metrics.StepMetrics(step=10, informed_rmsd=0.3, accuracy_rmsd=0.04),
        metrics.StepMetrics(step=15, informed_rmsd=0.5, accuracy_rmsd=0.06),
    ]

    def test_constant_series(self):
        flat = [metrics.StepMetrics(k, 0.2, 0.1) for k in (5, 10, 15)]
        b = metrics.phase_boundary(1.0, 0.0, 0.5, 15)
        s = metrics.phase_nrmsd(flat, b, metrics.TRANSIENT)
        assert s.informed_nrmsd == pytest.approx(0.2)
        assert s.accuracy_nrmsd == pytest.approx(0.1)

    def test_two_point_mean(self):
        b = metrics.PhaseBoundary(0, 12, 12, 16)
        s = metrics.phase_nrmsd(self.series, b, metrics.TRANSIENT)
        assert s.informed_nrmsd == pytest.approx(0.2)

    def test_whole_run_phase(self):
        b = metrics.phase_boundary(1.0, 0.0, 0.5, 15)
        s = metrics.phase_nrmsd(self.series, b, metrics.TRANSIENT)
        assert s.informed_nrmsd == pytest.approx(0.3)

    def test_empty_segment_rejected(self):
        b = metrics.phase_boundary(1.0, 0.0, 0.5, 15)
        with pytest.raises(ValueError, match="no recorded steps"):
            metrics.phase_nrmsd(self.series, b, metrics.EQUILIBRIUM)

    def test_segment_mean_matches(self):
        steps = np.array([m.step for m in self.series])
        vals = np.array([m.informed_rmsd for m in self.series])
        assert metrics.segment_mean(steps, vals, (0, 12)) == pytest.approx(0.2)


class TestNrmsdDifference:
    def test_equal_inputs(self):
        assert metrics.nrmsd_difference(0.2, 0.2) == 0.0

    def test_signed(self):
        assert metrics.nrmsd_difference(0.10, 0.15) == pytest.approx(-0.05)

    def test_antisymmetric(self):
        assert metrics.nrmsd_difference(0.3, 0.1) == -metrics.nrmsd_difference(0.1, 0.3)
