import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from bayescpf import fre
from bayescpf.swarm import EstimatePacket


def packet(estimate, confidence, sender=0, step=0):
    return EstimatePacket(sender=sender, estimate=estimate, confidence=confidence, step=step)


class TestLocalEstimate:
    def test_perfect_sensor_identity(self):
        assert fre.local_estimate(55, 100, 1.0) == 0.55

    def test_lower_clamp(self):
        # (0.1 + 0.8 - 1) / 0.6 < 0
        assert fre.local_estimate(10, 100, 0.8) == 0.0

    def test_interior_value(self):
        assert fre.local_estimate(30, 100, 0.8) == pytest.approx(1.0 / 6.0, abs=1e-12)

    def test_upper_clamp(self):
        assert fre.local_estimate(95, 100, 0.7) == 1.0

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError, match="t must be"):
            fre.local_estimate(0, 0, 0.8)
        with pytest.raises(ValueError, match="n must be"):
            fre.local_estimate(5, 3, 0.8)
        with pytest.raises(ValueError, match="assumed accuracy"):
            fre.local_estimate(1, 2, 0.5)

    @given(
        t=st.integers(1, 500),
        frac=st.floats(0.0, 1.0),
        b=st.floats(0.5 + 1e-6, 1.0),
    )
    def test_output_in_unit_interval(self, t, frac, b):
        n = int(round(frac * t))
        assert 0.0 <= fre.local_estimate(n, t, b) <= 1.0

    def test_grid_search_likelihood_oracle(self):
        # The closed form must maximize the count likelihood over a fill grid.
        rng = np.random.default_rng(99)
        fills = np.linspace(0.0, 1.0, 1001)
        for _ in range(100):
            t = int(rng.integers(1, 1000))
            n = int(rng.integers(0, t + 1))
            b = float(rng.uniform(0.51, 1.0))
            q = np.clip(b * fills + (1.0 - b) * (1.0 - fills), 1e-12, 1 - 1e-12)
            ll = stats.binom.logpmf(n, t, q)
            best = fills[int(np.argmax(ll))]
            assert abs(fre.local_estimate(n, t, b) - best) <= 0.002


class TestLocalConfidence:
    def test_interior_perfect_sensor(self):
        est = fre.local_estimate(50, 100, 1.0)
        assert fre.local_confidence(50, 100, 1.0, est) == pytest.approx(400.0)

    def test_zero_branch(self):
        est = fre.local_estimate(0, 100, 0.8)
        assert est == 0.0
        assert fre.local_confidence(0, 100, 0.8, est) == pytest.approx(56.25)

    def test_interior_scaling_with_t(self):
        e1 = fre.local_estimate(50, 100, 1.0)
        e2 = fre.local_estimate(100, 200, 1.0)
        a1 = fre.local_confidence(50, 100, 1.0, e1)
        a2 = fre.local_confidence(100, 200, 1.0, e2)
        assert a2 == pytest.approx(2.0 * a1)
        assert a2 == pytest.approx(800.0)

    def test_boundary_at_perfect_accuracy_stays_finite(self):
        # n = 0 with b = 1 makes the printed quotient 0/0; the cancelled form
        # gives the limit t.
        est = fre.local_estimate(0, 7, 1.0)
        assert fre.local_confidence(0, 7, 1.0, est) == pytest.approx(7.0)
        est = fre.local_estimate(7, 7, 1.0)
        assert fre.local_confidence(7, 7, 1.0, est) == pytest.approx(7.0)

    def test_degenerate_interior_counts_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            fre.local_confidence(0, 10, 0.9, 0.5)

    def test_split_accuracy_variant(self):
        # Squared factors at the newer value, linear factors at the older one.
        n, t, b_old, b_new = 0, 100, 0.8, 0.9
        est = fre.local_estimate(n, t, b_old)
        nu = 2 * b_old - 1
        expected = (nu**2 * (t * b_new**2 - nu * t)) / (b_new**2 * (b_old - 1) ** 2)
        got = fre.local_confidence(n, t, b_old, est, b_current=b_new)
        assert got == pytest.approx(expected, rel=1e-12)

    @settings(max_examples=200)
    @given(
        t=st.integers(1, 1000),
        frac=st.floats(0.0, 1.0),
        b=st.floats(0.5 + 1e-6, 1.0),
    )
    def test_non_negative(self, t, frac, b):
        n = int(round(frac * t))
        est = fre.local_estimate(n, t, b)
        assert fre.local_confidence(n, t, b, est) >= 0.0


class TestSocialFuse:
    def test_empty_is_zero_belief(self):
        assert fre.social_fuse([]) == fre.SocialBelief(0.0, 0.0)

    def test_single_packet_passthrough(self):
        s = fre.social_fuse([packet(0.7, 10.0)])
        assert (s.estimate, s.confidence) == (0.7, 10.0)

    def test_weighted_average(self):
        s = fre.social_fuse([packet(0.6, 10.0), packet(0.8, 30.0)])
        assert s.estimate == pytest.approx(0.75)
        assert s.confidence == pytest.approx(40.0)

    def test_zero_confidence_packets_fuse_to_empty(self):
        s = fre.social_fuse([packet(0.4, 0.0), packet(0.9, 0.0)])
        assert (s.estimate, s.confidence) == (0.0, 0.0)

    @given(
        st.lists(
            st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 100.0)),
            min_size=1,
            max_size=8,
        )
    )
    def test_permutation_invariant(self, pairs):
        pkts = [packet(x, a, sender=i) for i, (x, a) in enumerate(pairs)]
        fwd = fre.social_fuse(pkts)
        rev = fre.social_fuse(list(reversed(pkts)))
        assert fwd.confidence == pytest.approx(rev.confidence, abs=1e-9)
        assert fwd.estimate == pytest.approx(rev.estimate, abs=1e-9)


class TestInformedEstimate:
    def test_no_neighbors_returns_local(self):
        local = fre.LocalBelief(0.42, 7.0)
        assert fre.informed_estimate(local, fre.SocialBelief(0.0, 0.0)) == 0.42

    def test_weighted_mix(self):
        local = fre.LocalBelief(0.5, 10.0)
        social = fre.SocialBelief(0.9, 30.0)
        assert fre.informed_estimate(local, social) == pytest.approx(0.8)

    def test_fixed_point_when_equal(self):
        local = fre.LocalBelief(0.37, 3.0)
        social = fre.SocialBelief(0.37, 11.0)
        assert fre.informed_estimate(local, social) == pytest.approx(0.37)

    def test_zero_total_confidence_passthrough(self):
        local = fre.LocalBelief(0.9, 0.0)
        assert fre.informed_estimate(local, fre.SocialBelief(0.0, 0.0)) == 0.9

    @given(
        xl=st.floats(0.0, 1.0),
        xs=st.floats(0.0, 1.0),
        a=st.floats(0.0, 50.0),
        b=st.floats(0.0, 50.0),
    )
    def test_bracketed_by_inputs(self, xl, xs, a, b):
        out = fre.informed_estimate(fre.LocalBelief(xl, a), fre.SocialBelief(xs, b))
        if a + b > 0:
            assert min(xl, xs) - 1e-12 <= out <= max(xl, xs) + 1e-12
        else:
            assert out == xl


class TestWmaReference:
    def history(self, values, capacity=16):
        h = fre.InformedHistory(capacity)
        for v in values:
            h.push(v)
        return h

    def test_window_of_one_is_latest(self):
        h = self.history([0.2, 0.8])
        assert fre.wma_reference(h, 1) == 0.8

    def test_two_point_example(self):
        # newest 0.4, older 0.6 -> (0.4 + 2*0.6) / 3
        h = self.history([0.6, 0.4])
        assert fre.wma_reference(h, 2) == pytest.approx(1.6 / 3.0)

    def test_constant_history_is_constant(self):
        h = self.history([0.3] * 10)
        for window in (1, 3, 10, 50):
            assert fre.wma_reference(h, window) == pytest.approx(0.3)

    def test_window_clipped_to_length(self):
        h = self.history([0.6, 0.4])
        assert fre.wma_reference(h, 99) == fre.wma_reference(h, 2)

    def test_empty_history_rejected(self):
        with pytest.raises(ValueError, match="empty history"):
            fre.wma_reference(fre.InformedHistory(4), 1)

    def test_ring_eviction(self):
        h = self.history([1.0, 2.0, 3.0, 4.0, 5.0], capacity=3)
        assert list(h.newest_first()) == [5.0, 4.0, 3.0]

    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=12))
    def test_output_within_history_range(self, values):
        h = self.history(values)
        out = fre.wma_reference(h, len(values))
        assert min(values) - 1e-12 <= out <= max(values) + 1e-12


def test_guard_accuracy():
    assert fre.guard_accuracy(0.5) == fre.MIN_ASSUMED_ACCURACY
    assert fre.guard_accuracy(0.2) == fre.MIN_ASSUMED_ACCURACY
    assert fre.guard_accuracy(0.9) == 0.9
