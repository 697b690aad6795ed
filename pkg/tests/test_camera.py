import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rsacoustic.camera import (PRESETS, SensorGeometry, ShutterSchedule, ShutterTiming,
                               captured_fraction,
                               make_schedule, moving_mean_response, pixel_displacement, preset)
from rsacoustic.errors import ConfigurationError, TimingError

# Calculated captured fraction (%) per phone, as tabulated for the ten test devices.
TABLE_ETA = {
    "pixel1": 72, "pixel2": 95, "pixel3": 95, "pixel5": 56, "galaxy_s7": 72,
    "galaxy_s8plus": 72, "galaxy_s20plus": 56, "iphone7": 70, "iphone8plus": 70,
    "iphone12pro": 40,
}


class TestCapturedFraction:
    def test_pixel2(self):
        t = ShutterTiming.from_rates(1e-3, 34000, 30)
        assert captured_fraction(t, 1080) == pytest.approx(0.953, abs=5e-4)

    def test_pixel1(self):
        t = ShutterTiming.from_rates(1e-3, 45000, 30)
        assert captured_fraction(t, 1080) == pytest.approx(0.72)

    def test_iphone7(self):
        t = ShutterTiming.from_rates(1e-3, 92000, 60)
        assert captured_fraction(t, 1080) == pytest.approx(0.704, abs=5e-4)

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_presets_round_to_table(self, name):
        geom, timing = preset(name)
        assert round(100 * captured_fraction(timing, geom.rows)) == TABLE_ETA[name]

    def test_inconsistent_timing(self):
        t = ShutterTiming.from_rates(1e-3, 20000, 30)
        with pytest.raises(TimingError):
            captured_fraction(t, 1080)

    def test_schedule_invariance(self):
        geom, t = preset("pixel2")
        eta = captured_fraction(t, 1080)
        for mode in ("sequential", "random-coded"):
            make_schedule(t, 1080, mode, 7)
            assert captured_fraction(t, 1080) == eta


class TestPixelDisplacement:
    geom = SensorGeometry(1080, 1920, focal_length=5.0, distance=100.0)

    @pytest.mark.parametrize("mode", ["lens", "body"])
    def test_zero(self, mode):
        assert pixel_displacement(self.geom, 0.0, mode) == 0.0

    def test_lens_body_ratio(self):
        ratio = pixel_displacement(self.geom, 10, "lens") / pixel_displacement(self.geom, 10, "body")
        assert ratio == pytest.approx(21.0)

    def test_eight_pixel_observation(self):
        # 22 um of lens travel at d = 10 cm gives ~8 px on the default 1080p sensor
        assert pixel_displacement(self.geom, 22.0, "lens") == pytest.approx(8.0, abs=0.01)
        assert 8 / 1.05 == pytest.approx(7.62, abs=0.005)

    @given(st.floats(0.1, 100), st.integers(2, 4000))
    def test_linear_in_amplitude_and_columns(self, A, N):
        g = SensorGeometry(100, N)
        g2 = SensorGeometry(100, 2 * N)
        assert pixel_displacement(g, 2 * A) == pytest.approx(2 * pixel_displacement(g, A))
        assert pixel_displacement(g2, A) == pytest.approx(2 * pixel_displacement(g, A))

    def test_distance_insensitivity(self):
        near = pixel_displacement(SensorGeometry(10, 10, distance=300.0), 10)
        far = pixel_displacement(SensorGeometry(10, 10, distance=10000.0), 10)
        assert abs(near - far) / far < 0.02

    def test_lens_exceeds_body(self):
        assert pixel_displacement(self.geom, 1e-3, "lens") > pixel_displacement(self.geom, 1e-3, "body")


class TestMovingMean:
    def test_dc(self):
        assert moving_mean_response(1e-3, 1e-3 / 200, 0.0) == 1.0

    def test_first_null(self):
        assert moving_mean_response(1e-3, 1e-3 / 200, 1000.0) == pytest.approx(0.0, abs=1e-12)

    def test_half_null_sinc_limit(self):
        assert moving_mean_response(1e-3, 1e-3 / 2000, 500.0) == pytest.approx(2 / np.pi, abs=1e-3)

    def test_nulls_at_multiples(self):
        step = 1e-3 / 136
        f = np.arange(1, 60) * 1000.0
        f = f[f < 0.5 / step]
        np.testing.assert_allclose(moving_mean_response(1e-3, step, f), 0.0, atol=1e-9)

    def test_non_integer_length(self):
        with pytest.raises(ConfigurationError):
            moving_mean_response(1e-3, 3e-6, 100.0)

    @given(st.floats(0, 68000))
    def test_bounded(self, f):
        h = moving_mean_response(1e-3, 1e-3 / 136, f)
        assert 0.0 <= h <= 1.0


class TestSchedule:
    t = ShutterTiming.from_rates(1e-3, 34000, 30)

    def test_sequential_identity(self):
        s = make_schedule(self.t, 1080)
        for k in (0, 5, 100):
            np.testing.assert_array_equal(s.order(k), np.arange(1080))

    def test_random_deterministic(self):
        a = make_schedule(self.t, 1080, "random-coded", 12345)
        b = make_schedule(self.t, 1080, "random-coded", 12345)
        for k in range(3):
            np.testing.assert_array_equal(a.order(k), b.order(k))

    def test_random_bijection(self):
        s = make_schedule(self.t, 1080, "random-coded", 99)
        for k in range(4):
            np.testing.assert_array_equal(np.sort(s.order(k)), np.arange(1080))
            pos = s.positions(k)
            np.testing.assert_array_equal(s.order(k)[pos], np.arange(1080))

    def test_frames_independent(self):
        s = make_schedule(self.t, 1080, "random-coded", 99)
        assert not np.array_equal(s.order(0), s.order(1))

    def test_seed_changes_order(self):
        a = make_schedule(self.t, 64, "random-coded", 1).order(0)
        b = make_schedule(self.t, 64, "random-coded", 2).order(0)
        assert not np.array_equal(a, b)


class TestTimingValidation:
    def test_exposure_must_be_commensurate(self):
        with pytest.raises(ConfigurationError):
            ShutterTiming(1.0001e-3, 1 / 34000, 30)

    def test_geometry(self):
        with pytest.raises(ConfigurationError):
            SensorGeometry(1, 10)
        with pytest.raises(ConfigurationError):
            SensorGeometry(10, 10, focal_length=5, distance=4)

    def test_step(self):
        t = ShutterTiming.from_rates(1e-3, 34000, 30)
        assert t.exposure_steps == 136
        assert t.steps_per_row == 4


class TestSchedulePermutation:
    @given(st.integers(1, 300), st.integers(0, 2 ** 32 - 1), st.integers(0, 1000))
    @settings(max_examples=40, deadline=None)
    def test_random_coded_is_permutation(self, rows, seed, k):
        s = ShutterSchedule(rows, "random-coded", seed)
        order = s.order(k)
        np.testing.assert_array_equal(np.sort(order), np.arange(rows))
        np.testing.assert_array_equal(s.positions(k)[order], np.arange(rows))
        np.testing.assert_array_equal(order, ShutterSchedule(rows, "random-coded", seed).order(k))
