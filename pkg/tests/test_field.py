import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from surfgrow.field import (Cylinder, FieldError, SpaceTimeField, TimeGrid, TorusGrid, ball_integral,
                            cylinder_average, cylinder_integral, fourier_resample, rescale_field,
                            sup_over_times, trig_interpolate)
from surfgrow.fixtures import linear_chart, random_bandlimited


def steady(fn, n=64):
    g = TorusGrid(n)
    return SpaceTimeField.steady(fn, g)


class TestGrids:
    @pytest.mark.parametrize("n", [7, 63, 4, 0])
    def test_rejects_bad_point_counts(self, n):
        with pytest.raises(FieldError, match="even"):
            TorusGrid(n)

    def test_spacing_and_wavenumbers(self):
        g = TorusGrid(16, 4.0)
        assert g.dx == 0.25
        assert g.wavenumbers[1] == pytest.approx(2 * math.pi / 4.0)
        assert g.wavenumbers.size == 9

    def test_chart_is_centred(self):
        g = TorusGrid(32)
        c = g.chart(1.0)
        assert c.min() >= 1.0 - math.pi - 1e-12 and c.max() < 1.0 + math.pi

    def test_time_grid_spanning(self):
        tg = TimeGrid.spanning(-1.0, 1.0, 1e-3)
        assert tg.n_steps == 2000
        assert tg.t_end == pytest.approx(1.0)
        with pytest.raises(FieldError):
            TimeGrid.spanning(0.0, 1.0, 0.3)

    def test_cylinder(self):
        c = Cylinder(0.1, 0.2, 0.5)
        assert c.volume == pytest.approx(4 * 0.5 ** 5)
        assert c.time_window() == pytest.approx((0.2 - 0.0625, 0.2 + 0.0625))
        with pytest.raises(FieldError):
            Cylinder(0, 0, 0)
        with pytest.raises(FieldError):
            Cylinder(0, 0, 4.0).check_embeds(TorusGrid(16))


class TestField:
    def test_samples_are_read_only(self):
        u = steady(np.sin)
        with pytest.raises(ValueError):
            u.samples[0, 0] = 1.0

    def test_rejects_non_finite(self):
        g = TorusGrid(8)
        with pytest.raises(FieldError):
            SpaceTimeField(g, TimeGrid(0, 1, 1), np.full((2, 8), np.nan))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(FieldError):
            SpaceTimeField(TorusGrid(8), TimeGrid(0, 1, 1), np.zeros((3, 8)))

    def test_derivatives(self):
        g = TorusGrid(32)
        u = SpaceTimeField.steady(np.sin, g)
        assert np.max(np.abs(u.derivative(1).samples - np.cos(g.x))) < 1e-12
        v = SpaceTimeField.steady(lambda x: np.sin(2 * x), g)
        assert np.max(np.abs(v.derivative(4).samples - 16 * np.sin(2 * g.x))) < 1e-11
        c = SpaceTimeField.steady(np.full(32, 3.0), g)
        assert np.max(np.abs(c.derivative(2).samples)) < 1e-14

    def test_slice_interpolates_linearly(self):
        g = TorusGrid(8)
        u = SpaceTimeField.from_function(lambda x, t: t + 0 * x, g, TimeGrid(0, 1, 2))
        assert u.slice_at(0.25) == pytest.approx(np.full(8, 0.25))


class TestInterpolation:
    def test_exact_on_band_limited(self):
        g = TorusGrid(48)
        rng = np.random.default_rng(1)
        u = random_bandlimited(g, TimeGrid(0, 1, 1), rng, max_mode=15)
        x = rng.uniform(-5, 5, 200)
        got = trig_interpolate(g, u.spectrum[0], x)
        k = np.arange(16)
        # rebuild the field directly from its modes at the off-grid points
        coef = np.fft.rfft(u.samples[0])[:16] / 48
        ref = np.real(coef[0]) + 2 * np.real(coef[1:, None] * np.exp(1j * k[1:, None] * x)).sum(axis=0)
        assert np.max(np.abs(got - ref)) < 1e-12

    def test_nyquist_mode_is_a_cosine(self):
        g = TorusGrid(8)
        row = np.cos(4 * g.x)
        got = trig_interpolate(g, np.fft.rfft(row), np.array([0.1, 0.3]))
        assert got == pytest.approx(np.cos(4 * np.array([0.1, 0.3])), abs=1e-12)

    def test_resample_round_trip(self):
        g = TorusGrid(16)
        row = np.sin(g.x) + 0.3 * np.cos(3 * g.x)
        up = fourier_resample(row, 64)
        assert fourier_resample(up, 16) == pytest.approx(row, abs=1e-14)


class TestQuadrature:
    def test_constant_average(self):
        u = steady(np.full(64, 3.0))
        assert cylinder_average(u, Cylinder(0, 0, 0.5), 1.0, absolute=False) == pytest.approx(3.0, rel=1e-13)

    def test_cos_cubed_oracle(self):
        u = steady(np.cos)
        got = cylinder_average(u, Cylinder(0, 0, 0.5), 3.0)
        assert got == pytest.approx(oracles.AVG_ABS_COS3_HALF, rel=1e-6)
        fine = cylinder_average(u, Cylinder(0, 0, 0.5), 3.0, density=32)
        assert fine == pytest.approx(oracles.AVG_ABS_COS3_HALF, rel=1e-9)

    def test_odd_integrand_vanishes(self):
        u = steady(linear_chart(TorusGrid(128)), n=128)
        assert abs(cylinder_average(u, Cylinder(0, 0, 0.4), 1.0, absolute=False)) < 1e-14

    def test_ball_integrals(self):
        assert ball_integral(steady(np.ones(64)), 0, 0.5, 0.0) == pytest.approx(1.0, rel=1e-14)
        assert ball_integral(steady(np.sin), 0, 0.5, 0.0, 2.0) == pytest.approx(oracles.BALL_SIN2_HALF, rel=1e-12)
        u = steady(linear_chart(TorusGrid(128)), n=128)
        assert ball_integral(u, 0, 0.5, 0.0, 2.0) == pytest.approx(2 * 0.5 ** 3 / 3, rel=1e-12)

    def test_mean_removal(self):
        g = TorusGrid(64)
        u = random_bandlimited(g, TimeGrid(-1, 0.01, 200), np.random.default_rng(3))
        cyl = Cylinder(0.3, 0.1, 0.7)
        m = cylinder_average(u, cyl, 1.0, absolute=False)
        assert abs(cylinder_average(u - m, cyl, 1.0, absolute=False)) < 1e-12

    def test_clipping_flag(self):
        u = SpaceTimeField.steady(np.sin, TorusGrid(32), 0.0, 1.0, 10)
        assert cylinder_integral(u, Cylinder(0, 0.5, 0.5))[1] is False
        assert cylinder_integral(u, Cylinder(0, 0.01, 0.5))[1] is True
        assert cylinder_integral(u, Cylinder(0, 0.99, 0.5))[1] is True
        with pytest.raises(FieldError):
            cylinder_integral(u, Cylinder(0, 3.0, 0.5))

    def test_sup_over_times_picks_earliest_slice(self):
        g = TorusGrid(64)
        u = SpaceTimeField.from_function(lambda x, t: np.exp(-t) * np.sin(x), g, TimeGrid.spanning(-1, 1, 1e-3))
        cyl = Cylinder(0, 0, 0.5)
        got = sup_over_times(u, cyl, lambda v, w: (v ** 2) @ w)
        # t0 - r^4 falls between stored slices: linear interpolation costs O(dt^2)
        assert got == pytest.approx(math.exp(0.125) * oracles.BALL_SIN2_HALF, rel=1e-6)

    def test_sup_on_constant_and_tiny_window(self):
        u = steady(np.full(64, 2.0))
        assert sup_over_times(u, Cylinder(0, 0, 0.5), lambda v, w: v @ w) == pytest.approx(2.0)
        assert sup_over_times(u, Cylinder(0, 0.1, 0.05), lambda v, w: v @ w) == pytest.approx(0.2)


class TestRescale:
    def test_identity_at_unit_scale(self):
        g = TorusGrid(64)
        u = random_bandlimited(g, TimeGrid(-1, 0.05, 40), np.random.default_rng(0))
        v = rescale_field(u, 1.0)
        assert np.max(np.abs(v.samples - u.samples)) < 1e-10

    def test_sin_half(self):
        u = steady(np.sin)
        v = rescale_field(u, 0.5)
        assert np.max(np.abs(v.samples[0] - np.sin(0.5 * v.grid.x))) < 1e-12

    def test_window_outside_source(self):
        u = SpaceTimeField.steady(np.sin, TorusGrid(16), 0.0, 1.0)
        with pytest.raises(FieldError):
            rescale_field(u, 0.5, times=TimeGrid(-100, 1, 2))


@settings(max_examples=25, deadline=None)
@given(r=st.floats(0.02, 0.25), x0=st.floats(-0.25, 0.25))
def test_linear_moments(r, x0):
    # the chart equals x on |x| <= 0.5, so avg |u - x0|^2 over B_r(x0) is r^2 / 3
    g = TorusGrid(128)
    u = SpaceTimeField.steady(linear_chart(g), g)
    avg = cylinder_average(u - x0, Cylinder(x0, 0, r), 2.0)
    assert avg == pytest.approx(r ** 2 / 3, rel=1e-8)
