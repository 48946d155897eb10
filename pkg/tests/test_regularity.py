import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from surfgrow.field import Cylinder, FieldError, SpaceTimeField, TorusGrid, rescale_field
from surfgrow.fixtures import decaying_sine, decaying_sine_forcing, linear_chart, power_profile
from surfgrow.quantities import multiscale_profile
from surfgrow.regularity import (RegularityConfig, alpha_from_lambda, biparabolic_cover, box_dimension_estimate,
                                 campanato_estimate, contraction_check, cover_count, decay_trace,
                                 detect_singular_candidates, k0_and_r0, resample_refiner, resolvable,
                                 solver_refiner, verdicts_csv)
from surfgrow.solver import default_window, integrate_sgm

CFG = RegularityConfig()


@pytest.fixture(scope="module")
def small_run():
    A = 1e-3
    g = TorusGrid(64)
    forcing = decaying_sine_forcing(A)
    u = integrate_sgm(decaying_sine(A).u(g.x, -1.0), forcing, default_window(g))
    return u, forcing.to_field(g, u.times), forcing


def chart_field(n=128):
    g = TorusGrid(n)
    return SpaceTimeField.steady(linear_chart(g), g)


def segment(n=10_000):
    return np.c_[np.linspace(0, 1, n), np.zeros(n)]


class TestConfig:
    def test_defaults(self):
        assert CFG.delta1 == pytest.approx(0.1 ** 4 / 8 ** 4)
        assert CFG.delta2 == CFG.delta1
        assert CFG.alpha == 0.2 and CFG.eta == 0.0625
        assert RegularityConfig(delta1_star=1e-9).delta1 == 1e-9

    @pytest.mark.parametrize("kw", [{"lam": 0.0625}, {"theta": 0.1}, {"lam": 0.0}, {"delta0": 0.0},
                                    {"p": 1.5}, {"delta2_star": -1.0}])
    def test_invariants_enforced(self, kw):
        with pytest.raises(ValueError):
            RegularityConfig(**kw)

    def test_p_changes_eta(self):
        with pytest.raises(ValueError):
            RegularityConfig(p=2.0)  # eta_2 = 1/256 < 1/32
        assert RegularityConfig(p=2.0, lam=1e-3, theta=1e-3).eta == 1 / 256


class TestFormulas:
    def test_alpha(self):
        assert alpha_from_lambda(1 / 32) == 0.2
        assert alpha_from_lambda(1 / 4) == 0.5
        for bad in (0.5, 0.7, 0.0):
            with pytest.raises(ValueError):
                alpha_from_lambda(bad)

    def test_k0(self):
        assert k0_and_r0(0.1, 0.0, CFG) == (3, (1 / 32) ** 3)
        assert k0_and_r0(0.05, 0.05 ** 2, CFG)[0] == 3
        assert k0_and_r0(0.8, 0.0, CFG)[0] == 6
        assert k0_and_r0(0.0, 0.0, CFG)[0] == 3
        assert k0_and_r0(0.1, 0.0, CFG)[1] == 2.0 ** -15
        with pytest.raises(ValueError):
            k0_and_r0(-1.0, 0.0, CFG)

    @settings(max_examples=50, deadline=None)
    @given(s=st.floats(0.11, 1e6))
    def test_doubling_adds_one(self, s):
        x = math.log2(s / 0.1)
        if abs(x - round(x)) < 1e-6:
            return  # ceiling tie
        assert k0_and_r0(2 * s, 0.0, CFG)[0] == k0_and_r0(s, 0.0, CFG)[0] + 1


class TestContraction:
    def test_zero(self):
        g = TorusGrid(64)
        u = SpaceTimeField.steady(np.zeros(64), g)
        rep = contraction_check(u, None, CFG, refine=resample_refiner(u, None, (0, 0)))
        assert all(o["satisfied"] and o["G_small"] == 0 for o in rep.outcomes.values())

    def test_small_data(self, small_run):
        u, f, forcing = small_run
        rep = contraction_check(u, f, CFG, refine=solver_refiner(u, forcing, (0.0, 0.0)))
        assert all(o["satisfied"] for o in rep.outcomes.values())
        assert all(rep.hypotheses.values())
        assert rep.stamp == CFG.stamp

    def test_out_of_hypothesis(self):
        g = TorusGrid(64)
        u = SpaceTimeField.steady(5 * np.sin(g.x), g)
        rep = contraction_check(u, None, CFG, refine=resample_refiner(u, None, (0, 0)))
        assert not rep.hypotheses["G+F^1/2<=delta0"]
        assert not rep.in_hypothesis["lambda"]
        assert set(rep.outcomes) == {"lambda", "theta_U", "theta_L"}

    def test_unresolvable_without_refiner(self):
        u = chart_field()
        with pytest.raises(FieldError):
            contraction_check(u, None, CFG)


class TestDecayTrace:
    def test_zero(self):
        g = TorusGrid(64)
        u = SpaceTimeField.steady(np.zeros(64), g)
        tr = decay_trace(u, None, CFG, K=2, refine=resample_refiner(u, None, (0, 0)))
        assert [r.G for r in tr.rows] == [0, 0, 0]
        assert all(r.satisfied for r in tr.rows) and tr.slope is None

    def test_linear_chart(self):
        u = chart_field()
        tr = decay_trace(u, None, CFG, K=2, base=0.5, refine=resample_refiner(u, None, (0, 0)))
        for row in tr.rows:
            assert row.G == pytest.approx(row.scale, rel=1e-9)
            assert row.satisfied
        assert tr.slope == pytest.approx(math.log(1 / 32), rel=1e-6)
        assert [r.k for r in tr.rows] == [0, 1, 2]
        assert all(a.scale > b.scale for a, b in zip(tr.rows, tr.rows[1:]))

    def test_truncation(self):
        tr = decay_trace(chart_field(), None, CFG, K=3, base=0.5)
        assert tr.truncated_at == 0 and tr.rows == []
        g = TorusGrid(64)
        u = SpaceTimeField.steady(np.sin(g.x), g, -1, 1, 2000)
        tr = decay_trace(u, None, CFG, K=3)
        assert tr.truncated_at == 1 and len(tr.rows) == 1
        assert resolvable(u, Cylinder(0, 0, 1.0), CFG)
        assert not resolvable(u, Cylinder(0, 0, 1 / 32), CFG)

    def test_small_data_slope(self, small_run):
        u, f, forcing = small_run
        tr = decay_trace(u, f, CFG, K=2, refine=solver_refiner(u, forcing, (0.0, 0.0)))
        assert tr.truncated_at is None and len(tr.rows) == 3
        assert tr.slope <= math.log(0.5)
        assert all(r.satisfied for r in tr.rows)
        assert tr.to_csv().startswith("k,scale,G")

    def test_theta_variant_bounds(self, small_run):
        u, f, forcing = small_run
        tr = decay_trace(u, f, CFG, K=1, use_theta=True, refine=solver_refiner(u, forcing, (1.0, 0.0)),
                         center=(1.0, 0.0))
        row = tr.rows[1]
        assert row.bound_U == pytest.approx(row.bound_decay + tr.rows[0].U_quarter)
        assert row.bound_L == pytest.approx(row.bound_decay + tr.rows[0].L_quarter)

    def test_scale_covariance(self):
        g = TorusGrid(64)
        u = SpaceTimeField.steady(np.sin(g.x) + 0.3 * np.cos(2 * g.x), g)
        r = 0.5
        ur = rescale_field(u, r)
        a = decay_trace(ur, None, CFG, K=1, base=1.0, refine=resample_refiner(ur, None, (0, 0)))
        b = decay_trace(u, None, CFG, K=1, base=r, refine=resample_refiner(u, None, (0, 0)))
        for x, y in zip(a.rows, b.rows):
            assert x.G == pytest.approx(y.G, rel=1e-8)
            assert x.U_quarter == pytest.approx(y.U_quarter, rel=1e-8)


class TestCampanato:
    def test_linear_chart(self):
        res = campanato_estimate(chart_field())
        assert res.alpha == pytest.approx(1.0, abs=0.01) and not res.degenerate

    def test_power_profile(self):
        g = TorusGrid(4096)
        u = SpaceTimeField.steady(power_profile(g, 0.5), g)
        assert campanato_estimate(u).alpha == pytest.approx(0.5, abs=0.05)

    def test_constant(self):
        g = TorusGrid(64)
        res = campanato_estimate(SpaceTimeField.steady(np.full(64, 3.0), g))
        assert res.degenerate and res.alpha is None and res.C == 0.0

    @pytest.mark.parametrize("c", [0.01, 3.0, 1e4])
    def test_scale_invariance(self, c):
        g = TorusGrid(1024)
        u = SpaceTimeField.steady(power_profile(g, 0.5), g)
        assert campanato_estimate(u * c).alpha == pytest.approx(campanato_estimate(u).alpha, abs=0.01)

    def test_needs_three_radii(self):
        with pytest.raises(ValueError):
            campanato_estimate(chart_field(), radii=(0.2, 0.1))


class TestCandidates:
    def test_zero(self):
        g = TorusGrid(64)
        u = SpaceTimeField.steady(np.zeros(64), g)
        prof = multiscale_profile(u, None, [(0, 0), (1, 0)], [0.5, 0.25])
        assert detect_singular_candidates(prof, CFG)["candidates"] == []

    def test_small_data(self, small_run):
        u, f, _ = small_run
        centers = [(x, 0.0) for x in np.linspace(-2, 2, 5)]
        prof = multiscale_profile(u, f, centers, [0.25])
        out = detect_singular_candidates(prof, CFG)
        assert out["candidates"] == []
        assert out["alpha"] == 0.2

    def test_rough_profile(self):
        g = TorusGrid(1024)
        u = SpaceTimeField.steady(power_profile(g, 1 / 3), g)
        prof = multiscale_profile(u, None, [(0.0, 0.0), (1.5, 0.0)], [0.5, 0.25, 0.125, 0.0625])
        out = detect_singular_candidates(prof, CFG)
        assert (0.0, 0.0) in out["candidates"]
        v = [v for v in out["verdicts"] if v.center == (0.0, 0.0)][0]
        assert all(m > 0 for m in v.margins.values())
        # G_r stays bounded below at every tested scale
        assert min(q.G for q in prof.rows if q.cyl.x0 == 0.0) > CFG.delta0 / 2
        assert "regular" in verdicts_csv(out["verdicts"]).splitlines()[0]

    @settings(max_examples=20, deadline=None)
    @given(d0=st.floats(1e-3, 10.0), s1=st.floats(1e-9, 10.0), s2=st.floats(1e-9, 10.0),
           grow=st.floats(1.0, 100.0))
    def test_monotone_in_thresholds(self, d0, s1, s2, grow):
        g = TorusGrid(256)
        u = SpaceTimeField.steady(0.2 * power_profile(g, 0.5), g)
        prof = multiscale_profile(u, None, [(x, 0.0) for x in (-1.0, -0.3, 0.0, 0.4, 2.0)], [0.5, 0.25])
        small = RegularityConfig(delta0=d0, delta1_star=s1, delta2_star=s2)
        big = RegularityConfig(delta0=d0 * grow, delta1_star=s1 * grow, delta2_star=s2 * grow,
                               delta1=small.delta1 * grow, delta2=small.delta2 * grow)
        reg = lambda cfg: {v.center for v in detect_singular_candidates(prof, cfg)["verdicts"] if v.regular}
        assert reg(small) <= reg(big)


class TestCover:
    def test_empty(self):
        c = biparabolic_cover(np.zeros((0, 2)), 0.1, (1, 2))
        assert c.sums == {1: 0.0, 2: 0.0} and c.count == 0 and c.covers_all()

    def test_single_point(self):
        for cap in (0.1, 0.01):
            c = biparabolic_cover([[0.3, 0.2]], cap)
            assert c.count == 1 and c.sums[1] <= cap and c.covers_all()

    @pytest.mark.parametrize("cap", [0.5, 0.2, 0.1, 0.05, 0.02])
    def test_segment(self, cap):
        c = biparabolic_cover(segment(), cap, (1, 2))
        assert c.sums[1] == pytest.approx(0.5, abs=0.05)
        assert c.covers_all() and np.all(c.radii < cap)
        assert c.sums[2] <= c.sums[1]

    def test_random_cloud(self):
        pts = np.random.default_rng(4).random((500, 2)) * [1.0, 0.01]
        c = biparabolic_cover(pts, 0.2, (1, 2, 3))
        assert c.covers_all() and np.all(c.radii < 0.2)
        assert c.sums[1] >= c.sums[2] >= c.sums[3]
        assert [r["k"] for r in c.records()] == [1, 2, 3]

    def test_box_dimension(self):
        assert box_dimension_estimate([[0.0, 0.0]], [0.1, 0.05, 0.025]).dimension == pytest.approx(0, abs=0.05)
        seg = box_dimension_estimate(segment(), [0.1, 0.05, 0.025, 0.0125])
        assert seg.dimension == pytest.approx(1.0, abs=0.1)
        tseg = box_dimension_estimate(segment(20_000)[:, ::-1], np.geomspace(0.4, 0.2, 6))
        assert tseg.dimension == pytest.approx(4.0, abs=0.2)
        with pytest.raises(ValueError):
            box_dimension_estimate(segment(), [0.1, 0.05])

    def test_cover_count_oracle(self):
        # N(r) = ceil(1 / (2 r)) closed intervals of length 2r cover [0, 1]
        for r in (0.11, 0.07, 0.03):
            assert abs(cover_count(segment(), r) - math.ceil(1 / (2 * r))) <= 1
