import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from translume.errors import ConfigError, HorizonSingularity, NotTransluminal
from translume.grating import (
    GratingConfig,
    HorizonKind,
    comoving_params,
    find_horizons,
    local_speed,
    local_speed_slope,
    refractive_profile,
    trace_ray,
)


@st.composite
def transluminal_configs(draw):
    eps_b = draw(st.floats(1.0, 3.0))
    alpha = draw(st.floats(0.01, 0.2)) * eps_b
    g = draw(st.floats(0.3, 3.0))
    c0 = draw(st.floats(0.5, 2.0))
    u = draw(st.floats(0.05, 0.95))
    lo, hi = c0 / (eps_b + 2 * alpha), c0 / (eps_b - 2 * alpha)
    c_g = lo + u * (hi - lo)
    return GratingConfig(eps_b=eps_b, alpha=alpha, g=g, Omega=c_g * g, c0=c0, d=10.0)


class TestConfig:
    @pytest.mark.parametrize(
        "changes",
        [dict(alpha=-0.1), dict(eps_b=0.1, alpha=0.05), dict(g=0.0), dict(Omega=-1.0),
         dict(d=-1.0), dict(c0=0.0), dict(alpha=math.nan), dict(hbar=0.0)],
    )
    def test_rejects(self, changes):
        with pytest.raises(ConfigError):
            GratingConfig(**changes)

    def test_speed_range_and_flag(self):
        cfg = GratingConfig(eps_b=1.0, alpha=0.05, g=1.0, Omega=1.0)
        lo, hi = cfg.speed_range
        assert lo == pytest.approx(1 / 1.1) and hi == pytest.approx(1 / 0.9)
        assert cfg.transluminal
        assert not cfg.replace(Omega=2.0).transluminal
        assert not cfg.replace(alpha=0.0).transluminal

    def test_grating_speed_at_extreme_is_not_transluminal(self):
        cfg = GratingConfig(eps_b=1.0, alpha=0.05, g=1.0, Omega=1 / 1.1)
        assert not cfg.transluminal
        with pytest.raises(NotTransluminal):
            find_horizons(cfg)

    def test_replace_validates(self):
        with pytest.raises(ConfigError):
            GratingConfig().replace(alpha=-1)


class TestProfile:
    def test_profile_and_speed(self):
        cfg = GratingConfig(eps_b=1.2, alpha=0.1, g=2.0)
        assert refractive_profile(cfg, 0.0) == pytest.approx(1.4)
        assert local_speed(cfg, math.pi / 2) == pytest.approx(1 / 1.0)

    def test_slope_matches_finite_difference(self):
        cfg = GratingConfig(eps_b=1.2, alpha=0.1, g=2.0, c0=1.5)
        X, h = 0.37, 1e-6
        fd = (local_speed(cfg, X + h) - local_speed(cfg, X - h)) / (2 * h)
        assert local_speed_slope(cfg, X) == pytest.approx(fd, rel=1e-7)

    def test_comoving_params_away_from_horizon(self):
        cfg = GratingConfig(eps_b=1.0, alpha=0.05, g=1.0, Omega=1.0)
        eps_mov, mu_mov, xi = comoving_params(cfg, 0.0)
        eps = 1.1
        denom = 1 - (eps) ** 2
        assert eps_mov == pytest.approx(eps / denom)
        assert mu_mov == pytest.approx(eps_mov)
        assert xi == pytest.approx(-eps * eps / denom)

    def test_comoving_params_singular_at_horizon(self):
        cfg = GratingConfig(eps_b=1.0, alpha=0.05, g=1.0, Omega=1.0)
        with pytest.raises(HorizonSingularity):
            comoving_params(cfg, math.pi / 2)


class TestHorizons:
    def test_fig_config(self, thermal_cfg):
        hs = find_horizons(thermal_cfg)
        assert len(hs) == 2
        assert hs.dispersal.X == pytest.approx(math.pi / 2, abs=1e-12)
        assert hs.accumulation.X == pytest.approx(3 * math.pi / 2, abs=1e-12)
        assert hs.dispersal.dcdX > 0 > hs.accumulation.dcdX

    @settings(max_examples=60, deadline=None)
    @given(transluminal_configs())
    def test_roots_and_classification(self, cfg):
        hs = find_horizons(cfg)
        assert len(hs) == 2
        assert {h.kind for h in hs} == {HorizonKind.ACCUMULATION, HorizonKind.DISPERSAL}
        for h in hs:
            assert 0 <= h.X < cfg.period
            assert abs(local_speed(cfg, h.X) - cfg.c_g) < 1e-12 * cfg.c0
            assert (h.dcdX > 0) == (h.kind == HorizonKind.DISPERSAL)


class TestRays:
    def test_unmodulated_ray_is_straight(self):
        cfg = GratingConfig(eps_b=1.5, alpha=0.0, g=1.0, Omega=0.3)
        ray = trace_ray(cfg, 0.4, 1.0, 30.0)
        expected = 0.4 + (ray.t - 1.0) / 1.5
        assert np.max(np.abs(ray.x - expected)) < 1e-10 * 30
        assert not ray.stalled

    def test_rays_collect_at_accumulation_horizon(self, thermal_cfg):
        acc = find_horizons(thermal_cfg).accumulation.X
        for x0 in (0.2, 1.0, 2.5, 4.0):
            ray = trace_ray(thermal_cfg, x0, 0.0, 400.0)
            gap = (ray.X[-1] - acc + math.pi) % (2 * math.pi) - math.pi
            assert abs(gap) < 1e-3

    def test_end_time_validation(self, thermal_cfg):
        with pytest.raises(ValueError):
            trace_ray(thermal_cfg, 0.0, 1.0, 1.0)

    def test_samples_are_lab_frame(self, thermal_cfg):
        ray = trace_ray(thermal_cfg, 0.3, 0.0, 5.0)
        t, x = ray.samples()[-1]
        assert x == pytest.approx(ray.X[-1] + thermal_cfg.c_g * t)
