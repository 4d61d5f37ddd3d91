import math
from dataclasses import replace

import numpy as np
import pytest

from models.geometry_env import (
    LinkEnvironment,
    LinkParams,
    ScenarioGeometry,
    approx_exponent_deviation,
    element_offsets,
    elevation_angle,
    exponent_at,
    irs_element_positions,
    los_probability,
    path_loss_exponent_approx,
    path_loss_exponent_exact,
)


@pytest.fixture
def geometry():
    return ScenarioGeometry(source_xy=(0.0, 0.0), dest_xy=(2000.0, 0.0), uav_xy=(750.0, 0.0), height=350.0, h_min=100.0, h_max=1000.0)


@pytest.fixture
def link():
    return LinkParams(e=0.5, g=0.3, q=-1.5, v=3.5, eta=0.009, K=5.0)


@pytest.fixture
def env(link):
    return LinkEnvironment(uplink=link, downlink=replace(link, eta=0.01))


class TestScenarioGeometry:
    def test_offsets_and_distances(self, geometry):
        assert geometry.offset_u == pytest.approx(750.0)
        assert geometry.offset_d == pytest.approx(1250.0)
        assert geometry.span == pytest.approx(2000.0)
        assert float(geometry.slant_distance("u")) == pytest.approx(math.hypot(750.0, 350.0))
        assert float(geometry.slant_distance("d", 100.0)) == pytest.approx(math.hypot(1250.0, 100.0))

    def test_with_distance_moves_along_axis(self, geometry):
        moved = geometry.with_distance(300.0)
        assert moved.uav_xy == pytest.approx((300.0, 0.0))
        assert moved.offset_d == pytest.approx(1700.0)

    def test_height_outside_bounds(self, geometry):
        with pytest.raises(ValueError, match="outside"):
            replace(geometry, height=1200.0)

    def test_unknown_link(self, geometry):
        with pytest.raises(ValueError, match="Unknown link"):
            geometry.horizontal_offset("x")


class TestElevationAndLos:
    def test_elevation(self):
        assert elevation_angle(100.0, 100.0) == pytest.approx(math.pi / 4)
        assert elevation_angle(100.0, 0.0) == pytest.approx(math.pi / 2)

    def test_undefined_elevation(self):
        with pytest.raises(ValueError):
            elevation_angle(0.0, 0.0)

    def test_los_at_midpoint(self, env, link):
        # expit(−ln e) = 1/(1 + e)
        assert los_probability(link.e, env, "u") == pytest.approx(1.0 / (1.0 + link.e))

    def test_los_monotone(self, env):
        theta = np.linspace(0.0, math.pi / 2, 50)
        p = los_probability(theta, env, "u")
        assert np.all(np.diff(p) > 0)
        assert np.all((p > 0) & (p < 1))

    def test_exponent_range(self, env, link):
        theta = np.linspace(0.0, math.pi / 2, 50)
        alpha = path_loss_exponent_exact(theta, env, "u")
        assert np.all(alpha <= link.v)
        assert np.all(alpha >= link.q + link.v)


class TestAltitudeApproximation:
    def test_exact_at_ground_level(self, env):
        for z in (50.0, 750.0, 1250.0):
            assert path_loss_exponent_approx(0.0, z, env, "u") == pytest.approx(exponent_at(0.0, z, env, "u"), rel=1e-12)

    def test_close_to_exact_on_height_grid(self, env):
        deviation = approx_exponent_deviation(env, "u", offsets=(300.0, 750.0, 1250.0), heights=np.arange(100.0, 1001.0, 10.0))
        assert set(deviation) == {300.0, 750.0, 1250.0}
        assert max(deviation.values()) < 0.05

    def test_degree_mode_rescales_slope(self, link):
        rad = LinkEnvironment(uplink=link, downlink=link)
        deg = LinkEnvironment(uplink=link, downlink=link, angle_unit="deg")
        assert deg.coefficients("u").B == pytest.approx(rad.coefficients("u").B * 180.0 / math.pi)
        assert deg.coefficients("u").C == pytest.approx(rad.coefficients("u").C * (180.0 / math.pi) ** 2)
        assert deg.coefficients("u").A == pytest.approx(rad.coefficients("u").A)

    def test_zero_offset_rejected(self, env):
        with pytest.raises(ValueError):
            path_loss_exponent_approx(100.0, 0.0, env, "u")


class TestLinkParams:
    def test_varsigma(self, link):
        assert link.varsigma == pytest.approx(0.5 * math.exp(0.15))

    @pytest.mark.parametrize("field, value", [("eta", 0.0), ("omega", -1.0), ("K", -0.5), ("g", 0.0)])
    def test_invalid(self, link, field, value):
        with pytest.raises(ValueError):
            replace(link, **{field: value})


class TestIrsElementPositions:
    def test_centred_and_spaced(self, geometry):
        xy = irs_element_positions(geometry, 10, 0.05)
        np.testing.assert_allclose(xy.mean(axis=0), geometry.uav_xy, atol=1e-9)
        np.testing.assert_allclose(np.diff(xy[:, 0]), 0.05)

    def test_offsets(self, geometry):
        off_u, off_d = element_offsets(geometry, 4, 1.0)
        np.testing.assert_allclose(off_u + off_d, geometry.span)
        assert off_u.shape == (4,)
