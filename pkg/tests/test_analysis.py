"""Tests for sphere quadrature, areal data and the inequality checks.

Covers:
  - SphereGrid, round_gslash, area_radius, sphere_average
  - areal_data / areal_dr_residual / areal_second_fundamental_form on SdS
  - isoperimetric_check
  - sobolev_trace_check on a cylinder
  - null_sobolev_check on an expanding cone
  - hodge_residual of the exact SdS field and its second-order convergence
  - elliptic_check on flat space
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from cosmoweyl.core.analysis import (
    ConeField,
    CylinderField,
    SphereGrid,
    area_density,
    area_radius,
    areal_data,
    areal_dr_residual,
    areal_second_fundamental_form,
    elliptic_check,
    hodge_residual,
    isoperimetric_check,
    null_sobolev_check,
    round_gslash,
    sigma_induced_metric,
    sobolev_trace_check,
    sphere_average,
)
from cosmoweyl.core.belrobinson import sds_sample
from cosmoweyl.core.charts import ChartPoint, ChartTag, SdSGeometry, SdSParams, ef_steps, sds_metric_fn
from cosmoweyl.core.errors import DegenerateMetricError, ExpansionSignError
from cosmoweyl.core.weyl import NULL_GRAM, sds_weyl_field


# ======================================================================
# Fixtures & helpers
# ======================================================================

PARAMS = SdSParams(lam=3.0, m=0.1)


@pytest.fixture(scope="module")
def geo():
    return SdSGeometry(PARAMS)


@pytest.fixture(scope="module")
def grid():
    return SphereGrid(16, 8)


def _cos_theta(theta, phi):
    return np.cos(theta)


# ======================================================================
# Sphere quadrature
# ======================================================================

class TestSphereGrid:
    """Product quadrature on the round sphere."""

    def test_integrates_constants(self, grid):
        assert float(grid.integrate(np.ones_like(grid.theta))) == pytest.approx(4.0 * math.pi)

    def test_integrates_polynomials_in_cos(self, grid):
        assert float(grid.integrate(np.cos(grid.theta) ** 2)) == pytest.approx(4.0 * math.pi / 3.0)

    def test_integrates_azimuthal_modes(self):
        g = SphereGrid(8, 16)
        values = np.sin(g.theta) ** 2 * np.cos(2.0 * g.phi)
        assert float(g.integrate(values)) == pytest.approx(0.0, abs=1e-13)

    def test_trailing_axes(self, grid):
        values = np.ones(grid.theta.shape + (2, 2))
        np.testing.assert_allclose(grid.integrate(values), 4.0 * math.pi * np.ones((2, 2)))

    def test_coarsened(self):
        assert SphereGrid(32, 64).coarsened().describe() == {"n_theta": 16, "n_phi": 32}

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            SphereGrid(1, 8)


class TestAreas:
    """Area radius and averages."""

    def test_area_radius(self, grid):
        assert area_radius(round_gslash(grid, 3.0), grid) == pytest.approx(3.0)

    def test_average(self, grid):
        gslash = round_gslash(grid, 2.0)
        assert sphere_average(np.cos(grid.theta) ** 2, gslash, grid) == pytest.approx(1.0 / 3.0)

    def test_degenerate_metric(self, grid):
        gslash = round_gslash(grid)
        gslash[..., 0, 0] = -1.0
        with pytest.raises(DegenerateMetricError):
            area_density(gslash, grid)


# ======================================================================
# Areal foliation
# ======================================================================

class TestArealData:
    """Areal lapse and normal on Eddington-Finkelstein spheres."""

    def test_sds(self, geo, grid):
        r = 5.0
        om = math.sqrt(geo.F(r))
        data = areal_data(om, 2.0 * om / r, 2.0 * om / r, round_gslash(grid, r), grid)
        assert data.r == pytest.approx(r)
        assert data.q == pytest.approx(1.0)
        np.testing.assert_allclose(data.phi_lapse, 1.0 / om)
        assert data.dr == pytest.approx(geo.F(r))
        assert data.dbar_r == pytest.approx(geo.F(r))
        np.testing.assert_allclose(data.n, [0.5, 0.5, 0.0, 0.0])

    def test_anisotropic_expansion(self, grid):
        data = areal_data(1.0, 4.0, 1.0, round_gslash(grid), grid)
        assert data.q == pytest.approx(2.0)
        np.testing.assert_allclose(data.phi_lapse, 1.0)

    def test_contracting_sphere(self, grid):
        with pytest.raises(ExpansionSignError):
            areal_data(1.0, -0.1, 1.0, round_gslash(grid), grid)

    @pytest.mark.parametrize("r", [2.0, 5.0, 20.0])
    def test_dr_matches_expansion(self, geo, r):
        half = 0.5 * geo.rstar(r)
        point = ChartPoint(ChartTag.EF, (half, half, 0.5 * math.pi, 0.0))
        assert areal_dr_residual(geo, point) < 1e-6 * geo.F(r)

    def test_normal_is_unit_timelike(self, grid):
        n = areal_data(1.0, 4.0, 1.0, round_gslash(grid), grid).n
        assert n @ NULL_GRAM @ n == pytest.approx(-1.0)

    def test_induced_metric(self, geo, grid):
        r = 5.0
        om = math.sqrt(geo.F(r))
        g = sigma_induced_metric(om, 2.0, round_gslash(grid, r))
        assert g.shape == grid.theta.shape + (3, 3)
        np.testing.assert_allclose(g[..., 0, 0], geo.F(r) / 4.0)
        np.testing.assert_allclose(g[..., 0, 1:], 0.0)
        vol = np.sqrt(np.linalg.det(g)) / np.sin(grid.theta)
        assert grid.integrate(vol) == pytest.approx(4.0 * math.pi * r * r * om / 2.0, rel=1e-10)

    def test_second_fundamental_form(self, geo):
        coeffs, _ = sds_sample(geo, 5.0)
        k = areal_second_fundamental_form(coeffs)
        om = coeffs.lapse
        assert k[0, 0] == pytest.approx(geo.dF(5.0) / (2.0 * om))
        np.testing.assert_allclose(k[1:, 1:], om / 5.0 * np.eye(2))
        np.testing.assert_allclose(k[0, 1:], 0.0)


# ======================================================================
# Inequalities
# ======================================================================

class TestIsoperimetric:
    """Poincare-type inequality on the sphere."""

    def test_first_harmonic(self):
        report = isoperimetric_check(_cos_theta, SphereGrid(64, 8))
        assert report.lhs == pytest.approx(4.0 * math.pi / 3.0, rel=1e-6)
        assert report.rhs == pytest.approx(math.pi ** 4, rel=1e-3)
        assert report.converged
        assert report.constant_estimate == pytest.approx(report.lhs / report.rhs)

    def test_radius_scaling(self):
        unit = isoperimetric_check(_cos_theta, SphereGrid(32, 8))
        big = isoperimetric_check(_cos_theta, SphereGrid(32, 8), radius=2.0)
        assert big.lhs == pytest.approx(4.0 * unit.lhs)
        assert big.rhs == pytest.approx(4.0 * unit.rhs)

    def test_constant_has_zero_ratio(self):
        report = isoperimetric_check(lambda t, p: np.ones_like(t), SphereGrid(8, 8))
        assert report.lhs == pytest.approx(0.0, abs=1e-20)
        assert report.constant_estimate == 0.0


class TestSobolevCylinder:
    """Sobolev and trace inequalities on R x S^2."""

    def test_gaussian_profile(self):
        field = CylinderField(
            lambda u, t, p: np.cos(t) * np.exp(-u * u),
            np.linspace(-4.0, 4.0, 65),
            SphereGrid(32, 64),
        )
        report = sobolev_trace_check(field)
        assert report.converged
        assert report.h == 0.0
        assert 0.0 < report.ratios[0] < 10.0
        assert 0.0 < report.ratios[1] < 10.0
        names = [r.inequality for r in report.reports(field.grid.describe())]
        assert names == ["sobolev_l6", "sobolev_l4_trace"]

    def test_shape_is_checked(self):
        field = CylinderField(lambda u, t, p: np.cos(t), np.linspace(0.0, 1.0, 5), SphereGrid(4, 4), rank=1)
        with pytest.raises(ValueError, match="shape"):
            field.values()

    def test_rejects_unsorted_nodes(self):
        with pytest.raises(ValueError):
            CylinderField(lambda u, t, p: u, np.array([0.0, 2.0, 1.0]))


class TestNullSobolev:
    """Sobolev inequalities on an outgoing cone."""

    def _cone(self, trchi=None) -> ConeField:
        return ConeField(
            lambda v, t, p: np.cos(t) / (1.0 + v) ** 2,
            np.linspace(0.0, 4.0, 65),
            radius=lambda v: 1.0 + v,
            lapse=lambda v: np.ones_like(v),
            trchi=trchi or (lambda v: 2.0 / (1.0 + v)),
            grid=SphereGrid(16, 8),
        )

    def test_expanding_cone(self):
        report = null_sobolev_check(self._cone())
        assert report.converged
        assert report.c_chi == pytest.approx(1.0)
        assert report.F > 0.0 and report.D > 0.0
        assert set(report.ratios) == {"four", "sup", "six"}
        assert len(report.reports({})) == 3

    def test_contracting_cone(self):
        with pytest.raises(ExpansionSignError):
            null_sobolev_check(self._cone(trchi=lambda v: -np.ones_like(v)))


# ======================================================================
# Maxwell system
# ======================================================================

class TestMaxwell:
    """Bianchi equations and the elliptic estimate."""

    def test_sds_field_satisfies_bianchi(self, geo):
        r = 5.0
        metric_fn = sds_metric_fn(geo, ChartTag.EF)
        half = 0.5 * geo.rstar(r)
        x = np.array([half, half, 1.0, 0.0])
        res = hodge_residual(sds_weyl_field(geo, ChartTag.EF), metric_fn, x, steps=ef_steps(geo, r))
        assert res.max < 1e-4

    def test_residual_converges_at_second_order(self, geo):
        r = 5.0
        metric_fn = sds_metric_fn(geo, ChartTag.EF)
        weyl_fn = sds_weyl_field(geo, ChartTag.EF)
        half = 0.5 * geo.rstar(r)
        x = np.array([half, half, 1.0, 0.0])
        coarse, fine = (
            hodge_residual(weyl_fn, metric_fn, x, steps=ef_steps(geo, r, scale)).max for scale in (1e-2, 5e-3)
        )
        assert fine < coarse < 1e-4
        assert 3.0 < coarse / fine < 5.0

    def test_elliptic_flat(self):
        report = elliptic_check(
            lambda x: np.diag([x[0], -x[0], 0.0]),
            lambda x: np.zeros((3, 3)),
            lambda x: np.eye(3),
            np.array([[0.3, 0.1, 0.2]]),
            np.array([1.0]),
        )
        assert report.inequality == "maxwell_elliptic"
        assert report.lhs == pytest.approx(2.0, rel=1e-6)
        assert report.rhs == pytest.approx(1.5, rel=1e-6)
        assert report.constant_estimate == pytest.approx(4.0 / 3.0, rel=1e-6)
