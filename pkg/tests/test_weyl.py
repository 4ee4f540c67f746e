"""Tests for Weyl fields.

Covers:
  - WeylNull: trace-free checks, vector layout
  - reconstruct / null_decompose and the Weyl symmetries, weyl_symmetry_residuals
  - dual, levi_civita, sigma_from_dual
  - boost_weyl against a boosted frame
  - em_decompose
  - weyl_from_riemann: de Sitter is conformally flat, rho = -2m/r^3 on SdS
  - weyl_divergence of the exact SdS field
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cosmoweyl.core.charts import ChartTag, SdSGeometry, SdSParams, ef_steps, sds_metric_fn, stereographic_metric
from cosmoweyl.core.errors import FrameError, PositivityError, SymmetryError
from cosmoweyl.core.nullframe import frame_vectors
from cosmoweyl.core.tensors import lower_first, riemann
from cosmoweyl.core.weyl import (
    NULL_GRAM,
    Weyl4,
    WeylNull,
    boost_frame,
    boost_weyl,
    dual,
    em_decompose,
    levi_civita,
    null_decompose,
    reconstruct,
    sds_weyl_field,
    sds_weyl_null,
    sigma_from_dual,
    weyl_divergence,
    weyl_from_riemann,
    weyl_symmetry_residuals,
)


# ======================================================================
# Fixtures & helpers
# ======================================================================

@st.composite
def weyl_null_strategy(draw):
    """Random null components with entries in [-5, 5]."""
    seed = draw(st.integers(min_value=0, max_value=2 ** 31 - 1))
    rng = np.random.RandomState(seed)
    return WeylNull.from_vector(rng.uniform(-5.0, 5.0, 10))


def _assert_same(a: WeylNull, b: WeylNull, tol: float = 1e-10) -> None:
    np.testing.assert_allclose(a.as_vector(), b.as_vector(), atol=tol * max(1.0, np.abs(b.as_vector()).max()))


# ======================================================================
# Null components
# ======================================================================

class TestWeylNull:
    """Component container."""

    def test_rejects_traceful_abar(self):
        with pytest.raises(SymmetryError):
            WeylNull(np.eye(2), np.zeros(2), 0.0, 0.0, np.zeros(2), np.zeros((2, 2)))

    def test_rejects_asymmetric_a(self):
        with pytest.raises(SymmetryError):
            WeylNull(np.zeros((2, 2)), np.zeros(2), 0.0, 0.0, np.zeros(2), np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_vector_layout(self):
        w = WeylNull.from_vector(np.arange(10.0))
        assert w.abar[1, 1] == -0.0
        assert w.rho == 4.0 and w.sigma == 5.0
        np.testing.assert_array_equal(w.as_vector(), np.arange(10.0))

    def test_zero(self):
        assert np.all(WeylNull.zero().as_vector() == 0.0)


class TestReconstruct:
    """Full components from null components."""

    @given(w=weyl_null_strategy())
    @settings(max_examples=25, deadline=None)
    def test_has_weyl_symmetries(self, w):
        reconstruct(w).check(1e-12)

    @given(w=weyl_null_strategy())
    @settings(max_examples=25, deadline=None)
    def test_decompose_recovers_components(self, w):
        _assert_same(null_decompose(reconstruct(w)), w)

    @given(w=weyl_null_strategy())
    @settings(max_examples=25, deadline=None)
    def test_sigma_is_rho_of_dual(self, w):
        assert sigma_from_dual(reconstruct(w)) == pytest.approx(w.sigma, abs=1e-10 * max(1.0, abs(w.sigma)))

    @given(w=weyl_null_strategy(), a=st.floats(0.2, 5.0))
    @settings(max_examples=25, deadline=None)
    def test_boost_matches_boosted_frame(self, w, a):
        _assert_same(null_decompose(reconstruct(w), boost_frame(a)), boost_weyl(a, w))

    def test_boost_rejects_nonpositive(self):
        with pytest.raises(PositivityError):
            boost_weyl(-1.0, WeylNull.zero())

    def test_decompose_needs_null_frame(self):
        full = reconstruct(WeylNull.zero())
        with pytest.raises(FrameError):
            null_decompose(Weyl4(full.components, np.eye(4)))

    @given(w=weyl_null_strategy())
    @settings(max_examples=25, deadline=None)
    def test_symmetry_residuals_vanish(self, w):
        full = reconstruct(w)
        res = weyl_symmetry_residuals(full.components, full.g)
        assert set(res) == {"antisym_first", "antisym_last", "pair", "cyclic", "trace"}
        assert max(res.values()) < 1e-12

    def test_symmetry_residuals_flag_trace(self):
        full = reconstruct(WeylNull.from_vector(np.linspace(-1.0, 1.0, 10)))
        g = full.g
        # algebraic curvature tensor of constant curvature: every symmetry but trace-freeness
        curv = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
        res = weyl_symmetry_residuals(full.components + curv, g)
        assert res["trace"] > 0.1
        assert max(res[k] for k in ("antisym_first", "antisym_last", "pair", "cyclic")) < 1e-12

    def test_symmetry_residuals_flag_broken_pair(self):
        full = reconstruct(WeylNull.from_vector(np.linspace(-1.0, 1.0, 10)))
        w = full.components.copy()
        w[0, 2, 1, 3] += 0.5
        res = weyl_symmetry_residuals(w, full.g)
        assert res["pair"] > 0.01
        assert res["antisym_first"] > 0.01


class TestDual:
    """Hodge dual in Lorentzian signature."""

    def test_volume_form_normalization(self):
        eps = levi_civita(NULL_GRAM)
        assert eps[0, 1, 2, 3] == pytest.approx(2.0)
        assert eps[1, 0, 2, 3] == pytest.approx(-2.0)

    @given(w=weyl_null_strategy())
    @settings(max_examples=15, deadline=None)
    def test_double_dual_is_minus_identity(self, w):
        full = reconstruct(w)
        twice = dual(dual(full.components, full.g), full.g)
        np.testing.assert_allclose(twice, -full.components, atol=1e-10 * max(1.0, np.abs(full.components).max()))


class TestElectricMagnetic:
    """E and H relative to n = (e3 + e4)/2."""

    def test_rho_only(self):
        w = sds_weyl_null(0.1, 2.0)
        em = em_decompose(w)
        rho = w.rho
        np.testing.assert_allclose(np.diag(em.E), [rho, -0.5 * rho, -0.5 * rho], atol=1e-15)
        np.testing.assert_allclose(em.H, 0.0, atol=1e-15)

    @given(w=weyl_null_strategy(), q=st.floats(0.5, 2.0))
    @settings(max_examples=15, deadline=None)
    def test_symmetric_trace_free(self, w, q):
        em = em_decompose(w, q)
        scale = max(1.0, np.abs(w.as_vector()).max()) * max(q, 1.0 / q) ** 2
        assert abs(np.trace(em.E)) < 1e-10 * scale
        assert abs(np.trace(em.H)) < 1e-10 * scale
        np.testing.assert_allclose(em.E, em.E.T)

    def test_sigma_only_is_magnetic(self):
        w = WeylNull.zero()
        w.sigma = 1.5
        em = em_decompose(w)
        np.testing.assert_allclose(em.E, 0.0, atol=1e-15)
        assert abs(em.H[0, 0]) == pytest.approx(1.5)


# ======================================================================
# Weyl tensor from curvature
# ======================================================================

class TestWeylFromRiemann:
    """Finite-difference curvature."""

    def test_de_sitter_is_conformally_flat(self):
        def stereo(y):
            return stereographic_metric(float(y[0]), y[1:]).g

        x = np.array([0.3, 0.2, -0.1, 0.4])
        g = stereo(x)
        w = weyl_from_riemann(lower_first(riemann(stereo, x, use_richardson=True), g), g, 3.0)
        assert np.abs(w.components).max() < 1e-5

    @pytest.mark.parametrize("r", [2.0, 5.0, 10.0])
    def test_sds_rho(self, r):
        geo = SdSGeometry(SdSParams(lam=3.0, m=0.1))
        metric_fn = sds_metric_fn(geo, ChartTag.EF)
        half = 0.5 * geo.rstar(r)
        x = np.array([half, half, 0.5 * math.pi, 0.0])
        g = metric_fn(x)
        riem = lower_first(riemann(metric_fn, x, steps=ef_steps(geo, r), use_richardson=True), g)
        wn = null_decompose(weyl_from_riemann(riem, g, 3.0), frame_vectors(metric_fn, x), tol=1e-8)
        assert wn.rho == pytest.approx(-0.2 / r ** 3, abs=1e-5)
        assert abs(wn.sigma) < 1e-6
        assert np.abs(wn.b).max() < 1e-6

    def test_rejects_non_curvature(self):
        t = np.zeros((4, 4, 4, 4))
        t[0, 1, 2, 3] = 1.0
        with pytest.raises(SymmetryError):
            weyl_from_riemann(t, np.eye(4), 3.0)


class TestDivergence:
    """The exact SdS field is divergence free."""

    def test_sds_field(self):
        geo = SdSGeometry(SdSParams(lam=3.0, m=0.1))
        metric_fn = sds_metric_fn(geo, ChartTag.EF)
        weyl_fn = sds_weyl_field(geo, ChartTag.EF)
        half = 0.5 * geo.rstar(5.0)
        x = np.array([half, half, 1.0, 0.2])
        div = weyl_divergence(weyl_fn, metric_fn, x, steps=ef_steps(geo, 5.0))
        assert np.abs(div).max() <= 1e-3 * np.abs(weyl_fn(x)).max()

    def test_field_has_exact_rho(self):
        geo = SdSGeometry(SdSParams(lam=3.0, m=0.1))
        metric_fn = sds_metric_fn(geo, ChartTag.EF)
        half = 0.5 * geo.rstar(5.0)
        x = np.array([half, half, 1.0, 0.0])
        w4 = Weyl4(sds_weyl_field(geo, ChartTag.EF)(x), metric_fn(x))
        assert null_decompose(w4, frame_vectors(metric_fn, x), tol=1e-8).rho == pytest.approx(-0.2 / 125.0)
