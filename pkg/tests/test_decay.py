"""Tests for the Gronwall decay engine.

Covers:
  - DecayProblem validation and sampled kappa bounds
  - gronwall_bound: constants K1, H1 and the asymptotic constant
  - divergent weights
  - equality_solution against the bound
  - redshift_schema
  - verify_decay, measure_exponent
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from cosmoweyl.core.decay import (
    DecayProblem,
    equality_solution,
    gronwall_bound,
    measure_exponent,
    redshift_schema,
    verify_decay,
)
from cosmoweyl.core.errors import DivergentWeightError, DomainError, PositivityError


# ======================================================================
# Fixtures & helpers
# ======================================================================

RADII = np.geomspace(2.0, 1e3, 40)


def _constant(value: float):
    return lambda r: value


def _power_samples(exponent: float, radii=RADII) -> list[tuple[float, float]]:
    return [(float(r), float(r ** exponent)) for r in radii]


# ======================================================================
# Problems and bounds
# ======================================================================

class TestDecayProblem:
    """Input validation."""

    def test_measures_kappa_bounds(self):
        p = DecayProblem(kappa=_constant(6.0), f0=1.0)
        assert p.kappa0 == 6.0
        assert p.kappa1 == 6.0

    def test_rejects_nonpositive_r0(self):
        with pytest.raises(PositivityError):
            DecayProblem(kappa=_constant(6.0), f0=1.0, r0=0.0)

    def test_rejects_negative_energy(self):
        with pytest.raises(PositivityError):
            DecayProblem(kappa=_constant(6.0), f0=-1.0)

    def test_rejects_inverted_bounds(self):
        with pytest.raises(PositivityError):
            DecayProblem(kappa=_constant(6.0), f0=1.0, kappa0=6.0, kappa1=5.0)


class TestGronwallBound:
    """Closed-form constants."""

    def test_constant_rate(self):
        b = gronwall_bound(DecayProblem(kappa=_constant(6.0), f0=1.0))
        assert b.K1 == pytest.approx(0.0, abs=1e-12)
        assert b.H1 == 0.0
        assert b.asymptotic_constant == pytest.approx(1.0)
        assert b.constant == pytest.approx(64.0 / 63.0)

    def test_approaching_rate(self):
        p = DecayProblem(kappa=lambda r: 6.0 - 1.0 / r, f0=1.0, kappa0=5.0, kappa1=6.0)
        b = gronwall_bound(p)
        assert b.K1 == pytest.approx(1.0, rel=1e-8)
        assert b.asymptotic_constant == pytest.approx(1.2 * math.e, rel=1e-8)
        actual = equality_solution(p, RADII)
        np.testing.assert_allclose(actual, RADII ** -6 * np.exp(1.0 - 1.0 / RADII), rtol=1e-8)
        assert np.all(actual <= b.bound(RADII))
        assert np.all(b.bound(RADII) / actual <= 1.2 * math.e / (1.0 - 2.0 ** -6) * (1.0 + 1e-9))

    def test_equality_solution_constant_rate(self):
        p = DecayProblem(kappa=_constant(6.0), f0=1.0)
        np.testing.assert_allclose(equality_solution(p, RADII), RADII ** -6, rtol=1e-8)

    def test_divergent_source(self):
        p = DecayProblem(kappa=_constant(6.0), f0=1.0, C=1.0, h=_constant(1.0), kappa0=6.0, kappa1=6.0)
        with pytest.raises(DivergentWeightError, match="H"):
            gronwall_bound(p)

    def test_divergent_rate_gap(self):
        p = DecayProblem(kappa=_constant(5.0), f0=1.0, kappa0=5.0, kappa1=6.0)
        with pytest.raises(DivergentWeightError, match="K"):
            gronwall_bound(p)

    def test_bound_domain(self):
        b = gronwall_bound(DecayProblem(kappa=_constant(6.0), f0=1.0, r0=3.0))
        assert isinstance(b.bound(6.0), float)
        with pytest.raises(DomainError):
            b.bound(5.0)

    def test_rows(self):
        b = gronwall_bound(DecayProblem(kappa=_constant(6.0), f0=1.0))
        rows = b.rows([2.0, 4.0], [2.0 ** -6, 4.0 ** -6])
        assert rows[0][0] == 2.0
        assert rows[1][2] == pytest.approx(64.0 / 63.0 * 4.0 ** -6)


class TestRedshiftSchema:
    """Commuted energy forced by the uncommuted one."""

    def test_constants(self):
        p = redshift_schema(eps=0.1, c0=4.0, eps0=0.1, r0=5.0, f_fn=lambda r: r ** -6, g0=1.0)
        assert p.kappa1 == pytest.approx(5.5)
        assert p.kappa0 == pytest.approx(4.7)
        b = gronwall_bound(p)
        assert b.K1 == pytest.approx(0.8, rel=1e-8)
        assert b.H1 == pytest.approx(2.0 / math.sqrt(5.0), rel=1e-8)

    def test_saturating_solution_respects_bound(self):
        p = redshift_schema(eps=0.1, c0=4.0, eps0=0.1, r0=5.0, f_fn=lambda r: r ** -6, g0=1.0)
        radii = np.geomspace(10.0, 1e3, 25)
        assert np.all(equality_solution(p, radii) <= gronwall_bound(p).bound(radii))


# ======================================================================
# Sampled decay
# ======================================================================

class TestVerifyDecay:
    """sup r^kappa1 f against explicit constants."""

    def test_power_law_holds(self):
        check = verify_decay(_power_samples(-6.0), 6.0, 1.0 + 1e-9)
        assert check.holds
        assert check.sup_c == pytest.approx(1.0)

    def test_slower_decay_fails(self):
        check = verify_decay(_power_samples(-5.0), 6.0, 10.0)
        assert not check.holds
        assert check.r_at_sup == pytest.approx(1e3)

    def test_unsorted_samples(self):
        with pytest.raises(ValueError, match="increasing"):
            verify_decay([(2.0, 1.0), (2.0, 0.5)], 6.0, 1.0)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            verify_decay([], 6.0, 1.0)


class TestMeasureExponent:
    """Log-log slope of the tail."""

    def test_power_law(self):
        assert measure_exponent(_power_samples(-6.0)) == pytest.approx(-6.0)

    def test_needs_positive_samples(self):
        with pytest.raises(ValueError):
            measure_exponent([(1.0, 1.0), (2.0, 0.0)], tail=1.0)
