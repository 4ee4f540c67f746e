"""Tests for the bootstrap-assumption auditor.

Covers:
  - AssumptionEntry semantics (upper, lower, unmeasured)
  - audit_foliation on SdS Eddington-Finkelstein spheres and de Sitter
  - the ellipsoidal section: only the average-closeness assumption fails
  - AuditReport serialization
  - audit_gauge_propagation
"""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from cosmoweyl.core.audit import (
    LOWER,
    AssumptionEntry,
    SphereSample,
    audit_foliation,
    audit_gauge_propagation,
    de_sitter_sample,
    ellipsoid_sample,
    sds_ef_sample,
)
from cosmoweyl.core.analysis import SphereGrid
from cosmoweyl.core.belrobinson import sds_sample
from cosmoweyl.core.charts import SdSGeometry, SdSParams
from cosmoweyl.core.errors import DomainError, HypothesisError
from cosmoweyl.core.nullframe import FoliationChange


# ======================================================================
# Fixtures & helpers
# ======================================================================

PARAMS = SdSParams(lam=3.0, m=0.1)
RADII = np.geomspace(5.0, 100.0, 8)
EPS0 = 0.1
C0 = 4.0


@pytest.fixture(scope="module")
def ellipsoid_report():
    return audit_foliation(ellipsoid_sample(0.06, 0.05), EPS0, C0)


def _exp_change(u: float) -> FoliationChange:
    """f = e^u, g = v."""
    e = math.exp(u)
    return FoliationChange(
        lf=0.0, lbf=e, lg=1.0, grad_f=np.zeros(2), hess_f=np.zeros((2, 2)),
        lb_lbf=e, l_lbf=0.0, l_lg=0.0, grad_lbf=np.zeros(2),
    )


# ======================================================================
# Entries
# ======================================================================

class TestAssumptionEntry:
    """Measured value against threshold."""

    def test_upper(self):
        assert AssumptionEntry("x", 0.5, 1.0).holds
        assert not AssumptionEntry("x", 1.5, 1.0).holds

    def test_lower_is_strict(self):
        assert AssumptionEntry("x", 0.1, 0.0, LOWER).holds
        assert not AssumptionEntry("x", 0.0, 0.0, LOWER).holds

    def test_unmeasured(self):
        entry = AssumptionEntry("x", math.nan, 1.0)
        assert entry.holds is None
        assert entry.to_dict()["measured"] is None


# ======================================================================
# Foliations
# ======================================================================

class TestSphericalFoliations:
    """Exact spherically symmetric foliations pass."""

    def test_sds(self):
        report = audit_foliation(sds_ef_sample(PARAMS, RADII), EPS0, C0)
        assert report.verdict, report.summary()
        assert report.failed == []
        assert report.grid["spheres"] == len(RADII)
        assert report.entry("BA:I.iv").measured == 0.0
        assert report.entry("BA:I.v").measured == 0.0
        assert report.entry("BA:I.iii").measured == pytest.approx(0.0, abs=1e-12)

    def test_de_sitter(self):
        report = audit_foliation(de_sitter_sample(RADII), EPS0, C0)
        assert report.verdict, report.summary()
        assert report.entry("fragment").measured == pytest.approx(1.0 / 24.0, rel=1e-9)

    def test_lapse_comparable_to_radius(self):
        report = audit_foliation(sds_ef_sample(PARAMS, RADII), EPS0, C0)
        entry = report.entry("BA:III.i")
        assert 1.0 <= entry.measured < 1.1

    def test_areal_q_is_one(self):
        geo = SdSGeometry(PARAMS)
        coeffs, _ = sds_sample(geo, 5.0)
        sample = SphereSample.from_coefficients(coeffs, SphereGrid(8, 16))
        assert sample.q() == pytest.approx(1.0)
        assert sample.radius() == pytest.approx(5.0)

    def test_unknown_entry(self):
        report = audit_foliation(de_sitter_sample(RADII), EPS0, C0)
        with pytest.raises(KeyError):
            report.entry("BA:II")


class TestEllipsoid:
    """Sections of a cone with displaced vertex."""

    def test_only_average_closeness_fails(self, ellipsoid_report):
        assert not ellipsoid_report.verdict
        assert [e.name for e in ellipsoid_report.failed] == ["BA:I.iii"]
        assert ellipsoid_report.entry("BA:I.iii").measured == pytest.approx(0.786, abs=1e-2)

    def test_measured_values(self, ellipsoid_report):
        assert ellipsoid_report.entry("BA:I.ii").holds
        assert 2.8 < ellipsoid_report.entry("BA:III.i").measured < 3.0
        assert 0.05 < ellipsoid_report.entry("BA:I.viii").measured < 0.2

    def test_q_derivatives_unmeasured(self, ellipsoid_report):
        assert ellipsoid_report.entry("BA:I.v").holds is None

    def test_closeness_worsens_as_section_shrinks(self):
        ratios = [
            audit_foliation(ellipsoid_sample(eps, 0.05), EPS0, C0).entry("BA:I.iii").measured
            for eps in (0.1, 0.08, 0.07, 0.06, 0.055)
        ]
        assert all(b > a for a, b in zip(ratios, ratios[1:]))
        assert ratios[0] > EPS0

    def test_touching_section_rejected(self):
        with pytest.raises(DomainError, match="touches"):
            ellipsoid_sample(0.04, 0.05)

    def test_json(self, ellipsoid_report):
        data = json.loads(ellipsoid_report.to_json())
        assert data["verdict"] is False
        assert data["foliation"] == "ellipsoid"
        by_name = {a["name"]: a for a in data["assumptions"]}
        assert by_name["BA:I.v"]["holds"] is None
        assert by_name["BA:I.iii"]["holds"] is False
        assert data["parameters"] == {"eps": 0.06, "phi": 0.05}

    def test_summary_names_failures(self, ellipsoid_report):
        assert "BA:I.iii" in ellipsoid_report.summary()


# ======================================================================
# Gauge propagation
# ======================================================================

class TestGaugePropagation:
    """Bound on |2 omega_hat - trchi| after a change of foliation."""

    def test_exponential_change_holds(self):
        coeffs, _ = sds_sample(SdSGeometry(PARAMS), 5.0)
        assert audit_gauge_propagation(_exp_change(0.2), coeffs, 0.1).holds

    def test_input_violation(self):
        coeffs, _ = sds_sample(SdSGeometry(PARAMS), 5.0)
        with pytest.raises(HypothesisError):
            audit_gauge_propagation(_exp_change(0.2), coeffs, 0.01)
