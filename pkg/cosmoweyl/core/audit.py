"""Bootstrap-assumption auditor for double-null foliations.

Measures the pointwise assumptions on the structure coefficients (expansion
signs, redshift bound, closeness to the sphere average, L^inf bounds and the
q-weighted trace bounds, and the comparison C0^-1 r <= Omega <= C0 r) on
sampled spheres and reports each as measured value against threshold.

Provides:
  - SphereSample, FoliationSample and builders for the SdS
    Eddington-Finkelstein gauge, the de Sitter double-null chart and the
    ellipsoidal small-angle model
  - AssumptionEntry, AuditReport
  - audit_foliation
  - audit_gauge_propagation
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .analysis import SphereGrid, area_radius, round_gslash, sphere_average
from .charts import ChartPoint, ChartTag, SdSGeometry, SdSParams, ellipsoid_section
from .errors import DomainError
from .nullframe import (
    DE_SITTER,
    FoliationChange,
    PropagationBound,
    StructureCoefficients,
    propagation_bound,
    structure_coefficients,
)

logger = logging.getLogger(__name__)

UPPER = "<="
LOWER = ">"


# ------------------------------------------------------------------
# Samples
# ------------------------------------------------------------------

@dataclass
class SphereSample:
    """Coefficient fields of one sphere S_{u,v} at the nodes of a grid.

    Scalars broadcast to the grid shape. ``dlog_q`` and ``dbar_log_q``
    are D log q and Dbar log q of the areal foliation; NaN when unknown.
    """

    grid: SphereGrid
    gslash: np.ndarray
    lapse: np.ndarray
    trchi: np.ndarray
    trchibar: np.ndarray
    omega_hat: np.ndarray
    omegabar_hat: np.ndarray
    abs_chihat: np.ndarray
    abs_chibarhat: np.ndarray
    abs_zeta: np.ndarray
    abs_eta: np.ndarray
    abs_etabar: np.ndarray
    dlog_q: float = math.nan
    dbar_log_q: float = math.nan
    label: str = ""

    def __post_init__(self) -> None:
        shape = self.grid.theta.shape
        for name in (
            "lapse", "trchi", "trchibar", "omega_hat", "omegabar_hat",
            "abs_chihat", "abs_chibarhat", "abs_zeta", "abs_eta", "abs_etabar",
        ):
            value = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), shape)
            setattr(self, name, value)

    @classmethod
    def from_coefficients(
        cls,
        coeffs: StructureCoefficients,
        grid: SphereGrid,
        dlog_q: float = 0.0,
        dbar_log_q: float = 0.0,
    ) -> SphereSample:
        """Sphere on which the coefficients are constant (spherical symmetry)."""
        return cls(
            grid=grid,
            gslash=round_gslash(grid, coeffs.r),
            lapse=coeffs.lapse,
            trchi=coeffs.trchi,
            trchibar=coeffs.trchibar,
            omega_hat=coeffs.omega_hat,
            omegabar_hat=coeffs.omegabar_hat,
            abs_chihat=float(np.linalg.norm(coeffs.chihat)),
            abs_chibarhat=float(np.linalg.norm(coeffs.chibarhat)),
            abs_zeta=float(np.linalg.norm(coeffs.zeta)),
            abs_eta=float(np.linalg.norm(coeffs.eta)),
            abs_etabar=float(np.linalg.norm(coeffs.etabar)),
            dlog_q=dlog_q,
            dbar_log_q=dbar_log_q,
            label=f"r={coeffs.r:.6g}",
        )

    def radius(self) -> float:
        return area_radius(self.gslash, self.grid)

    def average(self, values: np.ndarray) -> float:
        return sphere_average(values, self.gslash, self.grid)

    def q(self) -> float:
        """sqrt(avg(Omega trchi) / avg(Omega trchibar)); NaN off the expanding region."""
        avg = self.average(self.lapse * self.trchi)
        avg_bar = self.average(self.lapse * self.trchibar)
        if not (avg > 0.0 and avg_bar > 0.0):
            return math.nan
        return math.sqrt(avg / avg_bar)


@dataclass
class FoliationSample:
    name: str
    grid: SphereGrid
    spheres: list[SphereSample]
    parameters: dict[str, float] = field(default_factory=dict)


def sds_ef_sample(
    params: SdSParams, radii: Sequence[float], grid: SphereGrid | None = None
) -> FoliationSample:
    """Spheres u* = v* = r*(r)/2 of the Eddington-Finkelstein gauge."""
    grid = grid or SphereGrid(8, 16)
    geo = SdSGeometry(params)
    spheres = []
    for r in radii:
        rs = geo.rstar(float(r))
        point = ChartPoint(ChartTag.EF, (0.5 * rs, 0.5 * rs, 0.5 * math.pi, 0.0))
        spheres.append(SphereSample.from_coefficients(
            structure_coefficients(ChartTag.EF, params, point, geo), grid,
        ))
    return FoliationSample(
        "sds_ef", grid, spheres,
        {"lambda": params.lam, "m": params.m, "r_min": float(min(radii)), "r_max": float(max(radii))},
    )


def de_sitter_sample(radii: Sequence[float], grid: SphereGrid | None = None) -> FoliationSample:
    """Spheres of the spherical double-null chart of de Sitter, Omega^2 = r^2 - 1."""
    grid = grid or SphereGrid(8, 16)
    geo = SdSGeometry(DE_SITTER)
    spheres = []
    for r in radii:
        rs = geo.rstar(float(r))
        point = ChartPoint(ChartTag.DOUBLE_NULL_DS, (0.5 * rs, 0.5 * rs, 0.5 * math.pi, 0.0))
        spheres.append(SphereSample.from_coefficients(
            structure_coefficients(ChartTag.DOUBLE_NULL_DS, None, point, geo), grid,
        ))
    return FoliationSample(
        "de_sitter", grid, spheres, {"r_min": float(min(radii)), "r_max": float(max(radii))}
    )


def ellipsoid_sample(eps: float, phi: float, grid: SphereGrid | None = None) -> FoliationSample:
    """The sphere S_{0,eps} cut by the displaced cone, small-angle model.

    Omega = r(theta1), trchi = 2, Omega trchibar = 2 r + 4 phi cos(theta1),
    omega_hat = omegabar_hat = 1 and chihat = chibarhat = 0.
    """
    grid = grid or SphereGrid(48, 8)
    section = ellipsoid_section(eps, phi)
    if section.touches_infinity:
        raise DomainError(f"ellipsoid ({eps}, {phi}) touches infinity")
    r = section.r(grid.theta)
    sphere = SphereSample(
        grid=grid,
        gslash=round_gslash(grid, r),
        lapse=r,
        trchi=2.0,
        trchibar=section.omega_trchibar(grid.theta) / r,
        omega_hat=1.0,
        omegabar_hat=1.0,
        abs_chihat=0.0,
        abs_chibarhat=0.0,
        abs_zeta=0.0,
        abs_eta=0.0,
        abs_etabar=0.0,
        label=f"eps={eps:g},phi={phi:g}",
    )
    return FoliationSample("ellipsoid", grid, [sphere], {"eps": eps, "phi": phi})


# ------------------------------------------------------------------
# Report
# ------------------------------------------------------------------

@dataclass
class AssumptionEntry:
    """One measured assumption.

    ``holds`` is None when the quantity could not be measured on the sample.
    """

    name: str
    measured: float
    threshold: float
    relation: str = UPPER
    components: dict[str, float] = field(default_factory=dict)

    @property
    def holds(self) -> bool | None:
        if not math.isfinite(self.measured):
            return None
        if self.relation == LOWER:
            return self.measured > self.threshold
        return self.measured <= self.threshold

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": _json_float(self.measured),
            "threshold": _json_float(self.threshold),
            "relation": self.relation,
            "holds": self.holds,
            "components": {k: _json_float(v) for k, v in self.components.items()},
        }


@dataclass
class AuditReport:
    foliation: str
    grid: dict[str, int]
    eps0: float
    c0: float
    entries: list[AssumptionEntry] = field(default_factory=list)
    parameters: dict[str, float] = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return all(e.holds is not False for e in self.entries)

    @property
    def failed(self) -> list[AssumptionEntry]:
        return [e for e in self.entries if e.holds is False]

    def entry(self, name: str) -> AssumptionEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def summary(self) -> str:
        if self.verdict:
            return f"Audit of {self.foliation}: all {len(self.entries)} assumptions hold."
        names = ", ".join(e.name for e in self.failed)
        return f"Audit of {self.foliation}: {len(self.failed)} failed ({names})."

    def to_dict(self) -> dict:
        return {
            "foliation": self.foliation,
            "grid": dict(self.grid),
            "eps0": self.eps0,
            "c0": self.c0,
            "parameters": {k: _json_float(v) for k, v in self.parameters.items()},
            "assumptions": [e.to_dict() for e in self.entries],
            "verdict": self.verdict,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


# ------------------------------------------------------------------
# Public API
# ------------------------------------------------------------------

def audit_foliation(sample: FoliationSample, eps0: float, c0: float) -> AuditReport:
    """Suprema (infima for the expansion signs) over all sampled nodes."""
    acc: dict[str, dict[str, list[float]]] = {}

    def record(name: str, component: str, value: float) -> None:
        acc.setdefault(name, {}).setdefault(component, []).append(float(value))

    for s in sample.spheres:
        om, tr, trb = s.lapse, s.trchi, s.trchibar
        record("BA:I.i", "trchi", np.min(tr))
        record("BA:I.i", "trchibar", np.min(trb))

        with np.errstate(divide="ignore", invalid="ignore"):
            record("BA:I.ii", "outgoing", np.max(om * np.abs(2.0 * s.omega_hat - tr) / tr))
            record("BA:I.ii", "incoming", np.max(om * np.abs(2.0 * s.omegabar_hat - trb) / trb))
            record("fragment", "outgoing", np.max(np.abs(2.0 * s.omega_hat - tr) / tr))
            record("fragment", "incoming", np.max(np.abs(2.0 * s.omegabar_hat - trb) / trb))

        for comp, values in (("outgoing", om * tr), ("incoming", om * trb)):
            avg = s.average(values)
            record("BA:I.iii", comp, np.max(np.abs(values - avg)) / avg if avg > 0.0 else math.nan)

        record("BA:I.iv", "chihat", np.max(om * s.abs_chihat))
        record("BA:I.iv", "chibarhat", np.max(om * s.abs_chibarhat))
        record("BA:I.iv", "zeta", np.max(om * s.abs_zeta))
        with np.errstate(divide="ignore", invalid="ignore"):
            record("BA:I.iv_eps", "chihat", np.max(om * s.abs_chihat / tr))
            record("BA:I.iv_eps", "chibarhat", np.max(om * s.abs_chibarhat / trb))

        q = s.q()
        with np.errstate(divide="ignore", invalid="ignore"):
            record("BA:I.v", "D", np.max(abs(s.dlog_q) / tr))
            record("BA:I.v", "Dbar", np.max(abs(s.dbar_log_q) / trb))
            # q is constant on each sphere, so dslash log q vanishes
            weight = q * trb + tr / q
            record("BA:I.vi", "eta", np.max(om * (s.abs_eta + s.abs_etabar) / weight))
            record("BA:I.vii", "q_trchibar", np.max(q * trb))
            record("BA:I.vii", "trchi_over_q", np.max(tr / q))
            record("BA:I.viii", "difference", np.max(om * np.abs(q * trb - tr / q) / weight))

        r = s.radius()
        record("BA:III.i", "lapse_over_r", np.max(om) / r)
        record("BA:III.i", "r_over_lapse", r / np.min(om))

    report = AuditReport(
        foliation=sample.name,
        grid=sample.grid.describe() | {"spheres": len(sample.spheres)},
        eps0=eps0,
        c0=c0,
        parameters=dict(sample.parameters),
    )
    thresholds = {
        "BA:I.i": (0.0, LOWER),
        "BA:I.ii": (c0, UPPER),
        "BA:I.iii": (eps0, UPPER),
        "BA:I.iv": (c0, UPPER),
        "BA:I.iv_eps": (eps0, UPPER),
        "BA:I.v": (c0, UPPER),
        "BA:I.vi": (c0, UPPER),
        "BA:I.vi_eps": (eps0, UPPER),
        "BA:I.vii": (c0, UPPER),
        "BA:I.viii": (c0, UPPER),
        "BA:III.i": (c0, UPPER),
        "fragment": (eps0, UPPER),
    }
    acc["BA:I.vi_eps"] = acc["BA:I.vi"]
    for name, (threshold, relation) in thresholds.items():
        parts = acc[name]
        reduce_fn = min if relation == LOWER else max
        components = {k: _reduce(reduce_fn, v) for k, v in parts.items()}
        measured = _reduce(reduce_fn, list(components.values()))
        report.entries.append(AssumptionEntry(name, measured, threshold, relation, components))
    logger.info(report.summary())
    return report


def audit_gauge_propagation(
    fc: FoliationChange, coeffs: StructureCoefficients, eps: float
) -> PropagationBound:
    """Both sides of the post-change bound on |2 omega_hat - trchi| and its conjugate.

    Raises HypothesisError when the input foliation violates the bound.
    """
    result = propagation_bound(fc, coeffs, eps)
    logger.debug(
        "gauge propagation: lhs=%.6e rhs=%.6e dominant=%s", result.lhs, result.rhs, result.dominant
    )
    return result


# ======================================================================
# Helpers
# ======================================================================

def _reduce(fn, values: list[float]) -> float:
    """min or max; NaN when any value is unmeasured."""
    finite = [v for v in values if not math.isnan(v)]
    if len(finite) < len(values) or not finite:
        return math.nan
    return float(fn(finite))


def _json_float(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None
