"""Quadrature on spheres and cylinders, areal foliation data and inequality checks.

Provides:
  - SphereGrid (Gauss-Legendre in cos(theta) times uniform azimuth)
  - round_gslash, area_radius, sphere_average
  - ArealData, areal_data, areal_dr_residual, areal_second_fundamental_form,
    sigma_induced_metric
  - InequalityReport, isoperimetric_check
  - CylinderField, SobolevReport, sobolev_trace_check
  - ConeField, NullSobolevReport, null_sobolev_check
  - HodgeResidual, hodge_residual, elliptic_check
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate

from .charts import ChartPoint, SdSGeometry, sds_gauge_data
from .errors import ConvergenceError, DegenerateMetricError, ExpansionSignError
from .nullframe import BoostLaw, StructureCoefficients, frame_vectors
from .tensors import christoffel, fd_steps, partial, ricci, riemann
from .weyl import dual, levi_civita, weyl_divergence

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]
SphereFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
SliceFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

ANGLE_STEP = 1e-5


# ------------------------------------------------------------------
# Sphere quadrature
# ------------------------------------------------------------------

@dataclass(frozen=True)
class SphereGrid:
    """Product rule: n_theta Gauss-Legendre nodes in cos(theta), n_phi azimuths.

    Exact for polynomials in cos(theta) up to degree 2 n_theta - 1 times
    trigonometric polynomials in phi up to degree n_phi - 1.
    """

    n_theta: int = 64
    n_phi: int = 128

    def __post_init__(self) -> None:
        if self.n_theta < 2 or self.n_phi < 2:
            raise ValueError(f"sphere grid needs at least 2x2 nodes, got {self.n_theta}x{self.n_phi}")

    @cached_property
    def _nodes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.polynomial.legendre.leggauss(self.n_theta)

    @cached_property
    def theta(self) -> np.ndarray:
        x, _ = self._nodes
        return np.repeat(np.arccos(x)[:, None], self.n_phi, axis=1)

    @cached_property
    def phi(self) -> np.ndarray:
        az = 2.0 * math.pi * np.arange(self.n_phi) / self.n_phi
        return np.repeat(az[None, :], self.n_theta, axis=0)

    @cached_property
    def weights(self) -> np.ndarray:
        """Weights for the round measure sin(theta) dtheta dphi (sum 4 pi)."""
        _, w = self._nodes
        return np.repeat(w[:, None], self.n_phi, axis=1) * (2.0 * math.pi / self.n_phi)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Round-measure integral over the two leading (sphere) axes of values."""
        values = np.asarray(values, dtype=float)
        w = self.weights.reshape(self.weights.shape + (1,) * (values.ndim - 2))
        return np.sum(w * values, axis=(0, 1))

    def coarsened(self) -> SphereGrid:
        return SphereGrid(max(2, self.n_theta // 2), max(2, self.n_phi // 2))

    def describe(self) -> dict[str, int]:
        return {"n_theta": self.n_theta, "n_phi": self.n_phi}


def round_gslash(grid: SphereGrid, r: float | np.ndarray = 1.0) -> np.ndarray:
    """r^2 (dtheta^2 + sin^2 theta dphi^2) at the nodes, shape (n_theta, n_phi, 2, 2)."""
    r = np.broadcast_to(np.asarray(r, dtype=float), grid.theta.shape)
    g = np.zeros(grid.theta.shape + (2, 2))
    g[..., 0, 0] = r * r
    g[..., 1, 1] = (r * np.sin(grid.theta)) ** 2
    return g


def area_density(gslash: np.ndarray, grid: SphereGrid) -> np.ndarray:
    """sqrt(det gslash) relative to the round measure."""
    gslash = np.asarray(gslash, dtype=float)
    det = np.linalg.det(gslash)
    if not np.all(np.isfinite(det)) or np.any(det <= 0.0) or np.any(gslash[..., 0, 0] <= 0.0):
        raise DegenerateMetricError("sphere metric is not positive definite at every node")
    return np.sqrt(det) / np.sin(grid.theta)


def area_radius(gslash: np.ndarray, grid: SphereGrid) -> float:
    """r with 4 pi r^2 = Area."""
    area = float(grid.integrate(area_density(gslash, grid)))
    return math.sqrt(area / (4.0 * math.pi))


def sphere_average(f: np.ndarray, gslash: np.ndarray, grid: SphereGrid) -> float:
    dens = area_density(gslash, grid)
    return float(grid.integrate(np.asarray(f, dtype=float) * dens) / grid.integrate(dens))


# ------------------------------------------------------------------
# Areal foliation
# ------------------------------------------------------------------

@dataclass
class ArealData:
    """Area radius, lapse and unit normal of the level sets of r."""

    r: float
    phi_lapse: np.ndarray
    q: float
    n: np.ndarray                   # null-frame components (e3, e4, e1, e2)
    dr: float                       # D r = (r/2) avg(Omega trchi)
    dbar_r: float                   # Dbar r


def areal_data(
    lapse: float | np.ndarray,
    trchi: float | np.ndarray,
    trchibar: float | np.ndarray,
    gslash: np.ndarray,
    grid: SphereGrid,
) -> ArealData:
    """Lapse phi = (2/r) Omega / sqrt(avg(Omega trchi) avg(Omega trchibar)).

    The unit normal is n = (q e3 + q^-1 e4)/2 with
    q = sqrt(avg(Omega trchi) / avg(Omega trchibar)).
    """
    shape = grid.theta.shape
    lapse = np.broadcast_to(np.asarray(lapse, dtype=float), shape)
    trchi = np.broadcast_to(np.asarray(trchi, dtype=float), shape)
    trchibar = np.broadcast_to(np.asarray(trchibar, dtype=float), shape)
    if np.any(trchi <= 0.0) or np.any(trchibar <= 0.0):
        raise ExpansionSignError("areal foliation needs trchi > 0 and trchibar > 0 on the sphere")
    r = area_radius(gslash, grid)
    avg = sphere_average(lapse * trchi, gslash, grid)
    avg_bar = sphere_average(lapse * trchibar, gslash, grid)
    q = math.sqrt(avg / avg_bar)
    phi = 2.0 / r * lapse / math.sqrt(avg * avg_bar)
    n = np.array([0.5 * q, 0.5 / q, 0.0, 0.0])
    return ArealData(r, phi, q, n, 0.5 * r * avg, 0.5 * r * avg_bar)


def areal_dr_residual(geo: SdSGeometry, point: ChartPoint, step: float = 1e-5) -> float:
    """|d_v r - (r/2) Omega trchi| at a point of a spherical SdS gauge."""
    u, v = point.coords[0], point.coords[1]
    h = step * max(1.0, abs(v))

    def radius(vv: float) -> float:
        return sds_gauge_data(geo, ChartPoint(point.chart, (u, vv) + point.coords[2:])).r

    dv_r = (radius(v + h) - radius(v - h)) / (2.0 * h)
    data = sds_gauge_data(geo, point)
    return abs(dv_r - 0.5 * data.r * data.omega * data.trchi)


def areal_second_fundamental_form(
    coeffs: StructureCoefficients, law: BoostLaw | None = None
) -> np.ndarray:
    """k of Sigma_r in the basis (X, e1, e2), X = (q e3 - q^-1 e4)/2."""
    law = law or BoostLaw(1.0)
    om = coeffs.lapse
    q = law.a
    lbar_q = law.lbar_a / om
    l_qinv = -law.l_a / (q * q * om)
    k = np.zeros((3, 3))
    k[0, 0] = 0.5 * (q * coeffs.omegabar_hat + coeffs.omega_hat / q + lbar_q + l_qinv)
    k[0, 1:] = k[1:, 0] = 0.5 * (coeffs.eta - coeffs.etabar)
    k[1:, 1:] = 0.5 * (q * coeffs.chibar + coeffs.chi / q)
    return k


def sigma_induced_metric(
    lapse: float | np.ndarray, q: float, gslash: np.ndarray
) -> np.ndarray:
    """q^-2 Omega^2 du^2 + gslash on Sigma_r, in coordinates (u, theta1, theta2)."""
    gslash = np.asarray(gslash, dtype=float)
    a = np.broadcast_to(np.asarray(lapse, dtype=float) / q, gslash.shape[:-2])
    g = np.zeros(gslash.shape[:-2] + (3, 3))
    g[..., 0, 0] = a * a
    g[..., 1:, 1:] = gslash
    return g


# ------------------------------------------------------------------
# Inequality reports
# ------------------------------------------------------------------

@dataclass
class InequalityReport:
    inequality: str
    lhs: float
    rhs: float
    constant_estimate: float
    grid: dict[str, int] = field(default_factory=dict)
    converged: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def isoperimetric_check(
    phi_fn: SphereFn, grid: SphereGrid, radius: float = 1.0, tol: float = 1e-2
) -> InequalityReport:
    """int (Phi - avg Phi)^2 against (int |grad Phi|)^2 on a round sphere of radius r."""

    def sides(g: SphereGrid) -> tuple[float, float]:
        values = np.asarray(phi_fn(g.theta, g.phi), dtype=float)
        dens = radius * radius
        mean = float(g.integrate(values)) / (4.0 * math.pi)
        lhs = float(g.integrate((values - mean) ** 2)) * dens
        grad = np.sqrt(_sphere_grad_sq(phi_fn, g) / (radius * radius))
        rhs = (float(g.integrate(grad)) * dens) ** 2
        return lhs, rhs

    lhs, rhs = sides(grid)
    est = _ratio(lhs, rhs)
    coarse = _ratio(*sides(grid.coarsened()))
    return InequalityReport(
        "isoperimetric", lhs, rhs, est, grid.describe(), _stable(est, coarse, tol)
    )


# ------------------------------------------------------------------
# Sobolev inequalities on Sigma_r
# ------------------------------------------------------------------

@dataclass
class CylinderField:
    """An S_u-tangent field on Sigma_r = R x S^2 with metric a^2 du^2 + r(u)^2 round.

    ``fn(u, theta, phi)`` returns the components (trailing axes of size 2,
    one per rank) in the orthonormal frame of the round coordinates.
    ``lapse`` is a = Omega / q, constant on the cylinder.
    """

    fn: SliceFn
    u: np.ndarray
    grid: SphereGrid = field(default_factory=SphereGrid)
    radius: Callable[[np.ndarray], np.ndarray] | float = 1.0
    lapse: float = 1.0
    rank: int = 0
    symmetric: bool = False

    def __post_init__(self) -> None:
        self.u = np.asarray(self.u, dtype=float)
        if self.u.ndim != 1 or self.u.size < 3 or np.any(np.diff(self.u) <= 0.0):
            raise ValueError("cylinder needs at least three increasing u nodes")
        if not self.lapse > 0.0:
            raise ValueError(f"cylinder lapse must be positive, got {self.lapse}")

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.u.size
        uu = np.repeat(self.u[:, None, None], self.grid.n_theta, axis=1)
        uu = np.repeat(uu, self.grid.n_phi, axis=2)
        th = np.broadcast_to(self.grid.theta, (n,) + self.grid.theta.shape)
        ph = np.broadcast_to(self.grid.phi, (n,) + self.grid.phi.shape)
        return uu, th, ph

    def values(self) -> np.ndarray:
        v = np.asarray(self.fn(*self.mesh), dtype=float)
        self._check_shape(v)
        return v

    def radius_of(self, u: np.ndarray) -> np.ndarray:
        if callable(self.radius):
            return np.asarray(self.radius(u), dtype=float)
        return np.full_like(np.asarray(u, dtype=float), float(self.radius))

    def norm_sq(self) -> np.ndarray:
        return _fibre_norm_sq(self.values(), self.rank)

    def grad_norm_sq(self) -> np.ndarray:
        """a^-2 |d_u f|^2 + r^-2 (|d_theta f|^2 + sin^-2 |d_phi f|^2), componentwise."""
        uu, th, ph = self.mesh
        hu = ANGLE_STEP * max(1.0, float(np.abs(self.u).max()))
        du = (np.asarray(self.fn(uu + hu, th, ph)) - np.asarray(self.fn(uu - hu, th, ph))) / (2.0 * hu)
        dth = (np.asarray(self.fn(uu, th + ANGLE_STEP, ph)) - np.asarray(self.fn(uu, th - ANGLE_STEP, ph))) / (
            2.0 * ANGLE_STEP
        )
        dph = (np.asarray(self.fn(uu, th, ph + ANGLE_STEP)) - np.asarray(self.fn(uu, th, ph - ANGLE_STEP))) / (
            2.0 * ANGLE_STEP
        )
        r = self.radius_of(uu)
        sin = np.sin(th)
        return (
            _fibre_norm_sq(du, self.rank) / self.lapse ** 2
            + (_fibre_norm_sq(dth, self.rank) + _fibre_norm_sq(dph, self.rank) / sin ** 2) / r ** 2
        )

    def integrate(self, density: np.ndarray) -> float:
        """int over Sigma_r with volume a r^2 dmu_round du (trapezoid in u)."""
        r = self.radius_of(self.u)
        per_u = np.array([self.grid.integrate(d) for d in density]) * self.lapse * r * r
        return float(integrate.trapezoid(per_u, self.u))

    def coarsened(self) -> CylinderField:
        return CylinderField(
            self.fn, self.u[::2], self.grid.coarsened(), self.radius, self.lapse, self.rank, self.symmetric
        )

    def _check_shape(self, v: np.ndarray) -> None:
        lead = self.u.shape + self.grid.theta.shape
        if v.shape != lead + (2,) * self.rank:
            raise ValueError(f"field has shape {v.shape}, expected {lead + (2,) * self.rank}")
        if self.symmetric and self.rank == 2 and not np.allclose(v, np.swapaxes(v, -1, -2)):
            raise ValueError("field declared symmetric is not symmetric")


@dataclass
class SobolevReport:
    l6_lhs: float
    l4_sup_lhs: float
    rhs: float
    ratios: tuple[float, float]
    h: float
    converged: bool

    def reports(self, grid: dict[str, int]) -> list[InequalityReport]:
        return [
            InequalityReport("sobolev_l6", self.l6_lhs, self.rhs, self.ratios[0], grid, self.converged),
            InequalityReport("sobolev_l4_trace", self.l4_sup_lhs, self.rhs, self.ratios[1], grid, self.converged),
        ]


def sobolev_trace_check(theta: CylinderField, tol: float = 2e-2) -> SobolevReport:
    """Both sides of the L^6 and the L^4 trace inequality on Sigma_r.

    ratios are lhs / rhs; ``h`` is sup |r tr theta| of the spheres S_u
    inside the cylinder, here 2 |dr/du| / a.
    """

    def sides(f: CylinderField) -> tuple[float, float, float]:
        r = f.radius_of(f.mesh[0])
        nsq = f.norm_sq()
        l6 = f.integrate(r ** 6 * nsq ** 3) ** (1.0 / 6.0)
        rr = f.radius_of(f.u)
        per_u = np.array([f.grid.integrate(n2 ** 2) for n2 in nsq]) * rr ** 6
        l4 = float(per_u.max()) ** 0.25
        rhs = f.integrate(nsq + r ** 2 * f.grad_norm_sq()) ** 0.5
        return l6, l4, rhs

    l6, l4, rhs = sides(theta)
    ratios = (_ratio(l6, rhs), _ratio(l4, rhs))
    c6, c4, crhs = sides(theta.coarsened())
    converged = _stable(ratios[0], _ratio(c6, crhs), tol) and _stable(ratios[1], _ratio(c4, crhs), tol)
    rr = theta.radius_of(theta.u)
    h = float(np.abs(2.0 * np.gradient(rr, theta.u)).max()) / theta.lapse
    return SobolevReport(l6, l4, rhs, ratios, h, converged)


# ------------------------------------------------------------------
# Sobolev inequalities on null cones
# ------------------------------------------------------------------

@dataclass
class ConeField:
    """A scalar or tensor field on an outgoing cone, sampled at v nodes.

    ``radius``, ``lapse`` and ``trchi`` are functions of v; the lapse is
    constant on each sphere.
    """

    fn: SliceFn
    v: np.ndarray
    radius: Callable[[np.ndarray], np.ndarray]
    lapse: Callable[[np.ndarray], np.ndarray]
    trchi: Callable[[np.ndarray], np.ndarray]
    grid: SphereGrid = field(default_factory=SphereGrid)
    rank: int = 0

    def __post_init__(self) -> None:
        self.v = np.asarray(self.v, dtype=float)
        if self.v.ndim != 1 or self.v.size < 3 or np.any(np.diff(self.v) <= 0.0):
            raise ValueError("cone needs at least three increasing v nodes")

    def coarsened(self) -> ConeField:
        return ConeField(
            self.fn, self.v[::2], self.radius, self.lapse, self.trchi, self.grid.coarsened(), self.rank
        )


@dataclass
class NullSobolevReport:
    F: float
    D: float
    four: float
    sup: float
    six: float
    ratios: dict[str, float]
    c_chi: float
    converged: bool

    def reports(self, grid: dict[str, int]) -> list[InequalityReport]:
        rhs = {"four": self.F, "sup": self.D + self.F, "six": (self.D ** 2 + self.F ** 2) * self.F}
        return [
            InequalityReport(f"null_sobolev_{k}", getattr(self, k), rhs[k], self.ratios[k], grid, self.converged)
            for k in ("four", "sup", "six")
        ]


def null_sobolev_check(theta: ConeField, tol: float = 2e-2) -> NullSobolevReport:
    """The three Sobolev inequalities on a strictly expanding cone.

    F = int ||Omega theta||^2 + r^2 ||Omega grad theta||^2 + r^2 ||Omega^-1 D theta||^2 dv
    and D = r ||theta||_4^2 at the first node, with L^p norms over the
    spheres of radius r(v).
    """
    trchi = np.asarray(theta.trchi(theta.v), dtype=float)
    if np.any(trchi <= 0.0):
        raise ExpansionSignError("null Sobolev inequalities need trchi > 0 along the cone")
    r = np.asarray(theta.radius(theta.v), dtype=float)
    om = np.asarray(theta.lapse(theta.v), dtype=float)
    c_chi = float(np.max(0.5 * r * trchi / om))

    def sides(f: ConeField) -> tuple[float, float, float, float, float]:
        r = np.asarray(f.radius(f.v), dtype=float)
        om = np.asarray(f.lapse(f.v), dtype=float)
        rows = [_cone_slice(f, float(v), float(rv), float(o)) for v, rv, o in zip(f.v, r, om)]
        l2, grad2, dv2, l4, l6 = (np.array(col) for col in zip(*rows))
        big_f = float(integrate.simpson(om ** 2 * l2 + r ** 2 * om ** 2 * grad2 + r ** 2 * dv2 / om ** 2, x=f.v))
        big_d = float(r[0] * l4[0] ** 2)
        four = float(integrate.simpson(om ** 2 * l4 ** 2, x=f.v))
        sup = float(np.max(r * l4 ** 2))
        six = float(integrate.simpson(om ** 2 * r ** 2 * l6 ** 6, x=f.v))
        return big_f, big_d, four, sup, six

    def ratios_of(big_f: float, big_d: float, four: float, sup: float, six: float) -> dict[str, float]:
        return {
            "four": _ratio(four, big_f),
            "sup": _ratio(sup, big_d + big_f),
            "six": _ratio(six, (big_d ** 2 + big_f ** 2) * big_f),
        }

    fine = sides(theta)
    ratios = ratios_of(*fine)
    coarse = ratios_of(*sides(theta.coarsened()))
    converged = all(_stable(ratios[k], coarse[k], tol) for k in ratios)
    return NullSobolevReport(*fine, ratios=ratios, c_chi=c_chi, converged=converged)


# ------------------------------------------------------------------
# Maxwell system on Sigma_r
# ------------------------------------------------------------------

@dataclass
class HodgeResidual:
    """Projections of div W and div *W onto n and the tangent basis (X, e1, e2).

    div_e and div_h are the constraint equations, curl_e and curl_h the
    evolution equations of the electromagnetic pair.
    """

    div_e: float
    curl_e: float
    div_h: float
    curl_h: float

    @property
    def max(self) -> float:
        return max(self.div_e, self.curl_e, self.div_h, self.curl_h)


def hodge_residual(
    weyl_fn: ArrayFn,
    metric_fn: ArrayFn,
    x: np.ndarray,
    q: float = 1.0,
    steps: np.ndarray | None = None,
) -> HodgeResidual:
    """Residuals of the Maxwell system of a Weyl field relative to Sigma_r.

    The four equations are the n-projections of the contracted Bianchi
    identities for W and *W, evaluated by central differences in a
    double-null chart with n = (q e3 + q^-1 e4)/2.
    """
    x = np.asarray(x, dtype=float)
    frame = frame_vectors(metric_fn, x)
    n = 0.5 * (q * frame[0] + frame[1] / q)
    basis = np.vstack([0.5 * (q * frame[0] - frame[1] / q), frame[2], frame[3]])

    def dual_fn(y: np.ndarray) -> np.ndarray:
        return dual(np.asarray(weyl_fn(y), dtype=float), np.asarray(metric_fn(y), dtype=float))

    div_w = weyl_divergence(weyl_fn, metric_fn, x, steps)
    div_d = weyl_divergence(dual_fn, metric_fn, x, steps)
    if not (np.all(np.isfinite(div_w)) and np.all(np.isfinite(div_d))):
        raise ConvergenceError("Weyl divergence is not finite")

    def constraint(d: np.ndarray) -> float:
        return float(np.abs(np.einsum("bcd,b,ic,d->i", d, n, basis, n)).max())

    def evolution(d: np.ndarray) -> float:
        return float(np.abs(np.einsum("bcd,ib,jc,d->ij", d, basis, basis, n)).max())

    return HodgeResidual(
        div_e=constraint(div_w),
        curl_e=evolution(div_d),
        div_h=constraint(div_d),
        curl_h=evolution(div_w),
    )


def elliptic_check(
    e_fn: ArrayFn,
    h_fn: ArrayFn,
    metric_fn: ArrayFn,
    points: np.ndarray,
    weights: np.ndarray,
) -> InequalityReport:
    """Elliptic estimate for a symmetric traceless pair on a Riemannian 3-manifold.

    lhs = int |grad E|^2 + |grad H|^2; rhs = int of the squared divergences
    and curls plus |Ric| (|E|^2 + |H|^2). ``weights`` already include the
    coordinate volume; sqrt(det g) is applied here.
    """
    lhs = 0.0
    rhs = 0.0
    for x, w in zip(np.asarray(points, dtype=float), np.asarray(weights, dtype=float)):
        g = np.asarray(metric_fn(x), dtype=float)
        ginv = np.linalg.inv(g)
        vol = w * math.sqrt(np.linalg.det(g))
        eps = levi_civita(g)
        gam = christoffel(metric_fn, x)
        ric = ricci(riemann(metric_fn, x))
        ric_norm = math.sqrt(float(np.einsum("ab,cd,ac,bd->", ric, ric, ginv, ginv)))
        for fn in (e_fn, h_fn):
            t = np.asarray(fn(x), dtype=float)
            cov = _covariant_derivative2(fn, t, gam, x)
            lhs += vol * float(np.einsum("kij,lab,kl,ia,jb->", cov, cov, ginv, ginv, ginv))
            div = np.einsum("ki,kij->j", ginv, cov)
            curl = np.einsum("iab,ak,bl,klj->ij", eps, ginv, ginv, cov)
            curl = 0.5 * (curl + curl.T)
            rhs += vol * (
                float(np.einsum("a,b,ab->", div, div, ginv))
                + float(np.einsum("ij,ab,ia,jb->", curl, curl, ginv, ginv))
                + ric_norm * float(np.einsum("ij,ab,ia,jb->", t, t, ginv, ginv))
            )
    return InequalityReport("maxwell_elliptic", lhs, rhs, _ratio(lhs, rhs), {"points": len(weights)})


# ======================================================================
# Helpers
# ======================================================================

def _fibre_norm_sq(values: np.ndarray, rank: int) -> np.ndarray:
    if rank == 0:
        return values ** 2
    return np.sum(values ** 2, axis=tuple(range(-rank, 0)))


def _sphere_grad_sq(fn: SphereFn, grid: SphereGrid) -> np.ndarray:
    th, ph = grid.theta, grid.phi
    dth = (np.asarray(fn(th + ANGLE_STEP, ph)) - np.asarray(fn(th - ANGLE_STEP, ph))) / (2.0 * ANGLE_STEP)
    dph = (np.asarray(fn(th, ph + ANGLE_STEP)) - np.asarray(fn(th, ph - ANGLE_STEP))) / (2.0 * ANGLE_STEP)
    return dth ** 2 + dph ** 2 / np.sin(th) ** 2


def _cone_slice(f: ConeField, v: float, r: float, om: float) -> tuple[float, float, float, float, float]:
    """||theta||_2^2, ||grad theta||_2^2, ||D theta||_2^2, ||theta||_4, ||theta||_6 on S_v."""
    th, ph = f.grid.theta, f.grid.phi
    vv = np.full_like(th, v)
    hv = ANGLE_STEP * max(1.0, abs(v))
    vals = np.asarray(f.fn(vv, th, ph), dtype=float)
    dv = (np.asarray(f.fn(vv + hv, th, ph)) - np.asarray(f.fn(vv - hv, th, ph))) / (2.0 * hv)
    dth = (np.asarray(f.fn(vv, th + ANGLE_STEP, ph)) - np.asarray(f.fn(vv, th - ANGLE_STEP, ph))) / (
        2.0 * ANGLE_STEP
    )
    dph = (np.asarray(f.fn(vv, th, ph + ANGLE_STEP)) - np.asarray(f.fn(vv, th, ph - ANGLE_STEP))) / (
        2.0 * ANGLE_STEP
    )
    area = r * r
    nsq = _fibre_norm_sq(vals, f.rank)
    grad = (_fibre_norm_sq(dth, f.rank) + _fibre_norm_sq(dph, f.rank) / np.sin(th) ** 2) / area
    return (
        area * float(f.grid.integrate(nsq)),
        area * float(f.grid.integrate(grad)),
        area * float(f.grid.integrate(_fibre_norm_sq(dv, f.rank))),
        (area * float(f.grid.integrate(nsq ** 2))) ** 0.25,
        (area * float(f.grid.integrate(nsq ** 3))) ** (1.0 / 6.0),
    )


def _covariant_derivative2(fn: ArrayFn, t: np.ndarray, gam: np.ndarray, x: np.ndarray) -> np.ndarray:
    """cov[k, i, j] = nabla_k T_ij for a covariant 2-tensor field."""
    dt = partial(fn, x, fd_steps(x))
    return dt - np.einsum("lki,lj->kij", gam, t) - np.einsum("lkj,il->kij", gam, t)


def _ratio(lhs: float, rhs: float) -> float:
    return lhs / rhs if rhs > 0.0 else 0.0


def _stable(fine: float, coarse: float, tol: float) -> bool:
    scale = max(abs(fine), abs(coarse))
    return scale == 0.0 or abs(fine - coarse) <= tol * scale
