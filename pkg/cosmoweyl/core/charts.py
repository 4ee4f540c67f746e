"""Coordinate charts of de Sitter and Schwarzschild-de Sitter.

Covers:
  - de Sitter as the unit hyperboloid in 1+4 Minkowski space (Lambda/3 = 1):
    stereographic and static charts, the optical functions u*, v* and the
    spherical double-null chart
  - ellipsoidal sections obtained from cones with displaced vertices
  - Schwarzschild-de Sitter: horizons, tortoise coordinate, and the
    Eddington-Finkelstein, Kruskal and initial-data double-null gauges
  - Penrose-diagram polylines and the finite-difference pullback oracle
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import (
    ConvergenceError,
    DegenerateMetricError,
    DomainError,
    HorizonProximityError,
    NoHorizonError,
)
from .tensors import partial

logger = logging.getLogger(__name__)

ETA5 = np.diag([-1.0, 1.0, 1.0, 1.0, 1.0])
HYPERBOLOID_TOL = 1e-10
OMEGA_SQ_GUARD = 1e-10


class ChartTag(str, Enum):
    STEREOGRAPHIC = "stereographic"
    STATIC = "static"
    DOUBLE_NULL_DS = "double_null_ds"
    EF = "ef"
    KRUSKAL = "kruskal"
    INITIAL_DATA = "initial_data"


COORD_NAMES: dict[ChartTag, tuple[str, str, str, str]] = {
    ChartTag.STEREOGRAPHIC: ("u", "y1", "y2", "y3"),
    ChartTag.STATIC: ("t_prime", "r", "theta1", "theta2"),
    ChartTag.DOUBLE_NULL_DS: ("u", "v", "theta1", "theta2"),
    ChartTag.EF: ("u_star", "v_star", "theta1", "theta2"),
    ChartTag.KRUSKAL: ("u_k", "v_k", "theta1", "theta2"),
    ChartTag.INITIAL_DATA: ("u_id", "v_id", "theta1", "theta2"),
}

SDS_GAUGES = (ChartTag.EF, ChartTag.KRUSKAL, ChartTag.INITIAL_DATA)


# ======================================================================
# Points and metrics
# ======================================================================

@dataclass(frozen=True)
class AmbientPoint5:
    """Point of the unit hyperboloid -t^2 + x^2 + |x'|^2 = 1."""

    t: float
    x: float
    x1: float
    x2: float
    x3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.t, self.x, self.x1, self.x2, self.x3])

    @property
    def xprime(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])

    @property
    def residual(self) -> float:
        return abs(-self.t ** 2 + self.x ** 2 + float(self.xprime @ self.xprime) - 1.0)

    def check(self, tol: float = HYPERBOLOID_TOL) -> AmbientPoint5:
        if self.residual > tol * max(1.0, self.t ** 2):
            raise DomainError(f"point off the hyperboloid (residual {self.residual:.3e})")
        return self


@dataclass(frozen=True)
class ChartPoint:
    """Four coordinates tagged with their chart."""

    chart: ChartTag
    coords: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))
        if len(self.coords) != 4:
            raise DomainError("a chart point has exactly four coordinates")
        _check_domain(self.chart, self.coords)

    def as_array(self) -> np.ndarray:
        return np.array(self.coords)

    def to_row(self) -> list[str]:
        return [self.chart.value] + [f"{c:.17e}" for c in self.coords]


def _check_domain(chart: ChartTag, c: tuple[float, ...]) -> None:
    a, b = c[0], c[1]
    if chart == ChartTag.STEREOGRAPHIC:
        if -a * a + (c[1] ** 2 + c[2] ** 2 + c[3] ** 2) <= -4.0:
            raise DomainError("stereographic chart requires -u^2 + |y|^2 > -4")
    elif chart == ChartTag.STATIC:
        if not 0.0 <= b < 1.0:
            raise DomainError("static chart requires 0 <= r < 1")
    elif chart in (ChartTag.EF, ChartTag.DOUBLE_NULL_DS):
        if a + b >= 0.0:
            raise DomainError("double-null chart requires u* + v* < 0")
    elif chart == ChartTag.KRUSKAL:
        if a < 0.0 or b < 0.0 or a * b >= 1.0:
            raise DomainError("Kruskal chart requires u_K, v_K >= 0 and u_K v_K < 1")
    elif chart == ChartTag.INITIAL_DATA:
        if a > 0.0 and b > 0.0:
            raise DomainError("initial-data gauge has no patch with u* > 0 and v* > 0")
        if a < -1.0 or b < -1.0:
            raise DomainError("initial-data coordinates are >= -1")


@dataclass
class MetricAtPoint:
    """Metric components, inverse and chart tag at one point."""

    g: np.ndarray
    ginv: np.ndarray
    chart: ChartTag

    def __post_init__(self) -> None:
        self.g = np.asarray(self.g, dtype=float)
        self.ginv = np.asarray(self.ginv, dtype=float)
        if not np.allclose(self.g, self.g.T, rtol=0.0, atol=1e-12 * np.abs(self.g).max()):
            raise DegenerateMetricError("metric is not symmetric")
        residual = np.abs(self.g @ self.ginv - np.eye(self.g.shape[0])).max()
        if residual > max(1e-12, 1e-15 * np.linalg.cond(self.g)):
            raise DegenerateMetricError(f"g * ginv differs from identity by {residual:.3e}")
        eig = np.linalg.eigvalsh(self.g)
        if np.sum(eig < 0) != 1 or np.any(eig == 0):
            raise DegenerateMetricError("metric signature is not (-,+,+,+)")

    @classmethod
    def from_components(cls, g: np.ndarray, chart: ChartTag) -> MetricAtPoint:
        g = np.asarray(g, dtype=float)
        return cls(g=g, ginv=np.linalg.inv(g), chart=chart)


def unit_direction(theta1: float, theta2: float) -> np.ndarray:
    """Polar axis along x'_1."""
    return np.array([
        math.cos(theta1),
        math.sin(theta1) * math.cos(theta2),
        math.sin(theta1) * math.sin(theta2),
    ])


def round_sphere_block(r: float, theta1: float) -> np.ndarray:
    return np.diag([r * r, (r * math.sin(theta1)) ** 2])


def pullback_metric(
    embed_fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    ambient: np.ndarray = ETA5,
    steps: np.ndarray | None = None,
) -> np.ndarray:
    """g_ij = d_i X^A eta_AB d_j X^B by central differences."""
    jac = partial(embed_fn, np.asarray(x, dtype=float), steps)
    return jac @ ambient @ jac.T


# ======================================================================
# de Sitter (Lambda/3 = 1)
# ======================================================================

def embed_stereographic(u: float, y: Sequence[float]) -> AmbientPoint5:
    y = np.asarray(y, dtype=float)
    denom = 4.0 - u * u + float(y @ y)
    if denom <= 0.0:
        raise DomainError("stereographic denominator 4 - u^2 + |y|^2 must be positive")
    t = 4.0 * u / denom
    x = (4.0 + u * u - float(y @ y)) / denom
    xp = 4.0 * y / denom
    return AmbientPoint5(t, x, *xp).check()


def stereographic_conformal_factor(u: float, y: Sequence[float]) -> float:
    """e^{Phi} = 1 + (-u^2 + |y|^2)/4."""
    y = np.asarray(y, dtype=float)
    return 1.0 + 0.25 * (-u * u + float(y @ y))


def stereographic_metric(u: float, y: Sequence[float]) -> MetricAtPoint:
    e_phi = stereographic_conformal_factor(u, y)
    if e_phi <= 0.0:
        raise DomainError("stereographic conformal factor must be positive")
    g = np.diag([-1.0, 1.0, 1.0, 1.0]) / (e_phi * e_phi)
    return MetricAtPoint.from_components(g, ChartTag.STEREOGRAPHIC)


def static_coords(p: AmbientPoint5) -> tuple[float, float]:
    """(t', r) in the static patch x > |t|."""
    if not p.x > abs(p.t):
        raise DomainError("point is outside the static patch x > |t|")
    r = float(np.linalg.norm(p.xprime))
    if abs(r - 1.0) < 1e-14:
        raise DomainError("static coordinates degenerate on the horizon r = 1")
    t_prime = 0.5 * math.log(abs((p.x + p.t) / (p.x - p.t)))
    return t_prime, r


def embed_static(t_prime: float, r: float, theta1: float, theta2: float) -> AmbientPoint5:
    if not 0.0 <= r < 1.0:
        raise DomainError("static chart requires 0 <= r < 1")
    s = math.sqrt(1.0 - r * r)
    xp = r * unit_direction(theta1, theta2)
    return AmbientPoint5(s * math.sinh(t_prime), s * math.cosh(t_prime), *xp)


def static_metric(t_prime: float, r: float, theta1: float, theta2: float) -> MetricAtPoint:
    if not 0.0 <= r < 1.0:
        raise DomainError("static chart requires 0 <= r < 1")
    f = 1.0 - r * r
    g = np.zeros((4, 4))
    g[0, 0] = -f
    g[1, 1] = 1.0 / f
    g[2:, 2:] = round_sphere_block(r, theta1)
    return MetricAtPoint.from_components(g, ChartTag.STATIC)


def ds_optical(p: AmbientPoint5) -> tuple[float, float]:
    """Optical functions (u*, v*) of the spherical double-null foliation."""
    r = float(np.linalg.norm(p.xprime))
    if p.x == p.t or abs(r - 1.0) < 1e-14:
        raise DomainError("optical functions are singular on the horizons")
    ratio = (p.x + p.t) / (p.x - p.t)
    u = ratio * (1.0 - r) / (1.0 + r)
    v = ratio * (1.0 + r) / (1.0 - r)
    if u == 0.0 or v == 0.0:
        raise DomainError("optical functions vanish on a horizon")
    return 0.5 * math.log(abs(u)), -0.5 * math.log(abs(v))


def optical_embed(u_star: float, v_star: float, theta1: float, theta2: float) -> AmbientPoint5:
    """Ambient point of the cosmological region with optical values (u*, v*)."""
    s = 0.5 * (u_star + v_star)
    if s >= 0.0:
        raise DomainError("optical coordinates require u* + v* < 0")
    tp = 0.5 * (u_star - v_star)
    r = 1.0 / math.tanh(-s)
    lapse = -1.0 / math.sinh(s)
    xp = r * unit_direction(theta1, theta2)
    return AmbientPoint5(lapse * math.cosh(tp), lapse * math.sinh(tp), *xp)


def embed_double_null_ds(u: float, v: float, theta1: float, theta2: float) -> AmbientPoint5:
    """Ambient point of the spherical double-null chart (u + v = r*, t' = u - v).

    The optical functions of this point are (2u, 2v).
    """
    return optical_embed(2.0 * u, 2.0 * v, theta1, theta2)


def optical_metric(u_star: float, v_star: float, theta1: float) -> np.ndarray:
    """de Sitter metric in optical coordinates (u*, v*, theta1, theta2)."""
    s = 0.5 * (u_star + v_star)
    r = 1.0 / math.tanh(-s)
    omega_sq = r * r - 1.0
    g = np.zeros((4, 4))
    g[0, 1] = g[1, 0] = -0.5 * omega_sq
    g[2:, 2:] = round_sphere_block(r, theta1)
    return g


def eikonal_residual(
    level_fn: Callable[[np.ndarray], float],
    x: np.ndarray,
    metric_fn: Callable[[np.ndarray], np.ndarray],
    steps: np.ndarray | None = None,
) -> float:
    """g^{-1}(df, df) at x."""
    x = np.asarray(x, dtype=float)
    df = partial(lambda y: np.array(level_fn(y)), x, steps)
    ginv = np.linalg.inv(metric_fn(x))
    return float(df @ ginv @ df)


# ----------------------------------------------------------------------
# Ellipsoidal sections
# ----------------------------------------------------------------------

def ellipsoid_vphi(u_star: float, v_star: float, theta1: float, phi: float) -> float:
    """Closed form of the displaced optical function v_phi."""
    a = 0.5 * (u_star - v_star)
    b = 0.5 * (u_star + v_star)
    c1 = math.cos(theta1)
    sp, cp = math.sin(phi), math.cos(phi)
    two_r_sq = (
        math.cosh(u_star - v_star) * sp * sp
        + cp * cp
        - c1 * c1 * sp * sp
        + math.cosh(u_star + v_star) * (1.0 - c1 * c1 * sp * sp)
        + 2.0 * (math.sinh(u_star) - math.sinh(v_star)) * c1 * sp * cp
    )
    if two_r_sq <= 0.0:
        raise DomainError("r_phi^2 must be positive")
    r_phi = math.sqrt(0.5 * two_r_sq)
    num1 = math.cosh(a) + math.sinh(a) * cp - math.cosh(b) * c1 * sp
    den1 = math.cosh(a) - math.sinh(a) * cp + math.cosh(b) * c1 * sp
    den2 = math.sinh(b) + r_phi
    if den1 == 0.0 or den2 == 0.0:
        raise DomainError("v_phi is singular at this point")
    return (num1 / den1) * ((-math.sinh(b) + r_phi) / den2)


def ellipsoid_vphi_rotated(u_star: float, v_star: float, theta1: float, phi: float) -> float:
    """v_phi as the ambient optical function of the rotated point."""
    p = optical_embed(u_star, v_star, theta1, 0.0)
    cp, sp = math.cos(phi), math.sin(phi)
    xr = p.x * cp - p.x1 * sp
    x1r = p.x * sp + p.x1 * cp
    rr = math.sqrt(x1r * x1r + p.x2 * p.x2 + p.x3 * p.x3)
    return ((xr + p.t) / (xr - p.t)) * ((1.0 + rr) / (1.0 - rr))


def ellipsoid_vstar_phi(u_star: float, v_star: float, theta1: float, phi: float) -> float:
    """v*_phi = -1/2 log v_phi; its level sets are null."""
    return -0.5 * math.log(ellipsoid_vphi(u_star, v_star, theta1, phi))


def _japanese(eps: float) -> float:
    return math.sqrt(1.0 + eps * eps)


@dataclass
class EllipsoidSection:
    """Section of C_0 (u* = 0) by the displaced cone with parameters (eps, phi)."""

    eps: float
    phi: float
    mode: str = "small_angle"
    touches_infinity: bool = field(init=False)

    def __post_init__(self) -> None:
        if self.eps == 0.0:
            raise DomainError("ellipsoid sections need |eps| > 0")
        if self.mode not in ("small_angle", "exact"):
            raise DomainError(f"unknown ellipsoid mode: {self.mode}")
        a = abs(self.eps)
        self.touches_infinity = a <= abs(self.phi) / (1.0 + a)

    @property
    def a(self) -> float:
        return abs(self.eps)

    @property
    def b(self) -> float:
        return self.phi / (1.0 + abs(self.eps))

    @property
    def level(self) -> float:
        """Value of v_phi on the displaced cone."""
        j = _japanese(self.eps)
        return (j + self.a) / (j - self.a)

    # -- evaluators ------------------------------------------------------

    def v_star(self, theta1: np.ndarray | float) -> np.ndarray:
        theta1 = np.asarray(theta1, dtype=float)
        if self.mode == "small_angle":
            return -self.a - self.b * np.cos(theta1)
        solve = np.vectorize(self._solve_exact, otypes=[float])
        return solve(theta1)

    def r(self, theta1: np.ndarray | float) -> np.ndarray:
        theta1 = np.asarray(theta1, dtype=float)
        if self.mode == "small_angle":
            denom = self.a + self.b * np.cos(theta1)
            with np.errstate(divide="ignore"):
                return np.where(denom > 0.0, 2.0 / np.where(denom > 0.0, denom, 1.0), np.inf)
        w = self.v_star(theta1)
        return 1.0 / np.tanh(-0.5 * w)

    def omega_trchibar(self, theta1: np.ndarray | float) -> np.ndarray:
        """Omega trchibar = 2r + 4 phi cos(theta1) in the small-angle model."""
        theta1 = np.asarray(theta1, dtype=float)
        return 2.0 * self.r(theta1) + 4.0 * self.phi * np.cos(theta1)

    def area(self) -> float:
        """Closed-form area 16 pi / (a^2 - b^2)."""
        d = self.a ** 2 - self.b ** 2
        if d <= 0.0:
            return math.inf
        return 16.0 * math.pi / d

    def average_omega_trchibar(self) -> float:
        """Closed-form sphere average of Omega trchibar."""
        a, b = self.a, self.b
        d = a * a - b * b
        if d <= 0.0:
            return math.inf
        if b == 0.0:
            return 4.0 / a
        log_term = math.log((a + b) / (a - b))
        return 4.0 * a / d - 4.0 * a * (1.0 + a) + 2.0 * (1.0 + a) ** 2 / self.phi * d * log_term

    # -- helpers ---------------------------------------------------------

    def _solve_exact(self, theta1: float) -> float:
        target = self.level

        def fn(w: float) -> float:
            return ellipsoid_vphi(0.0, w, theta1, self.phi) - target

        lo = -(4.0 * self.a + 4.0 * abs(self.phi) + 1.0)
        hi = -1e-12
        try:
            return optimize.brentq(fn, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
        except ValueError as exc:
            raise ConvergenceError(
                f"no level crossing for eps={self.eps}, phi={self.phi}, theta1={theta1}"
            ) from exc


def ellipsoid_section(eps: float, phi: float, mode: str = "small_angle") -> EllipsoidSection:
    section = EllipsoidSection(eps=eps, phi=phi, mode=mode)
    if section.touches_infinity:
        logger.info("ellipsoid (%g, %g) touches infinity", eps, phi)
    return section


def ellipsoid_area(section: EllipsoidSection) -> float:
    return section.area()


def ellipsoid_average_closed_form(section: EllipsoidSection) -> float:
    return section.average_omega_trchibar()


# ======================================================================
# Schwarzschild-de Sitter
# ======================================================================

@dataclass(frozen=True)
class SdSParams:
    """Cosmological constant and mass."""

    lam: float
    m: float

    def __post_init__(self) -> None:
        if not self.lam > 0.0:
            raise DomainError("Lambda must be positive")
        if self.m < 0.0:
            raise DomainError("mass must be non-negative")
        if self.m >= self.mass_bound:
            raise NoHorizonError(
                f"m = {self.m} >= 1/(3 sqrt(Lambda)) = {self.mass_bound}: no distinct horizons"
            )

    @property
    def mass_bound(self) -> float:
        return 1.0 / (3.0 * math.sqrt(self.lam))


def sds_horizons(p: SdSParams) -> tuple[float, float, float]:
    """Roots of r^3 - (3/Lambda) r + 6m/Lambda, ordered rbar_C < r_H < r_C."""
    pp = -3.0 / p.lam
    qq = 6.0 * p.m / p.lam
    amp = 2.0 * math.sqrt(-pp / 3.0)
    arg = (3.0 * qq / (2.0 * pp)) * math.sqrt(-3.0 / pp)
    base = math.acos(max(-1.0, min(1.0, arg))) / 3.0
    roots = sorted(amp * math.cos(base - 2.0 * math.pi * k / 3.0) for k in range(3))
    polished = []
    for r in roots:
        f = r ** 3 + pp * r + qq
        df = 3.0 * r * r + pp
        polished.append(r - f / df if df != 0.0 else r)
    rbar_c, r_h, r_c = polished
    if p.m == 0.0:
        r_h = 0.0
    logger.debug("horizons for %s: %s", p, (rbar_c, r_h, r_c))
    return rbar_c, r_h, r_c


class SdSGeometry:
    """Cached horizon data, surface gravity and tortoise coordinate."""

    def __init__(self, params: SdSParams) -> None:
        self.params = params
        self.lam = params.lam
        self.m = params.m
        self.rbar_c, self.r_h, self.r_c = sds_horizons(params)
        roots = (self.rbar_c, self.r_h, self.r_c)
        # 1/F = (3/Lambda) r / prod(r - r_i) = sum A_i / (r - r_i)
        self._coeffs = []
        for i, ri in enumerate(roots):
            others = [rj for j, rj in enumerate(roots) if j != i]
            self._coeffs.append(3.0 / self.lam * ri / ((ri - others[0]) * (ri - others[1])))
        self._roots = roots
        self.kappa_c = 0.5 * self.dF(self.r_c)
        self.alpha_h = -2.0 * self.kappa_c * self._coeffs[1]
        self.alpha_cbar = -2.0 * self.kappa_c * self._coeffs[0]

    # -- radial functions ------------------------------------------------

    def F(self, r: float) -> float:
        """Lambda r^2/3 + 2m/r - 1 (= Omega^2 in Eddington-Finkelstein gauge)."""
        return self.lam * r * r / 3.0 + 2.0 * self.m / r - 1.0

    def dF(self, r: float) -> float:
        return 2.0 * self.lam * r / 3.0 - 2.0 * self.m / (r * r)

    def rstar(self, r: float) -> float:
        """-int_r^inf dr/F, by partial fractions."""
        if not r > self.r_c:
            raise DomainError(f"r* is defined for r > r_C = {self.r_c}")
        total = 0.0
        for a_i, r_i in zip(self._coeffs, self._roots):
            total += a_i * math.log1p(-r_i / r)
        return total

    def rstar_quad(self, r: float) -> float:
        if not r > self.r_c:
            raise DomainError(f"r* is defined for r > r_C = {self.r_c}")
        value, _ = integrate.quad(lambda s: 1.0 / self.F(s), r, np.inf, epsabs=1e-13, limit=200)
        return -value

    def r_of_rstar(self, rs: float) -> float:
        if not rs < 0.0:
            raise DomainError("r* < 0 in the cosmological region")
        lo = self.r_c * (1.0 + 1e-15) + 1e-300
        hi = 2.0 * self.r_c + 1.0
        while self.rstar(hi) < rs:
            hi *= 2.0
            if hi > 1e300:
                raise ConvergenceError(f"cannot bracket r for r* = {rs}")
        if self.rstar(lo) > rs:
            raise HorizonProximityError(f"r* = {rs} is too close to the cosmological horizon")
        try:
            return optimize.brentq(
                lambda r: self.rstar(r) - rs, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                maxiter=500,
            )
        except (RuntimeError, ValueError) as exc:
            raise ConvergenceError(f"inverse tortoise coordinate failed at r* = {rs}") from exc

    # -- Kruskal helpers -------------------------------------------------

    def kruskal_power(self, r: float) -> float:
        """(r - r_H)^alpha_H (r + |rbar_C|)^alphabar_C = (r - r_C)/(u_K v_K)."""
        return (r - self.r_h) ** self.alpha_h * (r + abs(self.rbar_c)) ** self.alpha_cbar

    def kruskal_omega_sq(self, r: float) -> float:
        return (
            self.lam / 3.0 / (4.0 * self.kappa_c ** 2)
            * (r - self.r_h) ** (1.0 + self.alpha_h)
            * (r + abs(self.rbar_c)) ** (1.0 + self.alpha_cbar)
            / r
        )

    def r_of_kruskal(self, uk: float, vk: float) -> float:
        prod = uk * vk
        if prod < 0.0 or prod >= 1.0:
            raise DomainError("Kruskal chart requires 0 <= u_K v_K < 1")
        if prod == 0.0:
            return self.r_c
        return self.r_of_rstar(math.log(prod) / (2.0 * self.kappa_c))

    def dF_quotient(self, r: float) -> float:
        """(F'(r) - F'(r_C)) / (r - r_C)."""
        return 2.0 * self.lam / 3.0 + 2.0 * self.m * (r + self.r_c) / (r * r * self.r_c ** 2)


def sds_rstar(p: SdSParams, r: float) -> float:
    return SdSGeometry(p).rstar(r)


def sds_r_of_rstar(p: SdSParams, rs: float) -> float:
    return SdSGeometry(p).r_of_rstar(rs)


# ----------------------------------------------------------------------
# Gauges
# ----------------------------------------------------------------------

@dataclass
class SphericalGaugeData:
    """Closed-form data of a spherically symmetric double-null gauge."""

    r: float
    omega: float
    du_r: float
    dv_r: float
    trchi: float
    trchibar: float
    omega_hat: float
    omegabar_hat: float

    @property
    def q(self) -> float:
        """sqrt(Omega trchi / Omega trchibar) with pointwise averages."""
        return math.sqrt(self.trchi / self.trchibar)


def _ef_data(geo: SdSGeometry, us: float, vs: float) -> SphericalGaugeData:
    r = geo.r_of_rstar(us + vs)
    f = geo.F(r)
    if f <= OMEGA_SQ_GUARD:
        raise HorizonProximityError(f"Omega^2 = {f:.3e} too small in Eddington-Finkelstein gauge")
    om = math.sqrt(f)
    tr = 2.0 * om / r
    w = geo.dF(r) / (2.0 * om)
    return SphericalGaugeData(r, om, f, f, tr, tr, w, w)


def _kruskal_data(geo: SdSGeometry, uk: float, vk: float) -> SphericalGaugeData:
    r = geo.r_of_kruskal(uk, vk)
    om_sq = geo.kruskal_omega_sq(r)
    om = math.sqrt(om_sq)
    k = geo.kappa_c
    dp = geo.dF_quotient(r) * geo.kruskal_power(r) / (4.0 * k * om)
    return SphericalGaugeData(
        r=r,
        omega=om,
        du_r=2.0 * k * om_sq * vk,
        dv_r=2.0 * k * om_sq * uk,
        trchi=4.0 * k * om * uk / r,
        trchibar=4.0 * k * om * vk / r,
        omega_hat=dp * uk,
        omegabar_hat=dp * vk,
    )


def _initial_data(geo: SdSGeometry, ui: float, vi: float) -> SphericalGaugeData:
    uk = math.exp(ui) if ui > 0.0 else ui + 1.0
    vk = math.exp(vi) if vi > 0.0 else vi + 1.0
    kd = _kruskal_data(geo, uk, vk)
    if ui > 0.0:
        s = math.sqrt(uk)
        return SphericalGaugeData(
            r=kd.r,
            omega=kd.omega * s,
            du_r=uk * kd.du_r,
            dv_r=kd.dv_r,
            trchi=kd.trchi / s,
            trchibar=kd.trchibar * s,
            omega_hat=kd.omega_hat / s,
            omegabar_hat=s * kd.omegabar_hat + 1.0 / (2.0 * kd.omega * s),
        )
    if vi > 0.0:
        s = math.sqrt(vk)
        return SphericalGaugeData(
            r=kd.r,
            omega=kd.omega * s,
            du_r=kd.du_r,
            dv_r=vk * kd.dv_r,
            trchi=kd.trchi * s,
            trchibar=kd.trchibar / s,
            omega_hat=s * kd.omega_hat + 1.0 / (2.0 * kd.omega * s),
            omegabar_hat=kd.omegabar_hat / s,
        )
    return kd


_GAUGE_DATA = {
    ChartTag.EF: _ef_data,
    ChartTag.DOUBLE_NULL_DS: _ef_data,
    ChartTag.KRUSKAL: _kruskal_data,
    ChartTag.INITIAL_DATA: _initial_data,
}


def sds_gauge_data(geo: SdSGeometry, point: ChartPoint) -> SphericalGaugeData:
    try:
        fn = _GAUGE_DATA[point.chart]
    except KeyError:
        raise DomainError(f"{point.chart.value} is not a Schwarzschild-de Sitter gauge") from None
    return fn(geo, point.coords[0], point.coords[1])


def spherical_null_metric(omega: float, r: float, theta1: float) -> np.ndarray:
    """-2 Omega^2 (du dv + dv du) + r^2 round metric."""
    g = np.zeros((4, 4))
    g[0, 1] = g[1, 0] = -2.0 * omega * omega
    g[2:, 2:] = round_sphere_block(r, theta1)
    return g


def sds_chart(
    gauge: ChartTag, p: SdSParams, point: ChartPoint, geometry: SdSGeometry | None = None
) -> tuple[MetricAtPoint, float, tuple[float, float]]:
    """Metric, null lapse and (d_u r, d_v r) in a double-null gauge."""
    if point.chart != gauge:
        raise DomainError(f"point is tagged {point.chart.value}, expected {gauge.value}")
    geo = geometry or SdSGeometry(p)
    data = sds_gauge_data(geo, point)
    g = spherical_null_metric(data.omega, data.r, point.coords[2])
    return MetricAtPoint.from_components(g, gauge), data.omega, (data.du_r, data.dv_r)


def sds_metric_fn(geo: SdSGeometry, gauge: ChartTag) -> Callable[[np.ndarray], np.ndarray]:
    """Metric components as a function of the chart coordinates."""

    def metric(x: np.ndarray) -> np.ndarray:
        data = _GAUGE_DATA[gauge](geo, float(x[0]), float(x[1]))
        return spherical_null_metric(data.omega, data.r, float(x[2]))

    return metric


def ef_steps(geo: SdSGeometry, r: float, scale: float = 1e-3) -> np.ndarray:
    """Steps for curvature differences in EF gauge: dr of about scale * r."""
    du = scale * r / geo.F(r)
    return np.array([du, du, scale, scale])


# ----------------------------------------------------------------------
# Penrose diagram
# ----------------------------------------------------------------------

@dataclass
class Polyline:
    label: str
    points: np.ndarray          # (n, 2)


def penrose_polylines(
    geo: SdSGeometry,
    radii: Sequence[float],
    coords: str = "kruskal",
    n_points: int = 64,
    u_range: float = 3.0,
) -> list[Polyline]:
    """Level sets of r, the horizons and future infinity as polylines."""
    lines: list[Polyline] = []
    if coords == "kruskal":
        s = np.linspace(0.0, 1.0, n_points)
        lines.append(Polyline("horizon_cbar", np.column_stack([np.zeros_like(s), s])))
        lines.append(Polyline("horizon_c", np.column_stack([s, np.zeros_like(s)])))
        for r in radii:
            level = math.exp(2.0 * geo.kappa_c * geo.rstar(r))
            uk = np.geomspace(level, 1.0, n_points)
            lines.append(Polyline(f"r={r:g}", np.column_stack([uk, level / uk])))
        uk = np.linspace(1e-3, 1.0, n_points)
        lines.append(Polyline("scri_plus", np.column_stack([uk, np.minimum(1.0 / uk, 1e3)])))
    elif coords == "ef":
        us = np.linspace(-u_range, u_range, n_points)
        for r in radii:
            rs = geo.rstar(r)
            lines.append(Polyline(f"r={r:g}", np.column_stack([us, rs - us])))
        lines.append(Polyline("scri_plus", np.column_stack([us, -us])))
    else:
        raise DomainError(f"unknown Penrose coordinates: {coords}")
    return lines


def polylines_svg(lines: Sequence[Polyline], size: int = 400) -> str:
    pts = np.vstack([ln.points for ln in lines])
    finite = pts[np.all(np.isfinite(pts), axis=1)]
    lo, hi = finite.min(axis=0), finite.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">'
    ]
    for ln in lines:
        p = ln.points[np.all(np.isfinite(ln.points), axis=1)]
        xy = (p - lo) / span * (size - 20) + 10
        coords = " ".join(f"{x:.3f},{size - y:.3f}" for x, y in xy)
        out.append(f'<polyline fill="none" stroke="black" data-label="{ln.label}" points="{coords}"/>')
    out.append("</svg>")
    return "\n".join(out)
