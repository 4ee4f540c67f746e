"""Null frames and structure coefficients of double-null foliations.

A double-null metric in coordinates (u, v, theta1, theta2) reads

    g = -2 Omega^2 (du dv + dv du) + gslash_AB (dth^A - b^A dv)(dth^B - b^B dv)

with L = d_v + b^A d_A, Lbar = d_u and the normalized frame

    e3 = Lbar_hat = Omega^-1 Lbar,  e4 = L_hat = Omega^-1 L,  e1, e2

where (e1, e2) is the Gram-Schmidt orthonormalization of (d_theta1, d_theta2).
Frame index order everywhere in the package is (e3, e4, e1, e2).

Provides:
  - StructureCoefficients and the closed forms for the SdS gauges
  - structure_coefficients_fd for any metric in double-null form
  - FoliationChange, eikonal_condition_residual, transform_foliation and
    propagation_bound
  - BoostLaw and boost_coefficients
  - gauss_residual
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .charts import (
    ChartPoint,
    ChartTag,
    SdSGeometry,
    SdSParams,
    sds_gauge_data,
)
from .errors import (
    DomainError,
    FrameError,
    HypothesisError,
    MissingDerivativeError,
    PositivityError,
)
from .tensors import CURVATURE_SCALE, christoffel, fd_steps, lower_first, partial, riemann

logger = logging.getLogger(__name__)

MetricFn = Callable[[np.ndarray], np.ndarray]

COEFF_COLUMNS = (
    "r", "Omega", "trchi", "trchibar", "omega_hat", "omegabar_hat",
    "abs_zeta", "abs_chihat", "abs_chibarhat", "K",
)

DE_SITTER = SdSParams(lam=3.0, m=0.0)


# ------------------------------------------------------------------
# Data classes
# ------------------------------------------------------------------

@dataclass
class StructureCoefficients:
    """Connection data of a double-null foliation at one point.

    Tensors on the spheres are given in the orthonormal frame (e1, e2).
    """

    lapse: float
    trchi: float
    trchibar: float
    omega_hat: float
    omegabar_hat: float
    b: np.ndarray = field(default_factory=lambda: np.zeros(2))
    chihat: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    chibarhat: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    zeta: np.ndarray = field(default_factory=lambda: np.zeros(2))
    eta: np.ndarray = field(default_factory=lambda: np.zeros(2))
    etabar: np.ndarray = field(default_factory=lambda: np.zeros(2))
    K: float = math.nan
    r: float = math.nan

    @property
    def omega(self) -> float:
        """D log Omega."""
        return self.lapse * self.omega_hat

    @property
    def omegabar(self) -> float:
        return self.lapse * self.omegabar_hat

    @property
    def chi(self) -> np.ndarray:
        return self.chihat + 0.5 * self.trchi * np.eye(2)

    @property
    def chibar(self) -> np.ndarray:
        return self.chibarhat + 0.5 * self.trchibar * np.eye(2)

    @property
    def grad_lapse(self) -> np.ndarray:
        """dslash Omega = Omega (eta + etabar)/2."""
        return 0.5 * self.lapse * (self.eta + self.etabar)

    def check(self, tol: float = 1e-12) -> StructureCoefficients:
        for name in ("chihat", "chibarhat"):
            m = getattr(self, name)
            if np.all(np.isnan(m)):
                continue
            scale = max(1.0, float(np.abs(m).max()))
            if abs(m[0, 1] - m[1, 0]) > tol * scale or abs(np.trace(m)) > tol * scale:
                raise FrameError(f"{name} is not symmetric trace-free")
        return self

    def to_row(self) -> list[float]:
        return [
            self.r,
            self.lapse,
            self.trchi,
            self.trchibar,
            self.omega_hat,
            self.omegabar_hat,
            float(np.linalg.norm(self.zeta)),
            float(np.linalg.norm(self.chihat)),
            float(np.linalg.norm(self.chibarhat)),
            self.K,
        ]


@dataclass
class FoliationChange:
    """Point values of the derivatives of the new optical functions f and g.

    The new incoming null cones are the level sets of f, the outgoing ones
    the level sets of g. Vector quantities are in the orthonormal sphere frame.
    """

    lf: float                      # L f
    lbf: float                     # Lbar f
    lg: float                      # L g
    grad_f: np.ndarray             # dslash f
    hess_f: np.ndarray | None = None      # nablaslash^2 f
    lb_lbf: float | None = None           # Lbar(Lbar f)
    l_lbf: float | None = None            # L(Lbar f)
    l_lg: float | None = None             # L(L g)
    grad_lbf: np.ndarray | None = None    # dslash(Lbar f)
    grad_lg: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self) -> None:
        self.grad_f = np.asarray(self.grad_f, dtype=float)
        self.grad_lg = np.asarray(self.grad_lg, dtype=float)
        if self.hess_f is not None:
            self.hess_f = np.asarray(self.hess_f, dtype=float)
        if self.grad_lbf is not None:
            self.grad_lbf = np.asarray(self.grad_lbf, dtype=float)

    def validate(self) -> FoliationChange:
        if not self.lbf > 0.0:
            raise PositivityError(f"Lbar f = {self.lbf} must be positive")
        if not self.lg > 0.0:
            raise PositivityError(f"L g = {self.lg} must be positive")
        return self

    def require_second_derivatives(self) -> None:
        missing = [
            name for name in ("hess_f", "lb_lbf", "l_lbf", "l_lg", "grad_lbf")
            if getattr(self, name) is None
        ]
        if missing:
            raise MissingDerivativeError("foliation change needs " + ", ".join(missing))

    @classmethod
    def identity(cls) -> FoliationChange:
        """f = u, g = v."""
        return cls(
            lf=0.0, lbf=1.0, lg=1.0, grad_f=np.zeros(2), hess_f=np.zeros((2, 2)),
            lb_lbf=0.0, l_lbf=0.0, l_lg=0.0, grad_lbf=np.zeros(2),
        )

    @classmethod
    def from_functions(
        cls,
        f_fn: Callable[[np.ndarray], float],
        g_fn: Callable[[np.ndarray], float],
        metric_fn: MetricFn,
        x: np.ndarray,
        steps: np.ndarray | None = None,
    ) -> FoliationChange:
        """First derivatives of f and g by central differences.

        Second derivatives are left unset; supply them analytically before
        calling transform_foliation.
        """
        x = np.asarray(x, dtype=float)
        frame = DoubleNullFrame.from_metric(metric_fn(x))
        df = partial(lambda y: np.array(f_fn(y)), x, steps)
        dg = partial(lambda y: np.array(g_fn(y)), x, steps)
        return cls(
            lf=float(df[1] + frame.b @ df[2:]),
            lbf=float(df[0]),
            lg=float(dg[1] + frame.b @ dg[2:]),
            grad_f=frame.sphere @ df[2:],
        )


@dataclass
class DoubleNullFrame:
    """Lapse, shift and sphere frame read off double-null metric components."""

    lapse: float
    b: np.ndarray
    gslash: np.ndarray
    sphere: np.ndarray             # sphere[a, A]: e_a = sphere[a, A] d_A

    @classmethod
    def from_metric(cls, g: np.ndarray) -> DoubleNullFrame:
        g = np.asarray(g, dtype=float)
        if abs(g[0, 0]) > 1e-12 * np.abs(g).max() or np.abs(g[0, 2:]).max() > 1e-12 * np.abs(g).max():
            raise FrameError("metric is not in double-null form (g_uu, g_uA must vanish)")
        omega_sq = -0.5 * g[0, 1]
        if not omega_sq > 0.0:
            raise FrameError("g_uv must be negative")
        gslash = g[2:, 2:]
        b = -np.linalg.solve(gslash, g[1, 2:])
        return cls(math.sqrt(omega_sq), b, gslash, _gram_schmidt(gslash))

    def vectors(self) -> np.ndarray:
        """frame[a, mu] in the order (e3, e4, e1, e2)."""
        out = np.zeros((4, 4))
        out[0, 0] = 1.0 / self.lapse
        out[1, 1] = 1.0 / self.lapse
        out[1, 2:] = self.b / self.lapse
        out[2:, 2:] = self.sphere
        return out


def _gram_schmidt(gslash: np.ndarray) -> np.ndarray:
    e1 = np.array([1.0, 0.0]) / math.sqrt(gslash[0, 0])
    e2 = np.array([0.0, 1.0]) - (e1 @ gslash @ np.array([0.0, 1.0])) * e1
    e2 = e2 / math.sqrt(e2 @ gslash @ e2)
    return np.vstack([e1, e2])


def frame_vectors(metric_fn: MetricFn, x: np.ndarray) -> np.ndarray:
    """Coordinate components of the normalized null frame (e3, e4, e1, e2)."""
    frame = DoubleNullFrame.from_metric(metric_fn(np.asarray(x, dtype=float))).vectors()
    check_null_normalization(metric_fn(np.asarray(x, dtype=float)), frame)
    return frame


def check_null_normalization(g: np.ndarray, frame: np.ndarray, tol: float = 1e-10) -> None:
    gram = frame @ np.asarray(g) @ frame.T
    target = np.zeros((4, 4))
    target[0, 1] = target[1, 0] = -2.0
    target[2, 2] = target[3, 3] = 1.0
    err = np.abs(gram - target).max()
    if err > tol:
        raise FrameError(f"frame is not null-normalized (max deviation {err:.3e})")


# ------------------------------------------------------------------
# Public API
# ------------------------------------------------------------------

def structure_coefficients(
    chart: ChartTag, params: SdSParams | None, point: ChartPoint,
    geometry: SdSGeometry | None = None,
) -> StructureCoefficients:
    """Closed-form coefficients for the spherically symmetric gauges."""
    if point.chart != chart:
        raise DomainError(f"point is tagged {point.chart.value}, expected {chart.value}")
    if chart == ChartTag.DOUBLE_NULL_DS:
        params = DE_SITTER
    elif chart not in (ChartTag.EF, ChartTag.KRUSKAL, ChartTag.INITIAL_DATA):
        raise DomainError(f"{chart.value} is not a double-null chart")
    if params is None:
        raise DomainError("Schwarzschild-de Sitter parameters are required")
    geo = geometry if geometry is not None and geometry.params == params else SdSGeometry(params)
    data = sds_gauge_data(geo, point)
    return StructureCoefficients(
        lapse=data.omega,
        trchi=data.trchi,
        trchibar=data.trchibar,
        omega_hat=data.omega_hat,
        omegabar_hat=data.omegabar_hat,
        K=1.0 / data.r ** 2,
        r=data.r,
    )


def structure_coefficients_fd(
    metric_fn: MetricFn,
    x: np.ndarray,
    steps: np.ndarray | None = None,
    curvature_scale: float = CURVATURE_SCALE,
) -> StructureCoefficients:
    """Coefficients of a metric in double-null form by central differences."""
    x = np.asarray(x, dtype=float)
    h = fd_steps(x) if steps is None else np.asarray(steps, dtype=float)
    frame = DoubleNullFrame.from_metric(metric_fn(x))
    g = np.asarray(metric_fn(x), dtype=float)
    gam = np.einsum("ae,ebc->abc", g, christoffel(metric_fn, x, h))          # gam[d, b, c] = Gamma_{d b c}
    om = frame.lapse

    def lapse_fn(y: np.ndarray) -> np.ndarray:
        return np.array(math.log(DoubleNullFrame.from_metric(metric_fn(y)).lapse))

    def shift_fn(y: np.ndarray) -> np.ndarray:
        return DoubleNullFrame.from_metric(metric_fn(y)).b

    dlog = partial(lapse_fn, x, h)              # d_mu log Omega
    db = partial(shift_fn, x, h)                # db[mu, A] = d_mu b^A

    l_vec = np.concatenate([[0.0, 1.0], frame.b])
    dl = np.zeros((4, 4))                       # dl[A, mu] = d_A L^mu (A angular)
    dl[:, 2:] = db
    chi = np.zeros((2, 2))
    chibar = np.zeros((2, 2))
    zeta = np.zeros(2)
    for i, a_idx in enumerate((2, 3)):
        for j, b_idx in enumerate((2, 3)):
            chi[i, j] = (g[b_idx] @ dl[a_idx] + gam[b_idx, a_idx] @ l_vec) / om
            chibar[i, j] = gam[b_idx, a_idx, 0] / om
        zeta[i] = 0.5 * (gam[0, a_idx] @ l_vec) / om ** 2 + dlog[a_idx]

    e = frame.sphere
    chi = _sym(e @ chi @ e.T)
    chibar = _sym(e @ chibar @ e.T)
    trchi, trchibar = float(np.trace(chi)), float(np.trace(chibar))

    omega = float(dlog[1] + frame.b @ dlog[2:])
    omegabar = float(dlog[0])

    def sphere_metric(y: np.ndarray) -> np.ndarray:
        z = x.copy()
        z[2:] = y
        return np.asarray(metric_fn(z), dtype=float)[2:, 2:]

    ang = x[2:]
    riem2 = lower_first(riemann(sphere_metric, ang, curvature_scale), frame.gslash)
    K = float(riem2[0, 1, 0, 1] / np.linalg.det(frame.gslash))
    logger.debug("fd coefficients at %s: trchi=%.6e trchibar=%.6e K=%.6e", x, trchi, trchibar, K)

    return StructureCoefficients(
        lapse=om,
        trchi=trchi,
        trchibar=trchibar,
        omega_hat=omega / om,
        omegabar_hat=omegabar / om,
        b=frame.b,
        chihat=chi - 0.5 * trchi * np.eye(2),
        chibarhat=chibar - 0.5 * trchibar * np.eye(2),
        zeta=e @ zeta,
        eta=e @ (zeta + dlog[2:]),
        etabar=e @ (-zeta + dlog[2:]),
        K=K,
        r=_areal_radius(frame.gslash, x[2]),
    )


def eikonal_condition_residual(fc: FoliationChange, coeffs: StructureCoefficients) -> float:
    """d_u f (d_v f + b.d f) - Omega^2 |dslash f|^2; zero iff the level sets are null.

    The point is implicit: ``fc`` and ``coeffs`` are the values at one
    point, so there is no separate point argument.
    """
    return fc.lbf * fc.lf - coeffs.lapse ** 2 * float(fc.grad_f @ fc.grad_f)


def transform_foliation(
    fc: FoliationChange, coeffs: StructureCoefficients, eikonal_tol: float | None = None
) -> StructureCoefficients:
    """Coefficients of the foliation by the level sets of (f, g).

    Torsion, shift and Gauss curvature of the new spheres are not determined
    by point data and are returned as NaN.
    """
    fc.validate()
    fc.require_second_derivatives()
    if eikonal_tol is not None:
        res = eikonal_condition_residual(fc, coeffs)
        if abs(res) > eikonal_tol:
            raise HypothesisError(f"level sets of f are not null (eikonal residual {res:.3e})")

    om = coeffs.lapse
    p = fc.lbf * fc.lg
    s = math.sqrt(p)
    down = math.sqrt(fc.lbf / fc.lg)           # sqrt(Lbar f / L g)
    up = 1.0 / down
    grad_p = fc.lg * fc.grad_lbf + fc.lbf * fc.grad_lg
    grad_two_om_s = 2.0 * coeffs.grad_lapse / s - om / s ** 3 * grad_p
    lhat_p = (fc.lg * fc.l_lbf + fc.lbf * fc.l_lg) / om
    lbhat_lbf = fc.lb_lbf / om

    chi_new = (
        fc.lf / s * coeffs.chibar
        + down * coeffs.chi
        - np.outer(grad_two_om_s, fc.grad_f)
        - 2.0 * om / s * fc.hess_f
    )
    chi_new = _sym(chi_new)
    trchi_new = float(np.trace(chi_new))

    omega_hat_new = (
        fc.lf / s * coeffs.omegabar_hat
        + down * coeffs.omega_hat
        - 2.0 / s * float(fc.grad_f @ coeffs.grad_lapse)
        - 0.5 * fc.lf / (fc.lbf * s) * lbhat_lbf
        - 0.5 * lhat_p / (s * fc.lg)
        + om / s ** 3 * float(fc.grad_f @ grad_p)
    )
    omegabar_hat_new = up * coeffs.omegabar_hat - 0.5 * math.sqrt(fc.lg) * fc.lbf ** -1.5 * lbhat_lbf

    nan2 = np.full(2, math.nan)
    return StructureCoefficients(
        lapse=om / s,
        trchi=trchi_new,
        trchibar=up * coeffs.trchibar,
        omega_hat=omega_hat_new,
        omegabar_hat=omegabar_hat_new,
        b=nan2.copy(),
        chihat=chi_new - 0.5 * trchi_new * np.eye(2),
        chibarhat=up * coeffs.chibarhat,
        zeta=nan2.copy(),
        eta=nan2.copy(),
        etabar=nan2.copy(),
        K=math.nan,
        r=coeffs.r,
    )


@dataclass
class PropagationBound:
    """Both sides of the gauge-change bounds on |2 omega_hat - trchi|."""

    lhs: float
    rhs: float
    lhs_bar: float
    rhs_bar: float
    terms: dict[str, float] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs and self.lhs_bar <= self.rhs_bar

    @property
    def dominant(self) -> str:
        """Largest correction term on the outgoing side."""
        corrections = {k: v for k, v in self.terms.items() if k != "eps_trchi"}
        if not corrections:
            return ""
        return max(sorted(corrections), key=lambda k: corrections[k])


def propagation_bound(
    fc: FoliationChange, coeffs: StructureCoefficients, eps: float, tol: float = 1e-12
) -> PropagationBound:
    """Evaluate the post-change bound term by term.

    Requires |2 omega_hat - trchi| <= eps trchi and the conjugate bound on
    the input foliation, and L f >= 0.
    """
    for two_w, tr, label in (
        (2.0 * coeffs.omega_hat, coeffs.trchi, "outgoing"),
        (2.0 * coeffs.omegabar_hat, coeffs.trchibar, "incoming"),
    ):
        if abs(two_w - tr) > eps * tr + tol * max(1.0, abs(tr)):
            raise HypothesisError(f"{label} bound |2w - trchi| <= eps trchi fails on input")
    if fc.lf < -tol:
        raise HypothesisError(f"L f = {fc.lf} must be non-negative")

    new = transform_foliation(fc, coeffs)
    om = coeffs.lapse
    s = math.sqrt(fc.lbf * fc.lg)
    grad_p = fc.lg * fc.grad_lbf + fc.lbf * fc.grad_lg
    lhat_p = (fc.lg * fc.l_lbf + fc.lbf * fc.l_lg) / om
    lbhat_lbf = fc.lb_lbf / om
    f_p = abs(float(fc.grad_f @ grad_p))

    terms = {
        "eps_trchi": eps * new.trchi,
        "lf_lbar_lbarf": abs(fc.lf / (fc.lbf * s) * lbhat_lbf),
        "l_product": abs(lhat_p) / (s * fc.lg),
        "grad_f_grad_product": 2.0 * om / s ** 3 * f_p,
        "grad_lapse_grad_f": 2.0 * (1.0 + eps) / s * abs(float(coeffs.grad_lapse @ fc.grad_f)),
        "grad_f_grad_product_eps": (1.0 + eps) * om / s ** 3 * f_p,
        "laplacian_f": 2.0 * (1.0 + eps) * om / s * abs(float(np.trace(fc.hess_f))),
    }
    rhs = sum(terms.values())
    rhs_bar = eps * new.trchibar + math.sqrt(fc.lg) * fc.lbf ** -1.5 * abs(lbhat_lbf)
    return PropagationBound(
        lhs=abs(2.0 * new.omega_hat - new.trchi),
        rhs=rhs * (1.0 + tol),
        lhs_bar=abs(2.0 * new.omegabar_hat - new.trchibar),
        rhs_bar=rhs_bar * (1.0 + tol),
        terms=terms,
    )


@dataclass
class BoostLaw:
    """Rescaling e3 -> a Lbar_hat, e4 -> a^-1 L_hat.

    ``lbar_a`` and ``l_a`` are D-bar a and D a, the derivatives of a along
    Omega e3 and Omega e4 of the frame the law is applied to.
    """

    a: float
    lbar_a: float = 0.0
    l_a: float = 0.0
    dlog_a: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self) -> None:
        if not self.a > 0.0:
            raise PositivityError(f"boost parameter a = {self.a} must be positive")
        self.dlog_a = np.asarray(self.dlog_a, dtype=float)

    def inverse(self) -> BoostLaw:
        a = self.a
        return BoostLaw(1.0 / a, -self.lbar_a / a, -self.l_a / a ** 3, -self.dlog_a)


def boost_coefficients(law: BoostLaw, coeffs: StructureCoefficients) -> StructureCoefficients:
    a = law.a
    om = coeffs.lapse
    return replace(
        coeffs,
        trchibar=a * coeffs.trchibar,
        chibarhat=a * coeffs.chibarhat,
        trchi=coeffs.trchi / a,
        chihat=coeffs.chihat / a,
        zeta=coeffs.zeta + law.dlog_a,
        omegabar_hat=a * coeffs.omegabar_hat + law.lbar_a / om,
        omega_hat=coeffs.omega_hat / a - law.l_a / (a * a * om),
    )


def gauss_residual(coeffs: StructureCoefficients, rho: float, lam: float) -> float:
    """K + 1/4 trchi trchibar - 1/2 (chihat, chibarhat) + rho - Lambda/3."""
    return (
        coeffs.K
        + 0.25 * coeffs.trchi * coeffs.trchibar
        - 0.5 * float(np.sum(coeffs.chihat * coeffs.chibarhat))
        + rho
        - lam / 3.0
    )


# ------------------------------------------------------------------
# Helpers
# ------------------------------------------------------------------

def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _areal_radius(gslash: np.ndarray, theta1: float) -> float:
    """r with det(gslash) = r^4 sin^2(theta1) on a round sphere."""
    s = abs(math.sin(theta1))
    if s == 0.0:
        return math.nan
    return float(np.linalg.det(gslash)) ** 0.25 / math.sqrt(s)
