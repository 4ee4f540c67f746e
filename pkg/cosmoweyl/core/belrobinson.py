"""Bel-Robinson energy currents and the redshift divergence.

The multipliers are built from the null frame (e3, e4, e1, e2):

    M   = (1/2 Omega) (e3 + e4)
    M_a = (1/2 Omega) (a e3 + a^-1 e4)
    N   = Omega^2 M_q = (Omega/2) (q e3 + q^-1 e4)

Deformation tensors are stored with lowered indices in the frame
(a e3, a^-1 e4, e1, e2) boosted by the multiplier's own weight.

Provides:
  - bel_robinson, bel_robinson_null, q_null_components
  - FluxDensity, flux_sigma_density, flux_null_density
  - DeformationNull, deformation, lie_derivative_fd
  - KDecomp, k_decompose, kplus_closed_form, kminus_printed
  - RedshiftCheck, redshift_pointwise
  - commutator_frame, commutator_fd
  - modified_lie_weyl, modified_lie_rho_printed, lie_derivative_weyl_fd
  - EnergyClosure, energy_identity_closure, sds_sample, sigma_flux
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy import integrate

from .charts import ChartPoint, ChartTag, SdSGeometry, SdSParams
from .errors import ConvergenceError, MissingDerivativeError, PositivityError, SymmetryError
from .nullframe import (
    BoostLaw,
    StructureCoefficients,
    check_null_normalization,
    frame_vectors,
    structure_coefficients,
)
from .tensors import (
    bracket,
    fd_steps,
    lie_derivative_metric,
    lie_derivative_tensor4,
    richardson,
)
from .weyl import EPS2, NULL_GRAM, WeylNull, boost_weyl, dual, reconstruct, sds_weyl_null

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]

NULL_GRAM_INV = np.linalg.inv(NULL_GRAM)
FLUX_TERMS = ("abar", "bbar", "rho_sigma", "b", "a")
ENERGY_COLUMNS = ("r", "flux", "int_kplus", "int_kminus", "residual")


class VectorField(str, Enum):
    M = "M"
    MA = "Ma"
    N = "N"


# ------------------------------------------------------------------
# Data classes
# ------------------------------------------------------------------

@dataclass
class FluxDensity:
    value: float
    breakdown: dict[str, float] = field(default_factory=dict)


@dataclass
class DeformationNull:
    """Null components of a trace-free deformation tensor (lowered indices)."""

    nbar: float                 # pihat(e3, e3)
    nn: float                   # pihat(e4, e4)
    j: float                    # pihat(e3, e4)
    mbar: np.ndarray            # pihat(e3, e_A)
    mm: np.ndarray              # pihat(e4, e_A)
    ii: np.ndarray              # pihat(e_A, e_B)

    def __post_init__(self) -> None:
        self.mbar = np.asarray(self.mbar, dtype=float)
        self.mm = np.asarray(self.mm, dtype=float)
        self.ii = np.asarray(self.ii, dtype=float)

    @classmethod
    def from_tensor(cls, t: np.ndarray) -> DeformationNull:
        t = 0.5 * (t + t.T)
        return cls(t[0, 0], t[1, 1], t[0, 1], t[0, 2:].copy(), t[1, 2:].copy(), t[2:, 2:].copy())

    def to_tensor(self) -> np.ndarray:
        t = np.zeros((4, 4))
        t[0, 0] = self.nbar
        t[1, 1] = self.nn
        t[0, 1] = t[1, 0] = self.j
        t[0, 2:] = t[2:, 0] = self.mbar
        t[1, 2:] = t[2:, 1] = self.mm
        t[2:, 2:] = self.ii
        return t

    def raised(self) -> np.ndarray:
        """pihat^ab; e.g. pihat^34 = j/4 and pihat^33 = nn/4."""
        return NULL_GRAM_INV @ self.to_tensor() @ NULL_GRAM_INV

    def trace(self) -> float:
        return float(np.einsum("ab,ab->", NULL_GRAM_INV, self.to_tensor()))

    def check(self, tol: float = 1e-12) -> DeformationNull:
        scale = max(1.0, float(np.abs(self.to_tensor()).max()))
        if abs(self.trace()) > tol * scale:
            raise SymmetryError(f"deformation tensor has trace {self.trace():.3e}")
        return self


@dataclass
class KDecomp:
    kplus: float
    kminus: float

    @property
    def total(self) -> float:
        return self.kplus + self.kminus


@dataclass
class RedshiftCheck:
    lhs: float
    rhs: float
    holds: bool
    hypothesis_ok: bool
    provision_ok: bool | None = None


@dataclass
class EnergyClosure:
    rows: list[tuple[float, float, float, float, float]]
    residual: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.residual < self.tolerance


# ------------------------------------------------------------------
# Bel-Robinson tensor and fluxes
# ------------------------------------------------------------------

def bel_robinson(w: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Q_abcd = W_aecf W_b^e_d^f + *W_aecf *W_b^e_d^f."""
    ginv = np.linalg.inv(g)
    wd = dual(w, g)

    def square(x: np.ndarray) -> np.ndarray:
        return np.einsum("aecf,eE,fF,bEdF->abcd", x, ginv, ginv, x)

    return square(w) + square(wd)


def bel_robinson_null(w: WeylNull) -> np.ndarray:
    """Q in the null frame the components of w refer to."""
    full = reconstruct(w)
    return bel_robinson(full.components, full.g)


def q_null_components(w: WeylNull) -> tuple[float, float, float, float, float]:
    """Q(3,3,3,3), Q(3,3,3,4), Q(3,3,4,4), Q(3,4,4,4), Q(4,4,4,4)."""
    return (
        2.0 * _norm2(w.abar),
        4.0 * _norm2(w.bbar),
        4.0 * (w.rho ** 2 + w.sigma ** 2),
        4.0 * _norm2(w.b),
        2.0 * _norm2(w.a),
    )


def flux_sigma_density(
    w: WeylNull, q: float, lapse: float, variant: str = "aligned"
) -> FluxDensity:
    """Q(n_q, X, X, X) with X = M_q ("aligned") or X = M ("prime")."""
    _require_positive(q=q, lapse=lapse)
    scale = (2.0 * lapse) ** -3
    if variant == "aligned":
        wq = boost_weyl(q, w)
        coeffs = (1.0, 8.0, 12.0, 8.0, 1.0)
        norms = _norms(wq)
    elif variant == "prime":
        coeffs = (q, 2.0 * (3.0 * q + 1.0 / q), 6.0 * (q + 1.0 / q), 2.0 * (q + 3.0 / q), 1.0 / q)
        norms = _norms(w)
    else:
        raise ValueError(f"unknown flux variant {variant!r}")
    breakdown = {k: scale * c * n for k, c, n in zip(FLUX_TERMS, coeffs, norms)}
    return FluxDensity(sum(breakdown.values()), breakdown)


def flux_null_density(w: WeylNull, lapse: float, q: float = 1.0) -> float:
    """Omega Q(L_hat, M_q, M_q, M_q): the flux through an outgoing cone."""
    _require_positive(q=q, lapse=lapse)
    wq = boost_weyl(q, w) if q != 1.0 else w
    _, nbb, nrs, nb, na = _norms(wq)
    return q / (2.0 * lapse) ** 2 * (2.0 * nbb + 6.0 * nrs + 6.0 * nb + na)


# ------------------------------------------------------------------
# Deformation tensors
# ------------------------------------------------------------------

def deformation(
    vf: VectorField | str, coeffs: StructureCoefficients, law: BoostLaw | None = None
) -> DeformationNull:
    """Closed-form trace-free deformation tensor of M, M_a or N.

    ``law`` carries the weight (a or q) with its derivatives along the
    unboosted frame; it is ignored for M.
    """
    vf = VectorField(vf)
    if vf is VectorField.M:
        law = BoostLaw(1.0)
    elif law is None:
        raise MissingDerivativeError(f"deformation of {vf.value} needs the weight and its derivatives")
    om = coeffs.lapse
    a = law.a
    lbar, linv = _weight_derivatives(law, om)
    if vf is VectorField.N:
        bracket_n = (
            a * coeffs.trchibar + coeffs.trchi / a
            - 2.0 * a * coeffs.omegabar_hat - 2.0 * coeffs.omega_hat / a
            - lbar - linv
        )
        mbar = om * (2.0 * coeffs.zeta + law.dlog_a)
        return DeformationNull(
            nbar=2.0 * om * lbar,
            nn=2.0 * om * linv,
            j=0.5 * om * bracket_n,
            mbar=mbar,
            mm=-mbar,
            ii=om * (a * coeffs.chibarhat + coeffs.chihat / a) + 0.25 * om * bracket_n * np.eye(2),
        )
    y = a * coeffs.trchibar + coeffs.trchi / a - lbar - linv
    return DeformationNull(
        nbar=(4.0 * a * coeffs.omegabar_hat + 2.0 * lbar) / om,
        nn=(4.0 * coeffs.omega_hat / a + 2.0 * linv) / om,
        j=0.5 * y / om,
        mbar=(2.0 * coeffs.eta + law.dlog_a) / om,
        mm=(2.0 * coeffs.etabar - law.dlog_a) / om,
        ii=(a * coeffs.chibarhat + coeffs.chihat / a + 0.25 * y * np.eye(2)) / om,
    )


def lie_derivative_fd(
    metric_fn: ArrayFn,
    vector_fn: ArrayFn,
    x: np.ndarray,
    frame: np.ndarray | None = None,
    steps: np.ndarray | None = None,
    tol: float = 1e-2,
    use_richardson: bool = True,
) -> DeformationNull:
    """Trace-free part of L_X g by central differences, in a null frame.

    ``frame[a, mu]`` defaults to the normalized double-null frame of the
    metric. The estimate is Richardson-extrapolated from h and h/2; with
    ``use_richardson=False`` the bare O(h^2) difference at h is returned.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(metric_fn(x), dtype=float)
    if frame is None:
        frame = frame_vectors(metric_fn, x)
    check_null_normalization(g, frame)
    h = fd_steps(x) if steps is None else np.asarray(steps, dtype=float)
    coarse = lie_derivative_metric(metric_fn, vector_fn, x, h)
    if use_richardson:
        fine = lie_derivative_metric(metric_fn, vector_fn, x, 0.5 * h)
        pi = richardson(coarse, fine)
        scale = max(1.0, float(np.abs(pi).max()))
        drift = float(np.abs(fine - coarse).max()) / scale
    else:
        pi, drift = coarse, 0.0
    if not np.all(np.isfinite(pi)) or drift > tol:
        raise ConvergenceError(f"Lie derivative did not settle (relative drift {drift:.3e})")
    tr = float(np.einsum("ab,ab->", np.linalg.inv(g), pi))
    pihat = pi - 0.25 * tr * g
    return DeformationNull.from_tensor(frame @ pihat @ frame.T)


# ------------------------------------------------------------------
# Divergence of the energy current
# ------------------------------------------------------------------

def k_decompose(
    w: WeylNull, coeffs: StructureCoefficients, law: BoostLaw | None = None
) -> KDecomp:
    """K = 3/2 Q(pihat, M_a, M_a) split by the parts of pihat.

    K+ collects the (33), (44), (34) and pure-trace sphere components of
    pihat, K- the mixed components and the trace-free sphere block. Both
    are evaluated in the frame boosted by a.
    """
    law = law or BoostLaw(1.0)
    pi = deformation(VectorField.MA, coeffs, law).raised()
    q4 = bel_robinson_null(boost_weyl(law.a, w))
    mvec = np.array([1.0, 1.0, 0.0, 0.0]) / (2.0 * coeffs.lapse)
    qmm = np.einsum("abcd,c,d->ab", q4, mvec, mvec)
    plus = np.zeros((4, 4))
    plus[:2, :2] = pi[:2, :2]
    plus[2:, 2:] = 0.5 * np.trace(pi[2:, 2:]) * np.eye(2)
    minus = pi - plus
    return KDecomp(
        kplus=1.5 * float(np.einsum("ab,ab->", plus, qmm)),
        kminus=1.5 * float(np.einsum("ab,ab->", minus, qmm)),
    )


def kplus_closed_form(
    w: WeylNull, coeffs: StructureCoefficients, law: BoostLaw | None = None
) -> float:
    """K+ of M_a expanded in the unboosted null components of w."""
    law = law or BoostLaw(1.0)
    a = law.a
    om = coeffs.lapse
    lbar, linv = _weight_derivatives(law, om)
    tc, tcb = coeffs.trchi, coeffs.trchibar
    oh, obh = coeffs.omega_hat, coeffs.omegabar_hat
    nab, nbb, nrs, nb, na = _norms(w)
    total = (
        (2.0 * oh / a + linv) * a ** 4 * nab
        + 2.0 * (a * tcb + tc / a + 4.0 * oh / a - lbar + linv) * a * a * nbb
        + (4.0 * a * obh + 4.0 * a * tcb - 2.0 * lbar + 4.0 * oh / a + 4.0 * tc / a - 2.0 * linv) * nrs
        + 2.0 * (a * tcb + tc / a + 4.0 * a * obh + lbar - linv) * nb / (a * a)
        + (2.0 * a * obh + lbar) * na / a ** 4
    )
    return 3.0 * total / (2.0 * om) ** 3


def kminus_printed(w: WeylNull, coeffs: StructureCoefficients) -> float:
    """K- of M as an explicit quadratic expression (cross-check only)."""
    eta, etab = coeffs.eta, coeffs.etabar
    chs = coeffs.chibarhat + coeffs.chihat
    dual_b = EPS2 @ w.b
    dual_bb = EPS2 @ w.bbar
    dual_abar = EPS2 @ w.abar
    dual_a = EPS2 @ w.a
    total = (
        0.5 * etab @ w.abar @ w.bbar
        - 0.5 * eta @ w.a @ w.b
        + 0.5 * w.rho * ((2.0 * etab + eta) @ w.bbar - (2.0 * eta + etab) @ w.b)
        + 0.5 * w.sigma * ((2.0 * etab + eta) @ dual_bb + (2.0 * eta + etab) @ dual_b)
        - w.bbar @ chs @ w.b
        + 0.25 * w.rho * float(np.sum(chs * (w.abar + w.a)))
        + 0.25 * w.sigma * float(np.sum(chs * (dual_abar - dual_a)))
    )
    return 3.0 * float(total) / coeffs.lapse ** 3


def redshift_pointwise(
    w: WeylNull,
    coeffs: StructureCoefficients,
    r: float,
    eps0: float,
    law: BoostLaw | None = None,
    c0: float | None = None,
    lapse_phi: float | None = None,
) -> RedshiftCheck:
    """Compare phi K+ with (6/r)(1 - eps0)^2 times the Sigma_r flux density.

    ``lapse_phi`` defaults to (2/r) / sqrt(trchi trchibar), the areal
    lapse with pointwise values standing in for the sphere averages.
    """
    law = law or BoostLaw(1.0)
    rhs = 6.0 / r * (1.0 - eps0) ** 2 * flux_sigma_density(w, law.a, coeffs.lapse).value
    provision = None if c0 is None else c0 / coeffs.lapse <= eps0
    if not (coeffs.trchi > 0.0 and coeffs.trchibar > 0.0):
        logger.debug("redshift check skipped: trchi=%g trchibar=%g", coeffs.trchi, coeffs.trchibar)
        return RedshiftCheck(math.nan, rhs, False, False, provision)
    phi = lapse_phi if lapse_phi is not None else 2.0 / r / math.sqrt(coeffs.trchi * coeffs.trchibar)
    lhs = phi * k_decompose(w, coeffs, law).kplus
    return RedshiftCheck(lhs, rhs, lhs >= rhs, True, provision)


# ------------------------------------------------------------------
# Commutators and modified Lie derivatives
# ------------------------------------------------------------------

def commutator_frame(
    coeffs: StructureCoefficients,
    law: BoostLaw | None,
    sphere_transport: np.ndarray | None = None,
) -> np.ndarray:
    """Rows [N, e_a] in the frame (q e3, q^-1 e4, e1, e2).

    ``sphere_transport[A, B]`` holds the e_B components of
    nabla_3 e_A + nabla_4 e_A projected to the spheres (zero for a
    transported sphere frame).
    """
    if law is None:
        raise MissingDerivativeError("commutators of N need q and its derivatives")
    om = coeffs.lapse
    q = law.a
    lbar, linv = _weight_derivatives(law, om)
    transport = np.zeros((2, 2)) if sphere_transport is None else np.asarray(sphere_transport)
    out = np.zeros((4, 4))
    horizontal = om * (coeffs.etabar - coeffs.eta)
    out[0, 0] = -0.5 * om * (coeffs.omega_hat / q + q * coeffs.omegabar_hat + linv)
    out[0, 1] = 0.5 * om * lbar
    out[0, 2:] = horizontal
    out[1, 0] = 0.5 * om * linv
    out[1, 1] = -0.5 * om * (q * coeffs.omegabar_hat + lbar + coeffs.omega_hat / q)
    out[1, 2:] = -horizontal
    out[2:, 0] = -0.5 * om * law.dlog_a
    out[2:, 1] = 0.5 * om * law.dlog_a
    out[2:, 2:] = 0.5 * om * (transport - q * coeffs.chibar - coeffs.chi / q)
    return out


def commutator_fd(
    n_fn: ArrayFn, frame_fn: ArrayFn, x: np.ndarray, steps: np.ndarray | None = None
) -> np.ndarray:
    """[N, e_a] by central differences, expressed in the frame at x."""
    x = np.asarray(x, dtype=float)
    frame = np.asarray(frame_fn(x), dtype=float)
    inv = np.linalg.inv(frame)
    rows = [
        bracket(n_fn, lambda y, a=a: np.asarray(frame_fn(y))[a], x, steps) @ inv
        for a in range(4)
    ]
    return np.vstack(rows)


def lie_derivative_weyl_fd(
    weyl_fn: ArrayFn, vector_fn: ArrayFn, x: np.ndarray, steps: np.ndarray | None = None
) -> np.ndarray:
    """L_X W in coordinates, Richardson-extrapolated from h and h/2."""
    x = np.asarray(x, dtype=float)
    h = fd_steps(x) if steps is None else np.asarray(steps, dtype=float)
    coarse = lie_derivative_tensor4(weyl_fn, vector_fn, x, h)
    fine = lie_derivative_tensor4(weyl_fn, vector_fn, x, 0.5 * h)
    return richardson(coarse, fine)


def modified_lie_weyl(
    weyl_fn: ArrayFn,
    vector_fn: ArrayFn,
    metric_fn: ArrayFn,
    x: np.ndarray,
    steps: np.ndarray | None = None,
) -> np.ndarray:
    """L_X W - 1/8 tr(pi) W - 1/2 (pihat . W), pihat contracted into every slot."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(metric_fn(x), dtype=float)
    ginv = np.linalg.inv(g)
    w = np.asarray(weyl_fn(x), dtype=float)
    h = fd_steps(x) if steps is None else np.asarray(steps, dtype=float)
    pi = richardson(
        lie_derivative_metric(metric_fn, vector_fn, x, h),
        lie_derivative_metric(metric_fn, vector_fn, x, 0.5 * h),
    )
    tr = float(np.einsum("ab,ab->", ginv, pi))
    mixed = ginv @ (pi - 0.25 * tr * g)          # mixed[mu, a] = pihat^mu_a
    corr = (
        np.einsum("ma,mbcd->abcd", mixed, w)
        + np.einsum("mb,amcd->abcd", mixed, w)
        + np.einsum("mc,abmd->abcd", mixed, w)
        + np.einsum("md,abcm->abcd", mixed, w)
    )
    return lie_derivative_weyl_fd(weyl_fn, vector_fn, x, h) - 0.125 * tr * w - 0.5 * corr


def modified_lie_rho_printed(
    w: WeylNull, n_rho: float, coeffs: StructureCoefficients, law: BoostLaw
) -> float:
    """rho of the modified Lie derivative along N from the component formula.

    ``n_rho`` is N(rho); the remaining terms use the components of w in
    the frame boosted by q. Reported next to the definitional value,
    never enforced.
    """
    om = coeffs.lapse
    q = law.a
    lbar, linv = _weight_derivatives(law, om)
    wq = boost_weyl(q, w)
    weight = (
        2.0 * q * coeffs.omegabar_hat + 2.0 * coeffs.omega_hat / q
        + q * coeffs.trchibar + coeffs.trchi / q + lbar + linv
    )
    torsion = 2.0 * coeffs.zeta + law.dlog_a
    return n_rho + 0.375 * om * weight * wq.rho + 0.5 * om * float(torsion @ (wq.b + wq.bbar))


# ------------------------------------------------------------------
# Energy identity on Schwarzschild-de Sitter
# ------------------------------------------------------------------

def energy_identity_closure(
    params: SdSParams, r0: float, r1: float | None = None, n_rows: int = 11, tol: float = 1e-3
) -> EnergyClosure:
    """Flux through Sigma_r against the integrated divergence, per unit t.

    On Eddington-Finkelstein spheres Sigma_r carries the volume
    4 pi r^2 Omega dt, and the region between two levels the volume
    phi dr times that. The residual is
    |F(r0) - F(r1) - int phi K| / F(r0).
    """
    geo = SdSGeometry(params)
    r1 = 2.0 * r0 if r1 is None else r1
    if not r1 > r0 > geo.r_c:
        raise ValueError(f"need r_C = {geo.r_c:.6g} < r0 < r1, got r0={r0}, r1={r1}")

    def density(r: float, part: str) -> float:
        coeffs, w = sds_sample(geo, r)
        phi = 2.0 / r / math.sqrt(coeffs.trchi * coeffs.trchibar)
        k = k_decompose(w, coeffs)
        value = k.kplus if part == "plus" else k.kminus
        return 4.0 * math.pi * r * r * coeffs.lapse * phi * value

    def integral(part: str, hi: float) -> float:
        value, _ = integrate.quad(density, r0, hi, args=(part,), epsabs=1e-16, epsrel=1e-12, limit=200)
        return value

    f0 = sigma_flux(geo, r0)
    rows = []
    for r in np.linspace(r0, r1, n_rows):
        fr = sigma_flux(geo, float(r))
        kp = integral("plus", float(r)) if r > r0 else 0.0
        km = integral("minus", float(r)) if r > r0 else 0.0
        rows.append((float(r), fr, kp, km, abs(f0 - fr - kp - km) / f0))
    logger.debug("energy identity closure on [%g, %g]: residual %.3e", r0, r1, rows[-1][-1])
    return EnergyClosure(rows, rows[-1][-1], tol)


def sds_sample(geo: SdSGeometry, r: float) -> tuple[StructureCoefficients, WeylNull]:
    """Eddington-Finkelstein coefficients and Weyl field on the sphere of radius r."""
    half = 0.5 * geo.rstar(r)
    point = ChartPoint(ChartTag.EF, (half, half, 0.5 * math.pi, 0.0))
    return structure_coefficients(ChartTag.EF, geo.params, point, geo), sds_weyl_null(geo.m, r)


def sigma_flux(geo: SdSGeometry, r: float) -> float:
    """Flux of the exact field through Sigma_r per unit t, 24 pi m^2 / (r^4 Omega^2)."""
    coeffs, w = sds_sample(geo, r)
    return 4.0 * math.pi * r * r * coeffs.lapse * flux_sigma_density(w, 1.0, coeffs.lapse).value


# ======================================================================
# Helpers
# ======================================================================

def _norm2(x: np.ndarray) -> float:
    return float(np.sum(np.asarray(x) ** 2))


def _norms(w: WeylNull) -> tuple[float, float, float, float, float]:
    return (_norm2(w.abar), _norm2(w.bbar), w.rho ** 2 + w.sigma ** 2, _norm2(w.b), _norm2(w.a))


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0.0:
            raise PositivityError(f"{name} = {value} must be positive")


def _weight_derivatives(law: BoostLaw, lapse: float) -> tuple[float, float]:
    """(Lbar_hat a, L_hat a^-1) from D-bar a and D a."""
    return law.lbar_a / lapse, -law.l_a / (law.a * law.a * lapse)
