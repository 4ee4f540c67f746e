"""Gronwall engine for redshift-type integral inequalities.

For a positive f with

    f(r2) + int_{r1}^{r2} [kappa(r) f(r)/r - C h(r)/r] dr <= f(r1),   r2 > r1 >= r0,

and kappa0 <= kappa <= kappa1, the engine returns

    (r^k1 - r0^k1) f(r) <= (k1/k0) e^K1 [r0^k1 f(r0) + C H1]

with K1 = int_{r0}^inf (kappa1 - kappa)/r dr and H1 = int_{r0}^inf |h| r^(k1-1) dr,
hence f(r) <= C' r^-k1 for r >= 2 r0 with C' = (k1/k0) e^K1 [...] / (1 - 2^-k1).

Provides:
  - DecayProblem, GronwallBound, gronwall_bound
  - redshift_schema
  - equality_solution, DecayCheck, verify_decay, measure_exponent
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DivergentWeightError, DomainError, PositivityError

logger = logging.getLogger(__name__)

RealFn = Callable[[float], float]

TAIL_DECADES = (4.0, 8.0)
TAIL_SLOPE_TOL = 1e-2
INTEGRAL_TOL = 1e-10


def _zero(r: float) -> float:
    return 0.0


@dataclass
class DecayProblem:
    """Inputs of the integral inequality.

    ``kappa0`` and ``kappa1`` bound kappa on [r0, inf); when omitted they
    are measured on a logarithmic sample.
    """

    kappa: RealFn
    f0: float
    r0: float = 1.0
    C: float = 0.0
    h: RealFn = _zero
    kappa0: float | None = None
    kappa1: float | None = None

    def __post_init__(self) -> None:
        if not self.r0 > 0.0:
            raise PositivityError(f"r0 = {self.r0} must be positive")
        if self.f0 < 0.0:
            raise PositivityError(f"f(r0) = {self.f0} must be non-negative")
        if self.kappa0 is None or self.kappa1 is None:
            samples = [self.kappa(r) for r in self.r0 * np.logspace(0.0, TAIL_DECADES[1], 400)]
            if self.kappa0 is None:
                self.kappa0 = float(min(samples))
            if self.kappa1 is None:
                self.kappa1 = float(max(samples))
        if not 0.0 < self.kappa0 <= self.kappa1:
            raise PositivityError(f"need 0 < kappa0 <= kappa1, got {self.kappa0}, {self.kappa1}")


@dataclass
class GronwallBound:
    """Constants of the decay bound f(r) <= constant * r^-kappa1.

    ``asymptotic_constant`` is the e^K1-tight constant. ``constant`` is the
    one ``bound`` uses from r = 2 r0 on; it carries the extra factor
    1 / (1 - 2^-kappa1), so kappa = 6 and f0 = 1 at r0 = 1 give 64/63
    where the tight constant is 1.
    """

    K1: float
    H1: float
    kappa0: float
    kappa1: float
    r0: float
    asymptotic_constant: float      # (k1/k0) e^K1 [r0^k1 f0 + C H1]
    constant: float                 # asymptotic_constant / (1 - 2^-k1)

    def bound(self, r: float | np.ndarray) -> np.ndarray | float:
        """C' r^-kappa1, valid for r >= 2 r0."""
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 2.0 * self.r0 * (1.0 - 1e-12)):
            raise DomainError(f"the decay bound holds for r >= 2 r0 = {2.0 * self.r0}")
        out = self.constant * r_arr ** -self.kappa1
        return float(out) if out.ndim == 0 else out

    def rows(self, radii: Sequence[float], f: Sequence[float]) -> list[tuple[float, float, float]]:
        return [(float(r), float(fr), float(self.bound(r))) for r, fr in zip(radii, f)]


# ------------------------------------------------------------------
# Public API
# ------------------------------------------------------------------

def gronwall_bound(p: DecayProblem) -> GronwallBound:
    k0, k1 = float(p.kappa0), float(p.kappa1)
    K1 = _tail_integral(lambda r: (k1 - p.kappa(r)) / r, p.r0, "K")
    H1 = _tail_integral(lambda r: abs(p.h(r)) * r ** (k1 - 1.0), p.r0, "H")
    asym = k1 / k0 * math.exp(K1) * (p.r0 ** k1 * p.f0 + p.C * H1)
    logger.debug("gronwall: K1=%.6g H1=%.6g kappa=[%g, %g]", K1, H1, k0, k1)
    return GronwallBound(K1, H1, k0, k1, p.r0, asym, asym / (1.0 - 2.0 ** -k1))


def redshift_schema(
    eps: float, c0: float, eps0: float, r0: float, f_fn: RealFn, g0: float
) -> DecayProblem:
    """Problem for the commuted energy g forced by the uncommuted energy f.

    kappa1 = 6 - eps - C0 eps0, kappa(r) = kappa1 - C0/r and h = f, which
    encodes the assumption Omega^-1 <= C0/r.
    """
    k1 = 6.0 - eps - c0 * eps0
    return DecayProblem(
        kappa=lambda r: k1 - c0 / r,
        f0=g0,
        r0=r0,
        C=c0,
        h=f_fn,
        kappa0=k1 - c0 / r0,
        kappa1=k1,
    )


def equality_solution(p: DecayProblem, radii: Sequence[float]) -> np.ndarray:
    """f' = -kappa f / r + C h / r with f(r0) = f0, the saturating family."""
    radii = np.asarray(radii, dtype=float)
    sol = integrate.solve_ivp(
        lambda r, y: [(-p.kappa(r) * y[0] + p.C * p.h(r)) / r],
        (p.r0, float(radii.max())),
        [p.f0],
        t_eval=radii,
        rtol=1e-11,
        atol=1e-300,
        method="DOP853",
    )
    if not sol.success:
        raise RuntimeError(f"equality ODE failed: {sol.message}")
    return sol.y[0]


@dataclass
class DecayCheck:
    sup_c: float
    r_at_sup: float
    bound: float
    holds: bool


def verify_decay(samples: Sequence[tuple[float, float]], kappa1: float, bound: float) -> DecayCheck:
    """sup r^kappa1 f(r) over the samples against an explicit constant."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) == 0:
        raise ValueError("samples must be a non-empty list of (r, f) pairs")
    if np.any(np.diff(arr[:, 0]) <= 0.0):
        raise ValueError("samples must be strictly increasing in r")
    weighted = arr[:, 0] ** kappa1 * arr[:, 1]
    i = int(np.argmax(weighted))
    sup_c = float(weighted[i])
    return DecayCheck(sup_c, float(arr[i, 0]), bound, bool(np.isfinite(sup_c) and sup_c <= bound))


def measure_exponent(samples: Sequence[tuple[float, float]], tail: float = 0.5) -> float:
    """Slope of log f against log r over the last ``tail`` fraction of samples."""
    arr = np.asarray(samples, dtype=float)
    start = int(len(arr) * (1.0 - tail))
    tail_arr = arr[start:]
    if len(tail_arr) < 2 or np.any(tail_arr <= 0.0):
        raise ValueError("need at least two positive samples in the tail")
    slope, _ = np.polyfit(np.log(tail_arr[:, 0]), np.log(tail_arr[:, 1]), 1)
    return float(slope)


# ======================================================================
# Helpers
# ======================================================================

def _tail_integral(fn: RealFn, r0: float, name: str) -> float:
    """int_{r0}^inf fn, after checking that r fn(r) decays like a power."""
    radii = r0 * np.logspace(*TAIL_DECADES, 9)
    vals = np.array([abs(fn(r)) * r for r in radii])
    if np.all(vals == 0.0):
        tail_ok = True
    elif np.any(vals == 0.0) or not np.all(np.isfinite(vals)):
        tail_ok = bool(np.all(np.isfinite(vals)))
    else:
        slope, _ = np.polyfit(np.log(radii), np.log(vals), 1)
        tail_ok = slope < -TAIL_SLOPE_TOL
    if not tail_ok:
        raise DivergentWeightError(f"{name} integral diverges: r * integrand does not decay")
    value, _ = integrate.quad(fn, r0, np.inf, epsabs=INTEGRAL_TOL, epsrel=INTEGRAL_TOL, limit=500)
    if not math.isfinite(value):
        raise DivergentWeightError(f"{name} integral is not finite")
    return float(value)
