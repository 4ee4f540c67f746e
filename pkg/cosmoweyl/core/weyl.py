"""Weyl fields: construction, null decomposition, duals and boosts.

Null components relative to the frame (e3, e4, e1, e2), A, B = 1, 2:

    abar_AB = W(e_A, e3, e_B, e3)        a_AB = W(e_A, e4, e_B, e4)
    bbar_A  = 1/2 W(e_A, e3, e3, e4)     b_A  = 1/2 W(e_A, e4, e3, e4)
    rho     = 1/4 W(e3, e4, e3, e4)      sigma = 1/4 eps^AB W(e_A, e_B, e3, e4)

The volume form is fixed by eps(e3, e4, e1, e2) = +2, which makes
eps_12 = 1 on the spheres and sigma[W] = rho[*W].
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .charts import ChartPoint, ChartTag, SdSGeometry, sds_gauge_data, sds_metric_fn
from .errors import FrameError, PositivityError, SymmetryError
from .nullframe import frame_vectors
from .tensors import christoffel, coordinate_components, frame_components, partial

logger = logging.getLogger(__name__)

EPS2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
NULL_GRAM = np.array([
    [0.0, -2.0, 0.0, 0.0],
    [-2.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
])
# n = (e3 + e4)/2, X = (e3 - e4)/2, e1, e2 in null-frame components
EM_BASIS = np.array([
    [0.5, -0.5, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
])
NORMAL = np.array([0.5, 0.5, 0.0, 0.0])

WEYL_COLUMNS = (
    "abar_11", "abar_12", "bbar_1", "bbar_2", "rho", "sigma", "b_1", "b_2", "a_11", "a_12",
)
EM_COLUMNS = (
    "E_XX", "E_X1", "E_X2", "E_11", "E_12",
    "H_XX", "H_X1", "H_X2", "H_11", "H_12",
    "trE", "trH",
)


# ======================================================================
# Types
# ======================================================================

def _traceless_sym(m: np.ndarray, name: str, tol: float = 1e-12) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    scale = max(1.0, float(np.abs(m).max()))
    if abs(m[0, 1] - m[1, 0]) > tol * scale or abs(m[0, 0] + m[1, 1]) > tol * scale:
        raise SymmetryError(f"{name} must be symmetric trace-free")
    return m


@dataclass
class WeylNull:
    """The ten null components of a Weyl field."""

    abar: np.ndarray
    bbar: np.ndarray
    rho: float
    sigma: float
    b: np.ndarray
    a: np.ndarray

    def __post_init__(self) -> None:
        self.abar = _traceless_sym(self.abar, "abar")
        self.a = _traceless_sym(self.a, "a")
        self.bbar = np.asarray(self.bbar, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.rho = float(self.rho)
        self.sigma = float(self.sigma)

    @classmethod
    def zero(cls) -> WeylNull:
        return cls(np.zeros((2, 2)), np.zeros(2), 0.0, 0.0, np.zeros(2), np.zeros((2, 2)))

    @classmethod
    def from_vector(cls, v: np.ndarray) -> WeylNull:
        """Inverse of as_vector (the CSV column order)."""
        v = np.asarray(v, dtype=float)

        def tf(x11: float, x12: float) -> np.ndarray:
            return np.array([[x11, x12], [x12, -x11]])

        return cls(tf(v[0], v[1]), v[2:4], v[4], v[5], v[6:8], tf(v[8], v[9]))

    def as_vector(self) -> np.ndarray:
        return np.array([
            self.abar[0, 0], self.abar[0, 1], *self.bbar, self.rho, self.sigma,
            *self.b, self.a[0, 0], self.a[0, 1],
        ])

    def to_row(self) -> list[str]:
        return [f"{x:.17e}" for x in self.as_vector()]


@dataclass
class Weyl4:
    """Covariant rank-4 components together with the metric of their basis."""

    components: np.ndarray
    g: np.ndarray
    basis: str = "coordinate"

    def __post_init__(self) -> None:
        self.components = np.asarray(self.components, dtype=float)
        self.g = np.asarray(self.g, dtype=float)

    def residuals(self) -> dict[str, float]:
        return weyl_symmetry_residuals(self.components, self.g)

    def check(self, tol: float = 1e-10) -> Weyl4:
        bad = {k: v for k, v in self.residuals().items() if v > tol}
        if bad:
            raise SymmetryError(f"Weyl symmetries violated: {bad}")
        return self

    def in_frame(self, frame: np.ndarray) -> Weyl4:
        """Components along frame[a, mu] (vectors given in the current basis)."""
        return Weyl4(
            frame_components(self.components, frame),
            frame @ self.g @ frame.T,
            basis="frame",
        )


@dataclass
class EMPair:
    """Electric and magnetic parts in the basis (X, e1, e2)."""

    E: np.ndarray
    H: np.ndarray

    def check(self, tol: float = 1e-12) -> EMPair:
        for name in ("E", "H"):
            m = getattr(self, name)
            scale = max(1.0, float(np.abs(m).max()))
            if np.abs(m - m.T).max() > tol * scale or abs(np.trace(m)) > tol * scale:
                raise SymmetryError(f"{name} must be symmetric trace-free")
        return self

    def to_row(self) -> list[str]:
        vals = []
        for m in (self.E, self.H):
            vals += [m[0, 0], m[0, 1], m[0, 2], m[1, 1], m[1, 2]]
        vals += [np.trace(self.E), np.trace(self.H)]
        return [f"{x:.17e}" for x in vals]


# ======================================================================
# Public API
# ======================================================================

def weyl_symmetry_residuals(w: np.ndarray, g: np.ndarray) -> dict[str, float]:
    """Relative residuals of the algebraic Weyl symmetries."""
    scale = max(float(np.abs(w).max()), 1e-300)
    ginv = np.linalg.inv(g)
    return {
        "antisym_first": float(np.abs(w + np.einsum("abcd->bacd", w)).max() / scale),
        "antisym_last": float(np.abs(w + np.einsum("abcd->abdc", w)).max() / scale),
        "pair": float(np.abs(w - np.einsum("abcd->cdab", w)).max() / scale),
        "cyclic": float(np.abs(
            w + np.einsum("abcd->acdb", w) + np.einsum("abcd->adbc", w)
        ).max() / scale),
        "trace": float(np.abs(np.einsum("ac,abcd->bd", ginv, w)).max() / scale),
    }


def weyl_from_riemann(riem: np.ndarray, g: np.ndarray, lam: float, tol: float = 1e-6) -> Weyl4:
    """W = R + (Lambda/3)(g_ad g_bc - g_ac g_bd) for a covariant R_abcd."""
    riem = np.asarray(riem, dtype=float)
    g = np.asarray(g, dtype=float)
    res = weyl_symmetry_residuals(riem, g)
    res.pop("trace")
    bad = {k: v for k, v in res.items() if v > tol}
    if bad:
        raise SymmetryError(f"input curvature violates Riemann symmetries: {bad}")
    gg = np.einsum("ad,bc->abcd", g, g) - np.einsum("ac,bd->abcd", g, g)
    return Weyl4(riem + lam / 3.0 * gg, g)


def levi_civita(g: np.ndarray) -> np.ndarray:
    """Volume form sqrt|det g| [abcd] with the basis ordering as orientation."""
    n = g.shape[0]
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        eps[perm] = _parity(perm)
    return math.sqrt(abs(np.linalg.det(g))) * eps


def dual(w: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Left dual *W_abcd = 1/2 eps_ab^{ef} W_efcd."""
    eps = levi_civita(g)
    ginv = np.linalg.inv(g)
    return 0.5 * np.einsum("abgh,ge,hf,efcd->abcd", eps, ginv, ginv, w)


def null_decompose(w4: Weyl4, frame: np.ndarray | None = None, tol: float = 1e-10) -> WeylNull:
    """Null components of w4 along frame[a, mu] (or of w4 itself if already in a null frame)."""
    if frame is not None:
        w4 = w4.in_frame(frame)
    err = float(np.abs(w4.g - NULL_GRAM).max())
    if err > tol:
        raise FrameError(f"frame is not null-normalized (max deviation {err:.3e})")
    w = w4.components
    s = slice(2, 4)
    abar = w[s, 0, s, 0]
    a = w[s, 1, s, 1]
    return WeylNull(
        abar=_project_tf(abar),
        bbar=0.5 * w[s, 0, 0, 1],
        rho=0.25 * w[0, 1, 0, 1],
        sigma=0.5 * w[2, 3, 0, 1],
        b=0.5 * w[s, 1, 0, 1],
        a=_project_tf(a),
    )


def reconstruct(wn: WeylNull) -> Weyl4:
    """Null-frame components of the Weyl field with the given null components."""
    w = np.zeros((4, 4, 4, 4))
    delta = np.eye(2)
    for i, j in itertools.product(range(2), repeat=2):
        A, B = i + 2, j + 2
        _put(w, (A, 0, B, 0), wn.abar[i, j])
        _put(w, (A, 1, B, 1), wn.a[i, j])
        _put(w, (A, B, 0, 1), 2.0 * wn.sigma * EPS2[i, j])
        _put(w, (A, 0, B, 1), -wn.rho * delta[i, j] + wn.sigma * EPS2[i, j])
        for k in range(2):
            C = k + 2
            _put(w, (A, 0, B, C), delta[i, j] * wn.bbar[k] - delta[i, k] * wn.bbar[j])
            _put(w, (A, 1, B, C), -delta[i, j] * wn.b[k] + delta[i, k] * wn.b[j])
            for m in range(2):
                _put(w, (A, B, C, m + 2), -wn.rho * EPS2[i, j] * EPS2[k, m])
    for i in range(2):
        A = i + 2
        _put(w, (A, 0, 0, 1), 2.0 * wn.bbar[i])
        _put(w, (A, 1, 0, 1), 2.0 * wn.b[i])
    _put(w, (0, 1, 0, 1), 4.0 * wn.rho)
    return Weyl4(w, NULL_GRAM.copy(), basis="null")


def sigma_from_dual(w4: Weyl4) -> float:
    """sigma[W] computed as rho[*W]."""
    return 0.25 * float(dual(w4.components, w4.g)[0, 1, 0, 1])


def boost_weyl(a: float, wn: WeylNull) -> WeylNull:
    """Components in the frame (a e3, a^-1 e4, e1, e2)."""
    if not a > 0.0:
        raise PositivityError(f"boost parameter a = {a} must be positive")
    return WeylNull(
        abar=a * a * wn.abar,
        bbar=a * wn.bbar,
        rho=wn.rho,
        sigma=wn.sigma,
        b=wn.b / a,
        a=wn.a / (a * a),
    )


def boost_frame(a: float) -> np.ndarray:
    """Null-frame components of (a e3, a^-1 e4, e1, e2)."""
    return np.diag([a, 1.0 / a, 1.0, 1.0])


def em_decompose(wn: WeylNull, q: float = 1.0) -> EMPair:
    """E and H relative to n = (e3 + e4)/2 of the frame boosted by q."""
    w = boost_weyl(q, wn) if q != 1.0 else wn
    E = np.zeros((3, 3))
    E[0, 0] = w.rho
    E[0, 1:] = E[1:, 0] = 0.5 * (w.bbar + w.b)
    E[1:, 1:] = 0.25 * (w.a + w.abar) - 0.5 * w.rho * np.eye(2)
    full = reconstruct(w)
    H = electric_contraction(dual(full.components, full.g))
    return EMPair(E, _sym(H)).check(1e-10)


def electric_contraction(w: np.ndarray) -> np.ndarray:
    """W(n, e_i, n, e_j) for null-frame components and (e_i) = (X, e1, e2)."""
    return np.einsum("abcd,a,ib,c,jd->ij", w, NORMAL, EM_BASIS, NORMAL, EM_BASIS)


def weyl_divergence(
    weyl_fn: Callable[[np.ndarray], np.ndarray],
    metric_fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    steps: np.ndarray | None = None,
) -> np.ndarray:
    """nabla^a W_abcd of a coordinate-component Weyl field by central differences."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(metric_fn(x), dtype=float)
    ginv = np.linalg.inv(g)
    gam = christoffel(metric_fn, x, steps)      # gam[l, m, a] = Gamma^l_{ma}
    w = np.asarray(weyl_fn(x), dtype=float)
    dw = partial(weyl_fn, x, steps)             # dw[m, a, b, c, d]
    cov = (
        dw
        - np.einsum("lma,lbcd->mabcd", gam, w)
        - np.einsum("lmb,alcd->mabcd", gam, w)
        - np.einsum("lmc,abld->mabcd", gam, w)
        - np.einsum("lmd,abcl->mabcd", gam, w)
    )
    return np.einsum("ma,mabcd->bcd", ginv, cov)


def weyl_field_from_null(
    null_fn: Callable[[np.ndarray], WeylNull],
    frame_fn: Callable[[np.ndarray], np.ndarray],
) -> Callable[[np.ndarray], np.ndarray]:
    """Coordinate components of a Weyl field given by its null components."""

    def field(x: np.ndarray) -> np.ndarray:
        wn = null_fn(x)
        return coordinate_components(reconstruct(wn).components, frame_fn(x))

    return field


def sds_weyl_null(m: float, r: float) -> WeylNull:
    """The Schwarzschild-de Sitter Weyl field: only rho = -2m/r^3."""
    wn = WeylNull.zero()
    wn.rho = -2.0 * m / r ** 3
    return wn


def sds_weyl_field(geo: SdSGeometry, gauge: ChartTag) -> Callable[[np.ndarray], np.ndarray]:
    """Coordinate components of the exact Schwarzschild-de Sitter Weyl field."""
    metric_fn = sds_metric_fn(geo, gauge)

    def null_fn(x: np.ndarray) -> WeylNull:
        return sds_weyl_null(geo.m, sds_gauge_data(geo, ChartPoint(gauge, tuple(x))).r)

    return weyl_field_from_null(null_fn, lambda x: frame_vectors(metric_fn, x))


# ======================================================================
# Helpers
# ======================================================================

def _put(w: np.ndarray, idx: tuple[int, int, int, int], val: float) -> None:
    a, b, c, d = idx
    for (p, q, r, s), sign in (
        ((a, b, c, d), 1.0), ((b, a, c, d), -1.0), ((a, b, d, c), -1.0), ((b, a, d, c), 1.0),
        ((c, d, a, b), 1.0), ((d, c, a, b), -1.0), ((c, d, b, a), -1.0), ((d, c, b, a), 1.0),
    ):
        w[p, q, r, s] = sign * val


def _parity(perm: tuple[int, ...]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def _project_tf(m: np.ndarray) -> np.ndarray:
    m = 0.5 * (m + m.T)
    return m - 0.5 * np.trace(m) * np.eye(2)


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)
