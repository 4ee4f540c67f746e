"""Finite-difference tensor calculus.

Works on callables returning component arrays at a coordinate point:
  - metric_fn(x) -> (n, n) symmetric array
  - vector_fn(x) -> (n,) array
  - tensor_fn(x) -> (n, n, n, n) array (covariant)

All derivatives are second-order central differences with per-coordinate
steps ``scale * max(1, |x_i|)`` unless explicit steps are passed.

Index conventions:
  - christoffel()[a, b, c] = Gamma^a_{bc}
  - riemann()[a, b, c, d] = R^a_{bcd}
      = d_c Gamma^a_{db} - d_d Gamma^a_{cb} + Gamma^a_{ce} Gamma^e_{db}
        - Gamma^a_{de} Gamma^e_{cb}
    so that a space of constant curvature K has
    R_{abcd} = K (g_ac g_bd - g_ad g_bc).
"""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)

FD_SCALE = 1e-5
CURVATURE_SCALE = 1e-3

ArrayFn = Callable[[np.ndarray], np.ndarray]


# ------------------------------------------------------------------
# Derivatives
# ------------------------------------------------------------------

def fd_steps(x: np.ndarray, scale: float = FD_SCALE) -> np.ndarray:
    """Per-coordinate central-difference steps."""
    x = np.asarray(x, dtype=float)
    return scale * np.maximum(1.0, np.abs(x))


def partial(fn: ArrayFn, x: np.ndarray, steps: np.ndarray | None = None) -> np.ndarray:
    """Return d_i fn at x, stacked along a new leading axis."""
    x = np.asarray(x, dtype=float)
    h = fd_steps(x) if steps is None else np.asarray(steps, dtype=float)
    out = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        out.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2.0 * h[i]))
    return np.stack(out)


def richardson(coarse: np.ndarray, fine: np.ndarray) -> np.ndarray:
    """Combine O(h^2) estimates at h and h/2."""
    return (4.0 * fine - coarse) / 3.0


# ------------------------------------------------------------------
# Connection and curvature
# ------------------------------------------------------------------

def christoffel(metric_fn: ArrayFn, x: np.ndarray, steps: np.ndarray | None = None) -> np.ndarray:
    """Gamma^a_{bc} = 1/2 g^{ad} (d_b g_dc + d_c g_db - d_d g_bc)."""
    g = np.asarray(metric_fn(x), dtype=float)
    ginv = np.linalg.inv(g)
    dg = partial(metric_fn, x, steps)          # dg[c, a, b] = d_c g_ab
    lowered = 0.5 * (
        np.einsum("bdc->dbc", dg)
        + np.einsum("cdb->dbc", dg)
        - dg
    )                                          # lowered[d, b, c]
    return np.einsum("ad,dbc->abc", ginv, lowered)


def riemann(
    metric_fn: ArrayFn,
    x: np.ndarray,
    scale: float = CURVATURE_SCALE,
    steps: np.ndarray | None = None,
    use_richardson: bool = False,
) -> np.ndarray:
    """R^a_{bcd} by nested central differences of the metric."""
    x = np.asarray(x, dtype=float)
    h = fd_steps(x, scale) if steps is None else np.asarray(steps, dtype=float)
    if use_richardson:
        coarse = _riemann_at(metric_fn, x, h)
        fine = _riemann_at(metric_fn, x, 0.5 * h)
        return richardson(coarse, fine)
    return _riemann_at(metric_fn, x, h)


def _riemann_at(metric_fn: ArrayFn, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    logger.debug("riemann at %s with steps %s", x, h)
    gam = christoffel(metric_fn, x, h)
    dgam = partial(lambda y: christoffel(metric_fn, y, h), x, h)   # dgam[c, a, d, b]
    term = np.einsum("cadb->abcd", dgam)
    quad = np.einsum("ace,edb->abcd", gam, gam)
    return term - np.einsum("abcd->abdc", term) + quad - np.einsum("abcd->abdc", quad)


def lower_first(riem: np.ndarray, g: np.ndarray) -> np.ndarray:
    """R_{abcd} = g_ae R^e_{bcd}."""
    return np.einsum("ae,ebcd->abcd", g, riem)


def ricci(riem: np.ndarray) -> np.ndarray:
    """Ric_{bd} = R^a_{bad}."""
    return np.einsum("abad->bd", riem)


# ------------------------------------------------------------------
# Lie derivatives and brackets
# ------------------------------------------------------------------

def lie_derivative_metric(
    metric_fn: ArrayFn, vector_fn: ArrayFn, x: np.ndarray, steps: np.ndarray | None = None
) -> np.ndarray:
    """(L_X g)_ab = X^c d_c g_ab + g_cb d_a X^c + g_ac d_b X^c."""
    g = np.asarray(metric_fn(x), dtype=float)
    xv = np.asarray(vector_fn(x), dtype=float)
    dg = partial(metric_fn, x, steps)
    dx = partial(vector_fn, x, steps)          # dx[a, c] = d_a X^c
    return (
        np.einsum("c,cab->ab", xv, dg)
        + np.einsum("cb,ac->ab", g, dx)
        + np.einsum("ac,bc->ab", g, dx)
    )


def lie_derivative_tensor4(
    tensor_fn: ArrayFn, vector_fn: ArrayFn, x: np.ndarray, steps: np.ndarray | None = None
) -> np.ndarray:
    """Lie derivative of a covariant 4-tensor field."""
    t = np.asarray(tensor_fn(x), dtype=float)
    xv = np.asarray(vector_fn(x), dtype=float)
    dt = partial(tensor_fn, x, steps)
    dx = partial(vector_fn, x, steps)
    return (
        np.einsum("e,eabcd->abcd", xv, dt)
        + np.einsum("ebcd,ae->abcd", t, dx)
        + np.einsum("aecd,be->abcd", t, dx)
        + np.einsum("abed,ce->abcd", t, dx)
        + np.einsum("abce,de->abcd", t, dx)
    )


def bracket(
    x_fn: ArrayFn, y_fn: ArrayFn, x: np.ndarray, steps: np.ndarray | None = None
) -> np.ndarray:
    """[X, Y]^mu = X^nu d_nu Y^mu - Y^nu d_nu X^mu."""
    xv = np.asarray(x_fn(x), dtype=float)
    yv = np.asarray(y_fn(x), dtype=float)
    return xv @ partial(y_fn, x, steps) - yv @ partial(x_fn, x, steps)


# ------------------------------------------------------------------
# Frames
# ------------------------------------------------------------------

def frame_components(tensor: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Contract every slot of a covariant tensor with frame[a, mu]."""
    out = np.asarray(tensor, dtype=float)
    for _ in range(out.ndim):
        out = np.tensordot(out, frame, axes=([0], [1]))
    return out


def coordinate_components(tensor: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Inverse of frame_components: use the dual coframe inv(frame)^T."""
    coframe = np.linalg.inv(frame).T
    return frame_components(tensor, coframe.T)


def inner(g: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float(np.asarray(a) @ np.asarray(g) @ np.asarray(b))
