"""Closed-form flow solutions for the linear families.

These are independent of the RK4 integrator and serve as references when
checking it: the scalar affine equation is solved segment by segment with
exponentials, the linear feedback equation with the matrix exponential
(scaling-and-squaring Pade approximation as provided by scipy).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

__all__ = ["scalar_affine_flow", "linear_feedback_flow"]


def _scalar_piece(a, u, x, dt):
    if a == 0.0:
        return x + u * dt
    return -u / a + (x + u / a) * math.exp(a * dt)


def scalar_affine_flow(a, signal, tau, t, x0):
    """Exact flow of xdot = a x + u(s) from tau to t, piecewise constant u."""
    lo, hi = (tau, t) if t >= tau else (t, tau)
    breaks = signal.breakpoints()
    inner = breaks[(breaks > lo + 1e-12) & (breaks < hi - 1e-12)]
    pts = np.concatenate(([lo], inner, [hi]))
    if t < tau:
        pts = pts[::-1]
    x = float(np.asarray(x0).reshape(-1)[0])
    for s0, s1 in zip(pts[:-1], pts[1:]):
        u = float(signal.coords_at(0.5 * (s0 + s1))[0])
        x = _scalar_piece(a, u, x, s1 - s0)
    return x


def linear_feedback_flow(field, signal, tau, t, X):
    """Exact flow of xdot = (A + B K(s)) x via per-segment matrix exponentials.

    K(s) is the feedback selected by the signal; X is a batch (n, d).
    """
    lo, hi = (tau, t) if t >= tau else (t, tau)
    breaks = signal.breakpoints()
    inner = breaks[(breaks > lo + 1e-12) & (breaks < hi - 1e-12)]
    pts = np.concatenate(([lo], inner, [hi]))
    if t < tau:
        pts = pts[::-1]
    X = np.atleast_2d(np.asarray(X, dtype=float)).copy()
    d = field.dims
    for s0, s1 in zip(pts[:-1], pts[1:]):
        K = signal.coords_at(0.5 * (s0 + s1)).reshape(field.B.shape[1], d)
        M = field.A + field.B @ K
        X = X @ expm(M * (s1 - s0)).T
    return X
