"""Pure-NumPy implementations of the pointwise vector kernels.

All inputs are float64 arrays of shape (3, nx, ny) unless noted.  These
functions mirror the compiled extension in ``_native.pyx`` exactly; the
test suite asserts parity between the two implementations.
"""

import numpy as np


def cross(a, b):
    out = np.empty_like(a)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


def dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def double_cross_rhs(m, f):
    """m x f - m x (m x f)."""
    mf = cross(m, f)
    return mf - cross(m, mf)


def ep_pointwise(m, lap_m, gsq, u):
    """gsq*m + m x lap_m + m x u - m x (m x u)."""
    mu = cross(m, u)
    return gsq * m + cross(m, lap_m) + mu - cross(m, mu)


def tangent_pointwise(v, m, u, lap_m, lap_v, gsq_m, grad_mv):
    """2*grad_mv*m + gsq_m*v + v x lap_m + m x lap_v + v x u
    - v x (m x u) - m x (v x u)."""
    mu = cross(m, u)
    vu = cross(v, u)
    return (
        2.0 * grad_mv * m
        + gsq_m * v
        + cross(v, lap_m)
        + cross(m, lap_v)
        + vu
        - cross(v, mu)
        - cross(m, vu)
    )


def adjoint_pointwise(phi, m, u, lap_m, gsq_m):
    """lap_m x phi + u x phi + gsq_m*phi + (phi x m) x u + phi x (m x u)."""
    pm = cross(phi, m)
    return (
        cross(lap_m, phi)
        + cross(u, phi)
        + gsq_m * phi
        + cross(pm, u)
        + cross(phi, cross(m, u))
    )


def gradient_direction(phi, m):
    """phi x m + m x (phi x m)."""
    pm = cross(phi, m)
    return pm + cross(m, pm)


def sphere_defect(m):
    """max over nodes of | |m|^2 - 1 |."""
    return float(np.abs(dot(m, m) - 1.0).max())


def normalize(m):
    """(m / |m|, min |m|); the caller decides how to treat vanishing nodes."""
    norm = np.sqrt(dot(m, m))
    min_norm = float(norm.min())
    if min_norm == 0.0:
        norm = np.where(norm == 0.0, 1.0, norm)
    return m / norm, min_norm
