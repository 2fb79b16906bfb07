# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pointwise vector kernels.

Fused single-pass loops over the (3, nx, ny) nodal arrays.  Semantics are
identical to ``_fallback.py``; the fused forms avoid the temporary arrays a
NumPy evaluation of the same expressions would allocate, which dominates at
the small grid sizes the solvers run at.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef cnp.float64_t f64


def cross(cnp.ndarray[f64, ndim=3] a, cnp.ndarray[f64, ndim=3] b):
    cdef cnp.ndarray[f64, ndim=3] out = np.empty_like(a)
    cdef f64[:, :, ::1] av = a, bv = b, ov = out
    cdef Py_ssize_t i, j
    cdef f64 a0, a1, a2, b0, b1, b2
    for i in range(av.shape[1]):
        for j in range(av.shape[2]):
            a0 = av[0, i, j]; a1 = av[1, i, j]; a2 = av[2, i, j]
            b0 = bv[0, i, j]; b1 = bv[1, i, j]; b2 = bv[2, i, j]
            ov[0, i, j] = a1 * b2 - a2 * b1
            ov[1, i, j] = a2 * b0 - a0 * b2
            ov[2, i, j] = a0 * b1 - a1 * b0
    return out


def dot(cnp.ndarray[f64, ndim=3] a, cnp.ndarray[f64, ndim=3] b):
    cdef cnp.ndarray[f64, ndim=2] out = np.empty((a.shape[1], a.shape[2]))
    cdef f64[:, :, ::1] av = a, bv = b
    cdef f64[:, ::1] ov = out
    cdef Py_ssize_t i, j
    for i in range(av.shape[1]):
        for j in range(av.shape[2]):
            ov[i, j] = (av[0, i, j] * bv[0, i, j]
                        + av[1, i, j] * bv[1, i, j]
                        + av[2, i, j] * bv[2, i, j])
    return out


def double_cross_rhs(cnp.ndarray[f64, ndim=3] m, cnp.ndarray[f64, ndim=3] f):
    """m x f - m x (m x f)."""
    cdef cnp.ndarray[f64, ndim=3] out = np.empty_like(m)
    cdef f64[:, :, ::1] mv = m, fv = f, ov = out
    cdef Py_ssize_t i, j
    cdef f64 m0, m1, m2, f0, f1, f2, c0, c1, c2
    for i in range(mv.shape[1]):
        for j in range(mv.shape[2]):
            m0 = mv[0, i, j]; m1 = mv[1, i, j]; m2 = mv[2, i, j]
            f0 = fv[0, i, j]; f1 = fv[1, i, j]; f2 = fv[2, i, j]
            c0 = m1 * f2 - m2 * f1
            c1 = m2 * f0 - m0 * f2
            c2 = m0 * f1 - m1 * f0
            ov[0, i, j] = c0 - (m1 * c2 - m2 * c1)
            ov[1, i, j] = c1 - (m2 * c0 - m0 * c2)
            ov[2, i, j] = c2 - (m0 * c1 - m1 * c0)
    return out


def ep_pointwise(cnp.ndarray[f64, ndim=3] m, cnp.ndarray[f64, ndim=3] lap_m,
                 cnp.ndarray[f64, ndim=2] gsq, cnp.ndarray[f64, ndim=3] u):
    """gsq*m + m x lap_m + m x u - m x (m x u)."""
    cdef cnp.ndarray[f64, ndim=3] out = np.empty_like(m)
    cdef f64[:, :, ::1] mv = m, lv = lap_m, uv = u, ov = out
    cdef f64[:, ::1] gv = gsq
    cdef Py_ssize_t i, j
    cdef f64 m0, m1, m2, l0, l1, l2, u0, u1, u2, g, c0, c1, c2
    for i in range(mv.shape[1]):
        for j in range(mv.shape[2]):
            m0 = mv[0, i, j]; m1 = mv[1, i, j]; m2 = mv[2, i, j]
            l0 = lv[0, i, j]; l1 = lv[1, i, j]; l2 = lv[2, i, j]
            u0 = uv[0, i, j]; u1 = uv[1, i, j]; u2 = uv[2, i, j]
            g = gv[i, j]
            c0 = m1 * u2 - m2 * u1
            c1 = m2 * u0 - m0 * u2
            c2 = m0 * u1 - m1 * u0
            ov[0, i, j] = (g * m0 + (m1 * l2 - m2 * l1)
                           + c0 - (m1 * c2 - m2 * c1))
            ov[1, i, j] = (g * m1 + (m2 * l0 - m0 * l2)
                           + c1 - (m2 * c0 - m0 * c2))
            ov[2, i, j] = (g * m2 + (m0 * l1 - m1 * l0)
                           + c2 - (m0 * c1 - m1 * c0))
    return out


def tangent_pointwise(cnp.ndarray[f64, ndim=3] v, cnp.ndarray[f64, ndim=3] m,
                      cnp.ndarray[f64, ndim=3] u, cnp.ndarray[f64, ndim=3] lap_m,
                      cnp.ndarray[f64, ndim=3] lap_v, cnp.ndarray[f64, ndim=2] gsq_m,
                      cnp.ndarray[f64, ndim=2] grad_mv):
    cdef cnp.ndarray[f64, ndim=3] out = np.empty_like(v)
    cdef f64[:, :, ::1] vv = v, mv = m, uv = u, lmv = lap_m, lvv = lap_v, ov = out
    cdef f64[:, ::1] gv = gsq_m, cv = grad_mv
    cdef Py_ssize_t i, j
    cdef f64 v0, v1, v2, m0, m1, m2, u0, u1, u2
    cdef f64 lm0, lm1, lm2, lv0, lv1, lv2, g, c
    cdef f64 mu0, mu1, mu2, vu0, vu1, vu2
    for i in range(vv.shape[1]):
        for j in range(vv.shape[2]):
            v0 = vv[0, i, j]; v1 = vv[1, i, j]; v2 = vv[2, i, j]
            m0 = mv[0, i, j]; m1 = mv[1, i, j]; m2 = mv[2, i, j]
            u0 = uv[0, i, j]; u1 = uv[1, i, j]; u2 = uv[2, i, j]
            lm0 = lmv[0, i, j]; lm1 = lmv[1, i, j]; lm2 = lmv[2, i, j]
            lv0 = lvv[0, i, j]; lv1 = lvv[1, i, j]; lv2 = lvv[2, i, j]
            g = gv[i, j]; c = cv[i, j]
            mu0 = m1 * u2 - m2 * u1
            mu1 = m2 * u0 - m0 * u2
            mu2 = m0 * u1 - m1 * u0
            vu0 = v1 * u2 - v2 * u1
            vu1 = v2 * u0 - v0 * u2
            vu2 = v0 * u1 - v1 * u0
            ov[0, i, j] = (2.0 * c * m0 + g * v0
                           + (v1 * lm2 - v2 * lm1) + (m1 * lv2 - m2 * lv1)
                           + vu0 - (v1 * mu2 - v2 * mu1)
                           - (m1 * vu2 - m2 * vu1))
            ov[1, i, j] = (2.0 * c * m1 + g * v1
                           + (v2 * lm0 - v0 * lm2) + (m2 * lv0 - m0 * lv2)
                           + vu1 - (v2 * mu0 - v0 * mu2)
                           - (m2 * vu0 - m0 * vu2))
            ov[2, i, j] = (2.0 * c * m2 + g * v2
                           + (v0 * lm1 - v1 * lm0) + (m0 * lv1 - m1 * lv0)
                           + vu2 - (v0 * mu1 - v1 * mu0)
                           - (m0 * vu1 - m1 * vu0))
    return out


def adjoint_pointwise(cnp.ndarray[f64, ndim=3] phi, cnp.ndarray[f64, ndim=3] m,
                      cnp.ndarray[f64, ndim=3] u, cnp.ndarray[f64, ndim=3] lap_m,
                      cnp.ndarray[f64, ndim=2] gsq_m):
    """lap_m x phi + u x phi + gsq_m*phi + (phi x m) x u + phi x (m x u)."""
    cdef cnp.ndarray[f64, ndim=3] out = np.empty_like(phi)
    cdef f64[:, :, ::1] pv = phi, mv = m, uv = u, lv = lap_m, ov = out
    cdef f64[:, ::1] gv = gsq_m
    cdef Py_ssize_t i, j
    cdef f64 p0, p1, p2, m0, m1, m2, u0, u1, u2, l0, l1, l2, g
    cdef f64 pm0, pm1, pm2, mu0, mu1, mu2
    for i in range(pv.shape[1]):
        for j in range(pv.shape[2]):
            p0 = pv[0, i, j]; p1 = pv[1, i, j]; p2 = pv[2, i, j]
            m0 = mv[0, i, j]; m1 = mv[1, i, j]; m2 = mv[2, i, j]
            u0 = uv[0, i, j]; u1 = uv[1, i, j]; u2 = uv[2, i, j]
            l0 = lv[0, i, j]; l1 = lv[1, i, j]; l2 = lv[2, i, j]
            g = gv[i, j]
            pm0 = p1 * m2 - p2 * m1
            pm1 = p2 * m0 - p0 * m2
            pm2 = p0 * m1 - p1 * m0
            mu0 = m1 * u2 - m2 * u1
            mu1 = m2 * u0 - m0 * u2
            mu2 = m0 * u1 - m1 * u0
            ov[0, i, j] = ((l1 * p2 - l2 * p1) + (u1 * p2 - u2 * p1) + g * p0
                           + (pm1 * u2 - pm2 * u1) + (p1 * mu2 - p2 * mu1))
            ov[1, i, j] = ((l2 * p0 - l0 * p2) + (u2 * p0 - u0 * p2) + g * p1
                           + (pm2 * u0 - pm0 * u2) + (p2 * mu0 - p0 * mu2))
            ov[2, i, j] = ((l0 * p1 - l1 * p0) + (u0 * p1 - u1 * p0) + g * p2
                           + (pm0 * u1 - pm1 * u0) + (p0 * mu1 - p1 * mu0))
    return out


def gradient_direction(cnp.ndarray[f64, ndim=3] phi, cnp.ndarray[f64, ndim=3] m):
    """phi x m + m x (phi x m)."""
    cdef cnp.ndarray[f64, ndim=3] out = np.empty_like(phi)
    cdef f64[:, :, ::1] pv = phi, mv = m, ov = out
    cdef Py_ssize_t i, j
    cdef f64 p0, p1, p2, m0, m1, m2, c0, c1, c2
    for i in range(pv.shape[1]):
        for j in range(pv.shape[2]):
            p0 = pv[0, i, j]; p1 = pv[1, i, j]; p2 = pv[2, i, j]
            m0 = mv[0, i, j]; m1 = mv[1, i, j]; m2 = mv[2, i, j]
            c0 = p1 * m2 - p2 * m1
            c1 = p2 * m0 - p0 * m2
            c2 = p0 * m1 - p1 * m0
            ov[0, i, j] = c0 + (m1 * c2 - m2 * c1)
            ov[1, i, j] = c1 + (m2 * c0 - m0 * c2)
            ov[2, i, j] = c2 + (m0 * c1 - m1 * c0)
    return out


def sphere_defect(cnp.ndarray[f64, ndim=3] m):
    cdef f64[:, :, ::1] mv = m
    cdef Py_ssize_t i, j
    cdef f64 d, worst = 0.0
    for i in range(mv.shape[1]):
        for j in range(mv.shape[2]):
            d = (mv[0, i, j] * mv[0, i, j] + mv[1, i, j] * mv[1, i, j]
                 + mv[2, i, j] * mv[2, i, j]) - 1.0
            if d < 0.0:
                d = -d
            if d > worst:
                worst = d
    return worst


def normalize(cnp.ndarray[f64, ndim=3] m):
    cdef cnp.ndarray[f64, ndim=3] out = np.empty_like(m)
    cdef f64[:, :, ::1] mv = m, ov = out
    cdef Py_ssize_t i, j
    cdef f64 n, min_norm = -1.0
    for i in range(mv.shape[1]):
        for j in range(mv.shape[2]):
            n = (mv[0, i, j] * mv[0, i, j] + mv[1, i, j] * mv[1, i, j]
                 + mv[2, i, j] * mv[2, i, j]) ** 0.5
            if min_norm < 0.0 or n < min_norm:
                min_norm = n
            if n == 0.0:
                n = 1.0
            ov[0, i, j] = mv[0, i, j] / n
            ov[1, i, j] = mv[1, i, j] / n
            ov[2, i, j] = mv[2, i, j] / n
    return out, min_norm
