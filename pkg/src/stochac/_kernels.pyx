# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled element kernels; see ``_kernels_py`` for the reference versions."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def nonlinear_load(const double[::1] u, const cnp.int64_t[:, ::1] triangles,
                   const double[::1] areas, const double[:, ::1] bary,
                   const double[::1] weights, double[::1] out):
    cdef Py_ssize_t nt = triangles.shape[0]
    cdef Py_ssize_t nq = weights.shape[0]
    cdef Py_ssize_t t, q, k
    cdef cnp.int64_t a, b, c
    cdef double ua, ub, uc, v, f, l0, l1, l2, acc0, acc1, acc2
    out[:] = 0.0
    for t in range(nt):
        a = triangles[t, 0]
        b = triangles[t, 1]
        c = triangles[t, 2]
        ua = u[a]
        ub = u[b]
        uc = u[c]
        acc0 = 0.0
        acc1 = 0.0
        acc2 = 0.0
        for q in range(nq):
            l0 = bary[q, 0]
            l1 = bary[q, 1]
            l2 = bary[q, 2]
            v = ua * l0 + ub * l1 + uc * l2
            f = v * v * v * weights[q]
            acc0 += f * l0
            acc1 += f * l1
            acc2 += f * l2
        out[a] += acc0 * areas[t]
        out[b] += acc1 * areas[t]
        out[c] += acc2 * areas[t]
    return np.asarray(out)


def cubic_jacobian_values(const double[::1] u, const cnp.int64_t[:, ::1] triangles,
                          const double[::1] areas, const double[:, ::1] bary,
                          const double[::1] weights):
    cdef Py_ssize_t nt = triangles.shape[0]
    cdef Py_ssize_t nq = weights.shape[0]
    cdef Py_ssize_t t, q, i, j
    cdef double v, f
    result = np.zeros((nt, 3, 3))
    cdef double[:, :, ::1] res = result
    for t in range(nt):
        for q in range(nq):
            v = (u[triangles[t, 0]] * bary[q, 0] + u[triangles[t, 1]] * bary[q, 1]
                 + u[triangles[t, 2]] * bary[q, 2])
            f = 3.0 * v * v * weights[q] * areas[t]
            for i in range(3):
                for j in range(3):
                    res[t, i, j] += f * bary[q, i] * bary[q, j]
    return result


def power_integrals(const double[::1] u, const cnp.int64_t[:, ::1] triangles,
                    const double[::1] areas, const double[:, ::1] bary,
                    const double[::1] weights):
    cdef Py_ssize_t nt = triangles.shape[0]
    cdef Py_ssize_t nq = weights.shape[0]
    cdef Py_ssize_t t, q
    cdef double v, v2, e2, e4, s2 = 0.0, s4 = 0.0
    for t in range(nt):
        e2 = 0.0
        e4 = 0.0
        for q in range(nq):
            v = (u[triangles[t, 0]] * bary[q, 0] + u[triangles[t, 1]] * bary[q, 1]
                 + u[triangles[t, 2]] * bary[q, 2])
            v2 = v * v
            e2 += v2 * weights[q]
            e4 += v2 * v2 * weights[q]
        s2 += e2 * areas[t]
        s4 += e4 * areas[t]
    return s2, s4
