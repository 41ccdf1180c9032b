# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""C implementations of the PSD-cone hot kernels.

Entry/array semantics match _kernels_py exactly; that module is the
reference whenever the two disagree.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

NAME = "cython"


def svec_pack(u):
    cdef double[:, ::1] um = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = um.shape[0]
    out = np.empty(n * (n + 1) // 2)
    cdef double[::1] om = out
    cdef Py_ssize_t i, j, k = 0
    cdef double rt2 = sqrt(2.0)
    for i in range(n):
        om[k] = um[i, i]
        k += 1
        for j in range(i + 1, n):
            om[k] = um[i, j] * rt2
            k += 1
    return out


def svec_unpack(v, n):
    cdef double[::1] vm = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty((n, n))
    cdef double[:, ::1] om = out
    cdef Py_ssize_t nn = n, i, j, k = 0
    cdef double irt2 = 1.0 / sqrt(2.0), val
    for i in range(nn):
        om[i, i] = vm[k]
        k += 1
        for j in range(i + 1, nn):
            val = vm[k] * irt2
            om[i, j] = val
            om[j, i] = val
            k += 1
    return out


def psd_forward(p, q, wt, col, x, n):
    cdef cnp.int64_t[::1] pm = p, qm = q, cm = col
    cdef double[::1] wm = wt
    cdef double[::1] xm = np.ascontiguousarray(x, dtype=np.float64)
    out = np.zeros((n, n))
    cdef double[:, ::1] om = out
    cdef Py_ssize_t i, nnz = pm.shape[0]
    cdef double v
    for i in range(nnz):
        v = wm[i] * xm[cm[i]]
        om[pm[i], qm[i]] += v
        om[qm[i], pm[i]] += v
    return out


def psd_adjoint(p, q, wt, starts, u):
    cdef cnp.int64_t[::1] pm = p, qm = q, sm = starts
    cdef double[::1] wm = wt
    cdef double[:, ::1] um = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t ngroups = sm.shape[0], nnz = pm.shape[0]
    out = np.empty(ngroups)
    cdef double[::1] om = out
    cdef Py_ssize_t g, i, lo, hi
    cdef double acc
    for g in range(ngroups):
        lo = sm[g]
        hi = sm[g + 1] if g + 1 < ngroups else nnz
        acc = 0.0
        for i in range(lo, hi):
            acc += 2.0 * wm[i] * um[pm[i], qm[i]]
        om[g] = acc
    return out


def psd_schur(p, q, wt, starts, pmat):
    cdef cnp.int64_t[::1] pm = p, qm = q, sm = starts
    cdef double[::1] wm = wt
    cdef double[:, ::1] P = np.ascontiguousarray(pmat, dtype=np.float64)
    cdef Py_ssize_t ngroups = sm.shape[0], nnz = pm.shape[0]
    out = np.zeros((ngroups, ngroups))
    cdef double[:, ::1] om = out
    cdef Py_ssize_t gj, gk, i, t, loj, hij, lok, hik, pi, qi
    cdef double acc, wi
    for gj in range(ngroups):
        loj = sm[gj]
        hij = sm[gj + 1] if gj + 1 < ngroups else nnz
        for gk in range(gj, ngroups):
            lok = sm[gk]
            hik = sm[gk + 1] if gk + 1 < ngroups else nnz
            acc = 0.0
            for i in range(loj, hij):
                pi = pm[i]
                qi = qm[i]
                wi = wm[i]
                for t in range(lok, hik):
                    acc += wi * wm[t] * (P[qi, pm[t]] * P[pi, qm[t]]
                                         + P[qi, qm[t]] * P[pi, pm[t]])
            om[gj, gk] = 2.0 * acc
            om[gk, gj] = 2.0 * acc
    return out
