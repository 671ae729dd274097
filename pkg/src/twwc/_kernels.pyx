# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in :mod:`twwc._kernels_py`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def ml_decode(logw, cb, side, obs):
    cdef const double[:, :, ::1] lw = np.ascontiguousarray(logw, dtype=np.float64)
    cdef const long long[:, ::1] c = np.ascontiguousarray(cb, dtype=np.int64)
    cdef const long long[:, ::1] sd = np.ascontiguousarray(np.atleast_2d(side), dtype=np.int64)
    cdef const long long[:, ::1] ob = np.ascontiguousarray(np.atleast_2d(obs), dtype=np.int64)
    cdef Py_ssize_t T = sd.shape[0], N = c.shape[0], n = c.shape[1]
    cdef Py_ssize_t tr, i, t, best_i
    cdef double acc, best
    out = np.zeros(T, dtype=np.int64)
    cdef long long[::1] o = out
    with nogil:
        for tr in range(T):
            best = -INFINITY
            best_i = 0
            for i in range(N):
                acc = 0.0
                for t in range(n):
                    acc = acc + lw[sd[tr, t], c[i, t], ob[tr, t]]
                    if acc == -INFINITY:
                        break
                if acc > best:
                    best = acc
                    best_i = i
            o[tr] = best_i
    return out


def z_likelihoods(wz, cb1, cb2, Py_ssize_t nz):
    cdef const double[:, :, ::1] w = np.ascontiguousarray(wz, dtype=np.float64)
    cdef const long long[:, ::1] c1 = np.ascontiguousarray(cb1, dtype=np.int64)
    cdef const long long[:, ::1] c2 = np.ascontiguousarray(cb2, dtype=np.int64)
    cdef Py_ssize_t N1 = c1.shape[0], N2 = c2.shape[0], n = c1.shape[1]
    cdef Py_ssize_t total = 1, t, a, b, k, j, width
    for t in range(n):
        total *= nz
    out = np.empty((N1, N2, total), dtype=np.float64)
    cdef double[:, :, ::1] o = out
    cdef double f
    with nogil:
        for a in range(N1):
            for b in range(N2):
                o[a, b, 0] = 1.0
                width = 1
                for t in range(n):
                    # expand in place from the back so entries are not overwritten early
                    for k in range(width - 1, -1, -1):
                        f = o[a, b, k]
                        for j in range(nz):
                            o[a, b, k * nz + j] = f * w[c1[a, t], c2[b, t], j]
                    width = width * nz
    return out
