# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Lawson-Hanson NNLS on the normal equations.

Same iteration as ``mubpilot._nnls_py.nnls_gram``; a Cholesky factor of the
passive sub-Gram is rebuilt at every inner step (n <= Q**2 is small).
"""

import numpy as np
from libc.math cimport sqrt, INFINITY


cdef int _factor_solve(const double[:, ::1] A, const double[::1] c,
                       const Py_ssize_t[::1] idx, Py_ssize_t m,
                       double[:, ::1] L, double[::1] z) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double s, d
    for j in range(m):
        s = A[idx[j], idx[j]]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > 0.0:
            return 1
        d = sqrt(s)
        L[j, j] = d
        for i in range(j + 1, m):
            s = A[idx[i], idx[j]]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / d
    for i in range(m):
        s = c[idx[i]]
        for k in range(i):
            s -= L[i, k] * z[k]
        z[i] = s / L[i, i]
    for i in range(m - 1, -1, -1):
        s = z[i]
        for k in range(i + 1, m):
            s -= L[k, i] * z[k]
        z[i] = s / L[i, i]
    return 0


cdef void _gradient(const double[:, ::1] A, const double[::1] c,
                    const double[::1] x, double[::1] w, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(n):
        s = c[i]
        for j in range(n):
            if x[j] != 0.0:
                s -= A[i, j] * x[j]
        w[i] = s


def nnls_gram(A, c, double tol, long max_iter):
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef Py_ssize_t n = cv.shape[0]
    x_arr = np.zeros(n)
    cdef double[::1] x = x_arr
    cdef double[::1] w = np.empty(n)
    cdef double[::1] z = np.empty(n)
    cdef double[:, ::1] L = np.zeros((n, n))
    cdef Py_ssize_t[::1] idx = np.empty(n, dtype=np.intp)
    cdef unsigned char[::1] passive = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] blocked = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t i, t, m, kmin
    cdef long n_iter = 0
    cdef double best, ratio, rmin, xi
    cdef bint added, all_pos, converged

    with nogil:
        _gradient(Av, cv, x, w, n)
        while n_iter < max_iter:
            t = -1
            best = -INFINITY
            for i in range(n):
                if not passive[i] and not blocked[i] and w[i] > best:
                    best = w[i]
                    t = i
            if t < 0 or not best > tol:
                break
            passive[t] = 1
            added = True
            while True:
                n_iter += 1
                m = 0
                for i in range(n):
                    if passive[i]:
                        idx[m] = i
                        m += 1
                if _factor_solve(Av, cv, idx, m, L, z):
                    passive[t] = 0
                    blocked[t] = 1
                    added = False
                    break
                all_pos = True
                for i in range(m):
                    if not z[i] > 0.0:
                        all_pos = False
                        break
                if all_pos or n_iter >= max_iter:
                    for i in range(n):
                        x[i] = 0.0
                    for i in range(m):
                        x[idx[i]] = z[i] if z[i] > 0.0 else 0.0
                    break
                rmin = INFINITY
                kmin = -1
                for i in range(m):
                    if not z[i] > 0.0:
                        xi = x[idx[i]]
                        ratio = xi / (xi - z[i])
                        if ratio < rmin:
                            rmin = ratio
                            kmin = i
                for i in range(m):
                    xi = x[idx[i]]
                    x[idx[i]] = xi + rmin * (z[i] - xi)
                x[idx[kmin]] = 0.0
                for i in range(m):
                    if not x[idx[i]] > 0.0:
                        x[idx[i]] = 0.0
                        passive[idx[i]] = 0
            if added:
                for i in range(n):
                    blocked[i] = 0
            _gradient(Av, cv, x, w, n)

        converged = True
        for i in range(n):
            if passive[i]:
                if w[i] > tol or w[i] < -tol:
                    converged = False
            elif w[i] > tol:
                converged = False

    return x_arr, int(n_iter), bool(converged)
