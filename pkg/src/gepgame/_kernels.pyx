# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: cyclic Jacobi sweeps and the per-player ascent direction.

Signatures and semantics mirror ``gepgame._fallback`` exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


cdef double _offdiag_norm(double[:, ::1] a, Py_ssize_t n) nogil:
    cdef Py_ssize_t p, q
    cdef double s = 0.0
    for p in range(n):
        for q in range(n):
            if p != q:
                s += a[p, q] * a[p, q]
    return sqrt(s)


def jacobi_eigh(a_in, double rel_tol, int max_sweeps):
    """Cyclic Jacobi on a copy of symmetric ``a_in``.

    Returns ``(eigenvalues, eigenvectors_as_columns, sweeps, off_norm)``;
    eigenvalues are unsorted (diagonal order).
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a_arr = np.array(a_in, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = a_arr.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, r
    cdef double apq, theta, t, c, s, x, y, fro = 0.0, tol, off
    cdef int sweep = 0

    with nogil:
        for p in range(n):
            for q in range(n):
                fro += a[p, q] * a[p, q]
        fro = sqrt(fro)
        tol = rel_tol * fro
        off = _offdiag_norm(a, n)
        while off > tol and sweep < max_sweeps:
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                    if theta >= 0.0:
                        t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                    else:
                        t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for r in range(n):
                        x = a[r, p]
                        y = a[r, q]
                        a[r, p] = c * x - s * y
                        a[r, q] = s * x + c * y
                    for r in range(n):
                        x = a[p, r]
                        y = a[q, r]
                        a[p, r] = c * x - s * y
                        a[q, r] = s * x + c * y
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for r in range(n):
                        x = v[r, p]
                        y = v[r, q]
                        v[r, p] = c * x - s * y
                        v[r, q] = s * x + c * y
            sweep += 1
            off = _offdiag_norm(a, n)

    return np.diagonal(a_arr).copy(), v_arr, sweep, off


def game_direction(v_in, av_in, bv_in, ys_in, bys_in):
    """rewards - penalties for one player given its matvecs and its parents' y, [By]."""
    cdef double[::1] v = np.ascontiguousarray(v_in, dtype=np.float64)
    cdef double[::1] av = np.ascontiguousarray(av_in, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(bv_in, dtype=np.float64)
    cdef double[:, ::1] ys = np.ascontiguousarray(ys_in, dtype=np.float64)
    cdef double[:, ::1] bys = np.ascontiguousarray(bys_in, dtype=np.float64)
    cdef Py_ssize_t d = v.shape[0]
    cdef Py_ssize_t m = ys.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(d, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pen_arr = np.zeros(d, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] pen = pen_arr
    cdef Py_ssize_t j, r
    cdef double vbv = 0.0, vav = 0.0, coef, vby, x, rn = 0.0, pn = 0.0

    with nogil:
        for r in range(d):
            vbv += v[r] * bv[r]
            vav += v[r] * av[r]
        for j in range(m):
            coef = 0.0
            vby = 0.0
            for r in range(d):
                coef += av[r] * ys[j, r]
                vby += v[r] * bys[j, r]
            for r in range(d):
                pen[r] += coef * (vbv * bys[j, r] - vby * bv[r])
        for r in range(d):
            x = vbv * av[r] - vav * bv[r]
            rn += x * x
            pn += pen[r] * pen[r]
            out[r] = x - pen[r]

    return out_arr, sqrt(rn), sqrt(pn)
