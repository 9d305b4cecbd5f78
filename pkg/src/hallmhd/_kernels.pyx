# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: pointwise cross products, L^p power sums, shell energies."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow

cnp.import_array()

ctypedef cnp.float64_t f64


cdef double _pairwise(const double* x, Py_ssize_t n) noexcept nogil:
    # Blocked pairwise summation; block size matches numpy's (128) so the
    # error profile is comparable between backends.
    cdef Py_ssize_t i, half
    cdef double s
    if n <= 128:
        s = 0.0
        for i in range(n):
            s += x[i]
        return s
    half = (n // 2) - ((n // 2) % 8)
    return _pairwise(x, half) + _pairwise(x + half, n - half)


def cross(f64[:, ::1] a, f64[:, ::1] b):
    """Pointwise a x b for arrays of shape (3, npoints)."""
    cdef Py_ssize_t n = a.shape[1], i
    out_arr = np.empty((3, n), dtype=np.float64)
    cdef f64[:, ::1] out = out_arr
    cdef double a0, a1, a2, b0, b1, b2
    with nogil:
        for i in range(n):
            a0 = a[0, i]; a1 = a[1, i]; a2 = a[2, i]
            b0 = b[0, i]; b1 = b[1, i]; b2 = b[2, i]
            out[0, i] = a1 * b2 - a2 * b1
            out[1, i] = a2 * b0 - a0 * b2
            out[2, i] = a0 * b1 - a1 * b0
    return out_arr


def power_sum(f64[:, ::1] f, double p):
    """Sum over points of |f(x)|^p, |.| the Euclidean norm over the first axis."""
    cdef Py_ssize_t ncomp = f.shape[0], n = f.shape[1], i, c
    buf_arr = np.empty(n, dtype=np.float64)
    cdef f64[::1] buf = buf_arr
    cdef double m2, v, r, acc, total
    # small integer exponents avoid a libm pow call per point
    cdef int ip = <int>p if (p == <int>p and 1.0 <= p <= 16.0) else 0
    cdef int e
    with nogil:
        for i in range(n):
            m2 = 0.0
            for c in range(ncomp):
                v = f[c, i]
                m2 = m2 + v * v
            if p == 2.0:
                buf[i] = m2
            elif ip > 0:
                r = sqrt(m2)
                acc = r
                for e in range(ip - 1):
                    acc = acc * r
                buf[i] = acc
            else:
                buf[i] = pow(m2, 0.5 * p)
        total = _pairwise(&buf[0], n)
    return total


def max_magnitude(f64[:, ::1] f):
    """Max over points of the Euclidean magnitude."""
    cdef Py_ssize_t ncomp = f.shape[0], n = f.shape[1], i, c
    cdef double m2, v, best = 0.0
    with nogil:
        for i in range(n):
            m2 = 0.0
            for c in range(ncomp):
                v = f[c, i]
                m2 = m2 + v * v
            if m2 > best:
                best = m2
    return sqrt(best)


def shell_energies(f64[::1] power, cnp.int32_t[::1] lo, f64[::1] w_lo,
                   f64[::1] w_hi, Py_ssize_t nshells):
    """Accumulate power * w^2 into the two shells each mode touches.

    ``lo[i]`` is the lower shell slot of mode i (or -1 when the mode belongs to
    no shell); ``w_lo``/``w_hi`` are the multiplier values for slots lo and lo+1.
    """
    cdef Py_ssize_t n = power.shape[0], i, s
    out_arr = np.zeros(nshells, dtype=np.float64)
    cdef f64[::1] out = out_arr
    cdef double pw
    with nogil:
        for i in range(n):
            s = lo[i]
            if s < 0:
                continue
            pw = power[i]
            out[s] += pw * w_lo[i] * w_lo[i]
            if s + 1 < nshells:
                out[s + 1] += pw * w_hi[i] * w_hi[i]
    return out_arr
