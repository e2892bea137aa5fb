# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Gram kernel for shifted exponentials on the positive orthant."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, cos, sin

cnp.import_array()


def term_kernel(shifts_a, decays_a, shifts_b, decays_b):
    cdef double[:, ::1] s = np.ascontiguousarray(shifts_a, dtype=np.float64)
    cdef double complex[:, ::1] z = np.ascontiguousarray(decays_a, dtype=np.complex128)
    cdef double[:, ::1] t = np.ascontiguousarray(shifts_b, dtype=np.float64)
    cdef double complex[:, ::1] w = np.ascontiguousarray(decays_b, dtype=np.complex128)
    cdef Py_ssize_t n = s.shape[0], m = t.shape[0], d = s.shape[1]
    if t.shape[1] != d or z.shape[1] != d or w.shape[1] != d:
        raise ValueError("kernel inputs disagree on dimension")

    out = np.empty((n, m), dtype=np.complex128)
    cdef double complex[:, ::1] K = out
    cdef Py_ssize_t j, k, i
    cdef double complex norm, expo, zc, wi, denom
    cdef double gap, mag
    for j in range(n):
        for k in range(m):
            norm = 1.0
            expo = 0.0
            for i in range(d):
                zc = z[j, i].conjugate()
                wi = w[k, i]
                denom = zc + wi
                norm = norm * (2.0 * sqrt(z[j, i].real * wi.real) / denom)
                gap = t[k, i] - s[j, i]
                if gap >= 0.0:
                    expo = expo - zc * gap
                else:
                    expo = expo + wi * gap
            mag = exp(expo.real)
            K[j, k] = norm * (mag * cos(expo.imag) + 1j * mag * sin(expo.imag))
    return out
