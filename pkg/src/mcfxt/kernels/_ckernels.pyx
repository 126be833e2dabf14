# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops of the crosstalk simulator and the series analysis."""

import numpy as np
from scipy.linalg.cython_blas cimport zgemm
from libc.math cimport cos, sin, fabs


def projected_power(const double[:, ::1] phases, double complex[:, ::1] proj, double[::1] out):
    """See mcfxt.kernels.projected_power."""
    cdef int T = <int>phases.shape[0]
    cdef int N = <int>phases.shape[1]
    cdef int R = <int>proj.shape[1]
    cdef Py_ssize_t t, l, j
    cdef double acc, ph
    cdef double complex a
    cdef double complex one = 1.0, zero = 0.0
    cdef char trans = b'N'
    if T == 0:
        return
    cdef double complex[:, ::1] phasors = np.empty((T, N), dtype=np.complex128)
    cdef double complex[:, ::1] amp = np.empty((T, R), dtype=np.complex128)
    with nogil:
        for t in range(T):
            for l in range(N):
                ph = phases[t, l]
                phasors[t, l].real = cos(ph)
                phasors[t, l].imag = -sin(ph)
        # row-major amp (T x R) = phasors (T x N) @ proj (N x R), written as
        # the column-major product proj^T-view times phasors^T-view
        zgemm(&trans, &trans, &R, &T, &N, &one, &proj[0, 0], &R,
              &phasors[0, 0], &N, &zero, &amp[0, 0], &R)
        for t in range(T):
            acc = 0.0
            for j in range(R):
                a = amp[t, j]
                acc = acc + a.real * a.real + a.imag * a.imag
            out[t] = acc


def count_extrema(const double[::1] values, double threshold):
    """See mcfxt.kernels.count_extrema."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t i
    cdef int direction = 0
    cdef long count = 0
    cdef double hi, lo, ext, v
    if n == 0:
        return 0
    hi = values[0]
    lo = values[0]
    ext = values[0]
    with nogil:
        for i in range(1, n):
            v = values[i]
            if direction == 0:
                if v > hi:
                    hi = v
                if v < lo:
                    lo = v
                if v - lo >= threshold:
                    direction = 1
                    ext = v
                elif hi - v >= threshold:
                    direction = -1
                    ext = v
            elif direction == 1:
                if v > ext:
                    ext = v
                elif ext - v >= threshold:
                    count += 1
                    direction = -1
                    ext = v
            else:
                if v < ext:
                    ext = v
                elif v - ext >= threshold:
                    count += 1
                    direction = 1
                    ext = v
    return count
