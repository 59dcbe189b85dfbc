# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: direct Fourier quadrature and the leapfrog stepper."""
import numpy as np

from libc.math cimport cos, sin


def direct_sum(const double[::1] k, const double complex[::1] weights,
               const double[::1] x):
    """out[j] = sum_m weights[m] * exp(i k[m] x[j])."""
    cdef Py_ssize_t nk = k.shape[0], nx = x.shape[0], j, m
    cdef double ph, re, im
    cdef double complex w
    out = np.empty(nx, dtype=np.complex128)
    cdef double complex[::1] o = out
    with nogil:
        for j in range(nx):
            re = 0.0
            im = 0.0
            for m in range(nk):
                ph = k[m] * x[j]
                w = weights[m]
                re = re + w.real * cos(ph) - w.imag * sin(ph)
                im = im + w.real * sin(ph) + w.imag * cos(ph)
            o[j] = re + 1j * im
    return out


def leapfrog(double complex[::1] prev, double complex[::1] cur, Py_ssize_t n_steps,
             double c2, double c4, double c0):
    """Advance u_tt = L u by ``n_steps`` leapfrog steps on a periodic grid.

    L u_j = c2 (u_{j+1} - 2u_j + u_{j-1})
          + c4 (u_{j+2} - 4u_{j+1} + 6u_j - 4u_{j-1} + u_{j-2}) + c0 u_j,
    with dt^2 already folded into the coefficients.  Returns (prev, cur) after
    stepping; the inputs are not modified.
    """
    cdef Py_ssize_t n = cur.shape[0], s, j, jm1, jm2, jp1, jp2
    cdef Py_ssize_t ia = 0, ib = 1, ic = 2, itmp
    if n < 5:
        raise ValueError("leapfrog needs at least 5 grid points")
    buf_arr = np.empty((3, n), dtype=np.complex128)
    buf_arr[0] = prev
    buf_arr[1] = cur
    cdef double complex[:, ::1] buf = buf_arr
    cdef double complex lap, bih, bj
    with nogil:
        for s in range(n_steps):
            for j in range(n):
                jm1 = j - 1 if j >= 1 else j - 1 + n
                jm2 = j - 2 if j >= 2 else j - 2 + n
                jp1 = j + 1 if j + 1 < n else j + 1 - n
                jp2 = j + 2 if j + 2 < n else j + 2 - n
                bj = buf[ib, j]
                lap = buf[ib, jp1] - 2.0 * bj + buf[ib, jm1]
                bih = (buf[ib, jp2] - 4.0 * buf[ib, jp1] + 6.0 * bj
                       - 4.0 * buf[ib, jm1] + buf[ib, jm2])
                buf[ic, j] = 2.0 * bj - buf[ia, j] + c2 * lap + c4 * bih + c0 * bj
            itmp = ia
            ia = ib
            ib = ic
            ic = itmp
    return buf_arr[ia].copy(), buf_arr[ib].copy()
