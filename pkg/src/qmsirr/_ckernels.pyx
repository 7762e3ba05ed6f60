# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trajectory kernels.

Mirrors :mod:`qmsirr._pykernels` operation for operation; the Python module
is the reference and the fallback.
"""

from libc.math cimport cos, log, sin, sqrt, M_PI
from libc.stdint cimport int64_t, uint64_t

import numpy as np

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t stream_key(uint64_t seed, uint64_t traj) noexcept nogil:
    return mix64(mix64(seed) + (traj + 1) * GOLDEN)


cdef inline void normal_pair(uint64_t key, uint64_t pair, double* z0, double* z1) noexcept nogil:
    cdef uint64_t a = mix64(key + (2 * pair + 1) * GOLDEN)
    cdef uint64_t b = mix64(key + (2 * pair + 2) * GOLDEN)
    cdef double u1 = <double>((a >> 11) + 1) * 1.1102230246251565e-16
    cdef double u2 = <double>(b >> 11) * 1.1102230246251565e-16
    cdef double r = sqrt(-2.0 * log(u1))
    z0[0] = r * cos(2.0 * M_PI * u2)
    z1[0] = r * sin(2.0 * M_PI * u2)


cdef enum:
    BLK = 16  # trajectories advanced together; the innermost loops run over this block


cdef inline void normal_pairs_block(const uint64_t* keys, uint64_t pair, double* u1, double* u2,
                                    double* z0, double* z1) noexcept nogil:
    """``normal_pair`` for ``BLK`` streams; the transcendental part is a plain loop the compiler can vectorise."""
    cdef Py_ssize_t b
    cdef uint64_t a, c
    cdef double r
    for b in range(BLK):
        a = mix64(keys[b] + (2 * pair + 1) * GOLDEN)
        c = mix64(keys[b] + (2 * pair + 2) * GOLDEN)
        u1[b] = <double>((a >> 11) + 1) * 1.1102230246251565e-16
        u2[b] = <double>(c >> 11) * 1.1102230246251565e-16
    for b in range(BLK):
        r = sqrt(-2.0 * log(u1[b]))
        z0[b] = r * cos(2.0 * M_PI * u2[b])
        z1[b] = r * sin(2.0 * M_PI * u2[b])


def stream_normals(uint64_t seed, uint64_t traj, int64_t count):
    """First ``count`` standard normals of trajectory ``traj``'s stream."""
    out = np.empty(count, dtype=np.float64)
    cdef double[::1] o = out
    cdef int64_t n
    cdef double z0, z1
    cdef uint64_t key = stream_key(seed, traj)
    with nogil:
        n = 0
        while n < count:
            normal_pair(key, <uint64_t>(n >> 1), &z0, &z1)
            o[n] = z0
            if n + 1 < count:
                o[n + 1] = z1
            n += 2
    return out


def propagate(const double complex[:, ::1] A, const double complex[:, :, ::1] B,
              const double complex[::1] xi, uint64_t seed, int64_t traj_start,
              int64_t steps, double sqrt_h, const int64_t[::1] save_idx,
              double complex[:, :, ::1] out):
    """Run ``x <- A x + sum_l dW_l B_l x`` for ``out.shape[0]`` trajectories.

    Trajectory ``traj_start + j`` draws its increments from its own
    counter-based stream, so chunks may be run in any order.
    """
    cdef Py_ssize_t n_traj = out.shape[0]
    cdef Py_ssize_t d = A.shape[0]
    cdef Py_ssize_t m = B.shape[0]
    cdef Py_ssize_t n_save = save_idx.shape[0]
    # split real/imaginary parts: avoids the C99 complex multiply helpers
    mats = np.empty((2, 1 + m, d, d), dtype=np.float64)
    mats[0, 0] = np.asarray(A).real
    mats[1, 0] = np.asarray(A).imag
    if m:
        mats[0, 1:] = np.asarray(B).real
        mats[1, 1:] = np.asarray(B).imag
    work = np.zeros(BLK * (6 * d + m + 4), dtype=np.float64)
    keys_arr = np.zeros(BLK, dtype=np.uint64)
    cdef double[:, :, :, ::1] mv = mats
    cdef double[::1] w = work
    cdef uint64_t[::1] kv = keys_arr
    cdef const double* mr = &mv[0, 0, 0, 0]
    cdef const double* mi = &mv[1, 0, 0, 0]
    cdef uint64_t* keys = &kv[0]
    cdef double* xr = &w[0]
    cdef double* xim = &w[BLK * d]
    cdef double* yr = &w[2 * BLK * d]
    cdef double* yi = &w[3 * BLK * d]
    cdef double* tr = &w[4 * BLK * d]
    cdef double* ti = &w[5 * BLK * d]
    cdef double* dw = &w[6 * BLK * d]
    cdef double* z0 = &w[BLK * (6 * d + m)]
    cdef double* z1 = &w[BLK * (6 * d + m + 1)]
    cdef double* u1 = &w[BLK * (6 * d + m + 2)]
    cdef double* u2 = &w[BLK * (6 * d + m + 3)]
    cdef Py_ssize_t j0, nb, b, k, l, r, c, s, dd = d * d
    cdef uint64_t n, cached
    cdef double a_r, a_i, g
    cdef double* pxr
    cdef double* pxi
    cdef double* pyr
    cdef double* pyi
    with nogil:
        j0 = 0
        while j0 < n_traj:
            nb = min(<Py_ssize_t>BLK, n_traj - j0)
            for b in range(BLK):
                keys[b] = stream_key(seed, <uint64_t>(traj_start + j0 + b))
            for r in range(d):
                for b in range(BLK):
                    xr[r * BLK + b] = xi[r].real
                    xim[r * BLK + b] = xi[r].imag
            s = 0
            if n_save > 0 and save_idx[0] == 0:
                for b in range(nb):
                    for r in range(d):
                        out[j0 + b, 0, r] = xi[r]
                s = 1
            cached = <uint64_t>(-1)
            for k in range(steps):
                # increments for step k: normals k*m .. k*m + m - 1
                for l in range(m):
                    n = <uint64_t>(k * m + l)
                    if (n >> 1) != cached:
                        cached = n >> 1
                        normal_pairs_block(keys, cached, u1, u2, z0, z1)
                    if n & 1:
                        for b in range(BLK):
                            dw[l * BLK + b] = sqrt_h * z1[b]
                    else:
                        for b in range(BLK):
                            dw[l * BLK + b] = sqrt_h * z0[b]
                # y = A x
                for r in range(d):
                    pyr = &yr[r * BLK]
                    pyi = &yi[r * BLK]
                    for b in range(BLK):
                        pyr[b] = 0.0
                        pyi[b] = 0.0
                    for c in range(d):
                        a_r = mr[r * d + c]
                        a_i = mi[r * d + c]
                        pxr = &xr[c * BLK]
                        pxi = &xim[c * BLK]
                        for b in range(BLK):
                            pyr[b] = pyr[b] + (a_r * pxr[b] - a_i * pxi[b])
                            pyi[b] = pyi[b] + (a_r * pxi[b] + a_i * pxr[b])
                # y += dW_l B_l x
                for l in range(m):
                    for r in range(d):
                        for b in range(BLK):
                            tr[b] = 0.0
                            ti[b] = 0.0
                        for c in range(d):
                            a_r = mr[(l + 1) * dd + r * d + c]
                            a_i = mi[(l + 1) * dd + r * d + c]
                            pxr = &xr[c * BLK]
                            pxi = &xim[c * BLK]
                            for b in range(BLK):
                                tr[b] = tr[b] + (a_r * pxr[b] - a_i * pxi[b])
                                ti[b] = ti[b] + (a_r * pxi[b] + a_i * pxr[b])
                        pyr = &yr[r * BLK]
                        pyi = &yi[r * BLK]
                        for b in range(BLK):
                            g = dw[l * BLK + b]
                            pyr[b] = pyr[b] + g * tr[b]
                            pyi[b] = pyi[b] + g * ti[b]
                for r in range(d * BLK):
                    xr[r] = yr[r]
                    xim[r] = yi[r]
                if s < n_save and save_idx[s] == k + 1:
                    for b in range(nb):
                        for r in range(d):
                            out[j0 + b, s, r].real = xr[r * BLK + b]
                            out[j0 + b, s, r].imag = xim[r * BLK + b]
                    s += 1
            j0 += BLK
