# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Operation-for-operation identical to pure.py so the
two backends produce the same bits; see that module for the contracts."""

import numpy as np

BACKEND = "native"

cdef unsigned short CRC_TABLE[256]

cdef void _build_crc_table() noexcept:
    cdef unsigned int byte, crc, i
    for byte in range(256):
        crc = byte << 8
        for i in range(8):
            if crc & 0x8000:
                crc = (crc << 1) ^ 0x1021
            else:
                crc = crc << 1
            crc &= 0xFFFF
        CRC_TABLE[byte] = <unsigned short>crc

_build_crc_table()


cpdef unsigned int crc16(const unsigned char[::1] data):
    cdef unsigned int crc = 0xFFFF
    cdef Py_ssize_t i
    for i in range(data.shape[0]):
        crc = ((crc << 8) & 0xFFFF) ^ CRC_TABLE[((crc >> 8) ^ data[i]) & 0xFF]
    return crc


cpdef list env_window_flags(const double[::1] values, int window, double threshold):
    cdef list flagged = []
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t i, j
    cdef double s, d
    cdef double w = <double>window
    for i in range(window, n):
        s = 0.0
        for j in range(i - window, i):
            s += values[j]
        d = values[i] - s / w
        if d * d > threshold:
            flagged.append(i)
    return flagged


cpdef object cv_bank_step(double[::1] x, double[::1] p, double dt,
                          const double[::1] q_diag, const double[::1] r_diag,
                          const double[::1] u, const double[::1] z,
                          double[::1] out):
    cdef Py_ssize_t axes = z.shape[0]
    cdef Py_ssize_t a, i, j
    cdef double half = 0.5 * dt * dt
    cdef double v, r, p00, p01, p10, p11, ua
    cdef double n00, n01, n10, n11, off, innov, s, k0, k1
    cdef double m00, m01, m10, m11
    for a in range(axes):
        i = 2 * a
        j = 4 * a
        v = x[i]
        r = x[i + 1]
        p00 = p[j]
        p01 = p[j + 1]
        p10 = p[j + 2]
        p11 = p[j + 3]
        ua = u[a]

        v = v + dt * r + half * ua
        r = r + dt * ua
        n00 = p00 + dt * p10 + (p01 + dt * p11) * dt + q_diag[i]
        n01 = p01 + dt * p11
        n10 = p10 + dt * p11
        n11 = p11 + q_diag[i + 1]
        off = 0.5 * (n01 + n10)
        n01 = off
        n10 = off

        innov = z[a] - v
        out[a] = innov
        s = n00 + r_diag[a]
        if s != 0.0:
            k0 = n00 / s
            k1 = n10 / s
            v = v + k0 * innov
            r = r + k1 * innov
            m00 = (1.0 - k0) * n00
            m01 = (1.0 - k0) * n01
            m10 = n10 - k1 * n00
            m11 = n11 - k1 * n01
            off = 0.5 * (m01 + m10)
            n00 = m00
            n01 = off
            n10 = off
            n11 = m11

        x[i] = v
        x[i + 1] = r
        p[j] = n00
        p[j + 1] = n01
        p[j + 2] = n10
        p[j + 3] = n11
    return np.asarray(out)
