"""Pure-Python fallback for the hot kernels.

Semantics are pinned so that both backends agree bit-for-bit:
window means are plain left-to-right float64 sums, and the filter
bank does the exact scalar operation sequence documented below.
"""

import numpy as np

BACKEND = "pure"

_CRC_POLY = 0x1021


def _build_crc_table() -> list:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            if crc & 0x8000:
                crc = (crc << 1) ^ _CRC_POLY
            else:
                crc <<= 1
            crc &= 0xFFFF
        table.append(crc)
    return table


_CRC_TABLE = _build_crc_table()


def crc16(data) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection."""
    crc = 0xFFFF
    table = _CRC_TABLE
    for b in bytes(data):
        crc = ((crc << 8) & 0xFFFF) ^ table[((crc >> 8) ^ b) & 0xFF]
    return crc


def env_window_flags(values, window: int, threshold: float) -> list:
    """Indices i >= window where (x_i - mean(x[i-window..i-1]))^2 > threshold.

    The window mean is a left-to-right sum divided by the window length;
    indices with insufficient history are never flagged.
    """
    if hasattr(values, "tolist"):
        values = values.tolist()
    flagged = []
    n = len(values)
    w = float(window)
    for i in range(window, n):
        s = 0.0
        for j in range(i - window, i):
            s += values[j]
        d = values[i] - s / w
        if d * d > threshold:
            flagged.append(i)
    return flagged


def cv_bank_step(x, p, dt, q_diag, r_diag, u, z, out):
    """Advance a bank of per-axis [value, rate] filters one tick, in place.

    For each axis a: predict with F=[[1,dt],[0,1]], B=[dt^2/2, dt],
    Q=diag(q_diag[2a], q_diag[2a+1]); then update against the scalar
    observation z[a] of the value state with noise r_diag[a].  The
    covariance is re-symmetrized after each half-step.  If the innovation
    covariance is exactly zero the update is skipped and the predicted
    state is kept.  Innovations (z - predicted value) land in ``out``.

    Layout: x is (2A,), p is (4A,) row-major 2x2 blocks, out is (A,).
    """
    axes = len(z)
    half = 0.5 * dt * dt
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
            n00, n01, n10, n11 = m00, off, off, m11

        x[i] = v
        x[i + 1] = r
        p[j] = n00
        p[j + 1] = n01
        p[j + 2] = n10
        p[j + 3] = n11
    return np.asarray(out)
