"""Pure-Python twin of the compiled kernels in ``_kernels.pyx``.

Used when the extension is not built or ``PATHORDER_PURE=1`` is set.
Operation order matches the C code so both backends agree to the bit.
"""
import math

import numpy as np

CAT = 0
DOUBLING = 1
STANDARD = 2

_TWO_PI = 2.0 * math.pi
_FOUR_PI_SQ = 4.0 * math.pi * math.pi


def _wrap(x):
    m = math.fmod(x, 1.0)
    if m < 0.0:
        m += 1.0
    if m >= 1.0:
        m = 0.0
    return m


def _step(code, K, q, p):
    if code == CAT:
        return _wrap(2.0 * q + p), _wrap(q + p)
    if code == DOUBLING:
        return _wrap(2.0 * q), p
    pn = _wrap(p + K / _TWO_PI * math.sin(_TWO_PI * q))
    return _wrap(q + pn), pn


def _cell(q, p, lo0, lo1, w0, w1, r0, r1):
    i0 = int(math.floor((q - lo0) / w0 * r0))
    i1 = int(math.floor((p - lo1) / w1 * r1))
    if i0 >= r0:
        i0 = r0 - 1
    if i1 >= r1:
        i1 = r1 - 1
    return i0 * r1 + i1


def _lagrangian(code, K, q, p):
    if code == STANDARD:
        return 0.5 * p * p - K / _FOUR_PI_SQ * math.cos(_TWO_PI * q)
    return 0.5 * p * p


def iterate(code, K, q0, p0, n):
    out = np.empty((n + 1, 2), dtype=np.float64)
    q, p = q0, p0
    rows = [(q, p)]
    for _ in range(n):
        q, p = _step(code, K, q, p)
        rows.append((q, p))
    out[:] = rows
    return out


def first_passage(code, K, starts, lo0, lo1, hi0, hi1, r0, r1, target, horizon, dt):
    L = starts.shape[0]
    cells = np.full((L, horizon + 1), -1, dtype=np.int64)
    hits = np.full(L, -1, dtype=np.int64)
    action = np.zeros(L, dtype=np.float64)
    w0 = hi0 - lo0
    w1 = hi1 - lo1
    for i in range(L):
        q = float(starts[i, 0])
        p = float(starts[i, 1])
        acc = 0.0
        row = [_cell(q, p, lo0, lo1, w0, w1, r0, r1)]
        for k in range(1, horizon + 1):
            acc = acc + _lagrangian(code, K, q, p) * dt
            q, p = _step(code, K, q, p)
            c = _cell(q, p, lo0, lo1, w0, w1, r0, r1)
            row.append(c)
            if c == target:
                hits[i] = k
                action[i] = acc
                break
        cells[i, : len(row)] = row
    return cells, hits, action
