# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for map iteration and first-passage classification.

Every routine here has a line-for-line twin in ``_pykernels``; both must
produce bit-identical output (no fast-math).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fmod, sin, cos, floor, M_PI

cnp.import_array()

DEF CAT = 0
DEF DOUBLING = 1
DEF STANDARD = 2


cdef inline double _wrap(double x) noexcept nogil:
    cdef double m = fmod(x, 1.0)
    if m < 0.0:
        m += 1.0
    if m >= 1.0:
        m = 0.0
    return m


cdef inline void _step(int code, double K, double q, double p,
                       double* qo, double* po) noexcept nogil:
    cdef double pn
    if code == CAT:
        qo[0] = _wrap(2.0 * q + p)
        po[0] = _wrap(q + p)
    elif code == DOUBLING:
        qo[0] = _wrap(2.0 * q)
        po[0] = p
    else:
        pn = _wrap(p + K / (2.0 * M_PI) * sin(2.0 * M_PI * q))
        qo[0] = _wrap(q + pn)
        po[0] = pn


cdef inline long _cell(double q, double p, double lo0, double lo1,
                       double w0, double w1, long r0, long r1) noexcept nogil:
    cdef long i0 = <long>floor((q - lo0) / w0 * r0)
    cdef long i1 = <long>floor((p - lo1) / w1 * r1)
    if i0 >= r0:
        i0 = r0 - 1
    if i1 >= r1:
        i1 = r1 - 1
    return i0 * r1 + i1


cdef inline double _lagrangian(int code, double K, double q, double p) noexcept nogil:
    if code == STANDARD:
        return 0.5 * p * p - K / (4.0 * M_PI * M_PI) * cos(2.0 * M_PI * q)
    return 0.5 * p * p


def iterate(int code, double K, double q0, double p0, Py_ssize_t n):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n + 1, 2), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t k
    cdef double q = q0, p = p0
    with nogil:
        o[0, 0] = q
        o[0, 1] = p
        for k in range(1, n + 1):
            _step(code, K, q, p, &q, &p)
            o[k, 0] = q
            o[k, 1] = p
    return out


def first_passage(int code, double K, double[:, ::1] starts,
                  double lo0, double lo1, double hi0, double hi1,
                  long r0, long r1, long target, Py_ssize_t horizon, double dt):
    cdef Py_ssize_t L = starts.shape[0]
    cells_arr = np.full((L, horizon + 1), -1, dtype=np.int64)
    hits_arr = np.full(L, -1, dtype=np.int64)
    action_arr = np.zeros(L, dtype=np.float64)
    cdef cnp.int64_t[:, ::1] cells = cells_arr
    cdef cnp.int64_t[::1] hits = hits_arr
    cdef double[::1] action = action_arr
    cdef double w0 = hi0 - lo0, w1 = hi1 - lo1
    cdef Py_ssize_t i, k
    cdef double q, p, acc
    cdef long c
    with nogil:
        for i in range(L):
            q = starts[i, 0]
            p = starts[i, 1]
            acc = 0.0
            c = _cell(q, p, lo0, lo1, w0, w1, r0, r1)
            cells[i, 0] = c
            for k in range(1, horizon + 1):
                acc = acc + _lagrangian(code, K, q, p) * dt
                _step(code, K, q, p, &q, &p)
                c = _cell(q, p, lo0, lo1, w0, w1, r0, r1)
                cells[i, k] = c
                if c == target:
                    hits[i] = k
                    action[i] = acc
                    break
    return cells_arr, hits_arr, action_arr
