# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tensor-power moment accumulation."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF MAX_DIM = 8


cdef inline void _kron2(const double complex* a, Py_ssize_t da,
                        double complex r00, double complex r01,
                        double complex r10, double complex r11,
                        double complex* out) noexcept nogil:
    # out = a (x) r for a da x da block and a 2x2 r, row-major
    cdef Py_ssize_t i, j, do = 2 * da
    cdef double complex x
    for i in range(da):
        for j in range(da):
            x = a[i * da + j]
            out[(2 * i) * do + 2 * j] = x * r00
            out[(2 * i) * do + 2 * j + 1] = x * r01
            out[(2 * i + 1) * do + 2 * j] = x * r10
            out[(2 * i + 1) * do + 2 * j + 1] = x * r11


def weighted_tensor_power_sum(double complex[:, :, :, ::1] rhos,
                              double[::1] weights, int t):
    """out[s] = sum_i weights[i] * rhos[s, i]^{(x) t}."""
    if t < 1 or (1 << t) > MAX_DIM:
        raise ValueError(f"order t={t} outside 1..3")
    cdef Py_ssize_t n_states = rhos.shape[0]
    cdef Py_ssize_t n_members = rhos.shape[1]
    cdef Py_ssize_t d = 1 << t
    cdef Py_ssize_t s, i, k, j, cur
    cdef double w
    cdef double complex r00, r01, r10, r11
    cdef double complex buf_a[MAX_DIM * MAX_DIM]
    cdef double complex buf_b[MAX_DIM * MAX_DIM]
    cdef double complex* src
    cdef double complex* dst
    cdef double complex* tmp
    out_arr = np.zeros((n_states, d, d), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef double complex* acc
    with nogil:
        for s in range(n_states):
            acc = &out[s, 0, 0]
            for i in range(n_members):
                w = weights[i]
                if w == 0.0:
                    continue
                r00 = rhos[s, i, 0, 0]
                r01 = rhos[s, i, 0, 1]
                r10 = rhos[s, i, 1, 0]
                r11 = rhos[s, i, 1, 1]
                # seed with w * rho, then kron by rho t-1 times
                src = buf_a
                dst = buf_b
                src[0] = w * r00
                src[1] = w * r01
                src[2] = w * r10
                src[3] = w * r11
                cur = 2
                for k in range(t - 1):
                    _kron2(src, cur, r00, r01, r10, r11, dst)
                    cur = 2 * cur
                    tmp = src
                    src = dst
                    dst = tmp
                for j in range(d * d):
                    acc[j] = acc[j] + src[j]
    return out_arr
