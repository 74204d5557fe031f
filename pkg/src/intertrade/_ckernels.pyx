# cython: language_level=3
"""Compiled box-variance kernels.

Same contract as ``_pykernels``; loops release the GIL so scale sweeps can
run on a thread pool.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

NAME = "cython"


cdef inline double _box_residual_ss(const double[::1] y, Py_ssize_t start,
                                    const double[:, ::1] basis, double* coef) noexcept nogil:
    cdef Py_ssize_t s = basis.shape[0]
    cdef Py_ssize_t k = basis.shape[1]
    cdef Py_ssize_t i, j
    cdef double ref = y[start + s // 2]
    cdef double v, fit, ss = 0.0

    for j in range(k):
        coef[j] = 0.0
    for i in range(s):
        v = y[start + i] - ref
        for j in range(k):
            coef[j] += v * basis[i, j]
    for i in range(s):
        fit = 0.0
        for j in range(k):
            fit += coef[j] * basis[i, j]
        v = y[start + i] - ref - fit
        ss += v * v
    return ss


def dfa_box_variances(const double[::1] y, Py_ssize_t s, const double[:, ::1] basis,
                      bint both_ends):
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t ns = n // s
    cdef Py_ssize_t nbox = 2 * ns if both_ends else ns
    cdef Py_ssize_t v
    cdef double coef[8]
    if basis.shape[0] != s or basis.shape[1] > 8:
        raise ValueError("basis must have s rows and at most 8 columns")
    out = np.empty(nbox, dtype=np.float64)
    cdef double[::1] f2 = out
    with nogil:
        for v in range(ns):
            f2[v] = _box_residual_ss(y, v * s, basis, coef) / s
        if both_ends:
            for v in range(ns):
                f2[ns + v] = _box_residual_ss(y, n - (v + 1) * s, basis, coef) / s
    return out


def dma_box_variances(const double[::1] y, Py_ssize_t s, Py_ssize_t lag, Py_ssize_t lead):
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t first = lag
    cdef Py_ssize_t last = n - lead  # exclusive
    cdef Py_ssize_t support = last - first
    cdef Py_ssize_t ns = support // s
    cdef Py_ssize_t i, t, v
    cdef double acc, comp, add, tmp, eps, ss
    if lag + lead + 1 != s:
        raise ValueError("window must hold exactly s points")
    out = np.empty(max(ns, 0), dtype=np.float64)
    cdef double[::1] f2 = out
    if ns <= 0:
        return out
    with nogil:
        # Neumaier-compensated running window sum over y[i-lag .. i+lead]
        acc = 0.0
        comp = 0.0
        for t in range(0, s):
            add = y[t]
            tmp = acc + add
            if abs(acc) >= abs(add):
                comp += (acc - tmp) + add
            else:
                comp += (add - tmp) + acc
            acc = tmp
        i = first
        for v in range(ns):
            ss = 0.0
            for t in range(s):
                eps = y[i] - (acc + comp) / s
                ss += eps * eps
                if i + lead + 1 < n:
                    add = y[i + lead + 1]
                    tmp = acc + add
                    if abs(acc) >= abs(add):
                        comp += (acc - tmp) + add
                    else:
                        comp += (add - tmp) + acc
                    acc = tmp
                    add = -y[i - lag]
                    tmp = acc + add
                    if abs(acc) >= abs(add):
                        comp += (acc - tmp) + add
                    else:
                        comp += (add - tmp) + acc
                    acc = tmp
                i += 1
            f2[v] = ss / s
    return out
