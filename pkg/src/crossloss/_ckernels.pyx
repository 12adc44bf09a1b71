# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the loss family and the blend lattice search.

Every reduction runs in index order so totals are reproducible bit for bit.
Lattice points are independent; parallel evaluation writes each result to
its own slot, so the output does not depend on the thread count.
"""
import numpy as np

from cython.parallel cimport parallel, prange
from libc.math cimport fabs, pow, INFINITY
from libc.stdlib cimport malloc, free
cimport openmp


cdef inline double _error_power(double d, double p) noexcept nogil:
    # p = 1 and p = 2 cover MAPE-type and quadratic losses; skip pow for them
    if p == 2.0:
        return d * d
    if p == 1.0:
        return fabs(d)
    return pow(fabs(d), p)


cdef inline double _loss(double pred, double act, double p, double q) noexcept nogil:
    if pred == act:
        return 0.0
    return _error_power(pred - act, p) * pow(act, q)


def component_losses(const double[::1] pred, const double[::1] act, double p, double q):
    cdef Py_ssize_t i, n = pred.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _loss(pred[i], act[i], p, q)
    return out


def ordered_sum(const double[::1] x):
    cdef Py_ssize_t i
    cdef double acc = 0.0
    with nogil:
        for i in range(x.shape[0]):
            acc = acc + x[i]
    return acc


def total_loss(const double[::1] pred, const double[::1] act, double p, double q):
    cdef Py_ssize_t i
    cdef double acc = 0.0
    with nogil:
        for i in range(pred.shape[0]):
            acc = acc + _loss(pred[i], act[i], p, q)
    return acc


cdef inline double _blend_one(const double[:, ::1] preds, const double[:, ::1] weights,
                              Py_ssize_t m, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t j
    cdef double acc = 0.0
    for j in range(preds.shape[0]):
        acc = acc + weights[m, j] * preds[j, i]
    return acc


def blend_losses(const double[:, ::1] preds, const double[::1] act,
                 const double[:, ::1] weights, double p, double q,
                 const Py_ssize_t[::1] group, const double[::1] totals,
                 bint check_nonneg, int num_threads=0):
    """Total loss of every blended candidate; ``inf`` marks infeasible rows.

    ``preds`` is (k, n), ``weights`` is (m, k). When ``totals`` is non-empty
    each blended vector is rescaled so group ``g`` sums to ``totals[g]``.
    """
    cdef Py_ssize_t n = preds.shape[1]
    cdef Py_ssize_t n_cand = weights.shape[0]
    cdef Py_ssize_t n_groups = totals.shape[0]
    cdef Py_ssize_t m, i, g
    cdef double val, acc
    cdef double *gsum
    cdef bint bad
    out = np.empty(n_cand, dtype=np.float64)
    cdef double[::1] o = out
    # A^q does not depend on the candidate
    aq_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] aq = aq_arr
    for i in range(n):
        aq[i] = pow(act[i], q)
    if num_threads <= 0:
        num_threads = openmp.omp_get_max_threads()

    with nogil, parallel(num_threads=num_threads):
        gsum = <double *> malloc((n_groups + 1) * sizeof(double))
        for m in prange(n_cand, schedule='static'):
            bad = False
            for g in range(n_groups):
                gsum[g] = 0.0
            for i in range(n):
                val = _blend_one(preds, weights, m, i)
                if check_nonneg and val < 0.0:
                    bad = True
                if n_groups > 0:
                    gsum[group[i]] = gsum[group[i]] + val
            if n_groups > 0:
                for g in range(n_groups):
                    if gsum[g] <= 0.0:
                        bad = True
                    else:
                        gsum[g] = totals[g] / gsum[g]
            if bad:
                o[m] = INFINITY
                continue
            acc = 0.0
            for i in range(n):
                val = _blend_one(preds, weights, m, i)
                if n_groups > 0:
                    val = val * gsum[group[i]]
                if val != act[i]:
                    acc = acc + _error_power(val - act[i], p) * aq[i]
            o[m] = acc
        free(gsum)
    return out
