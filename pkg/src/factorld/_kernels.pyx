# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Semantics match ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, INFINITY
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef double _SCALE = 2.0 ** -52
cdef uint64_t _TWO52 = 1ULL << 52


cdef inline double _pareto_draw(uint64_t bits, double inv_alpha, double scale,
                                double p, double log_p, double log_q) nogil:
    cdef uint64_t k = bits >> 12
    cdef double u = (<double>k + 0.5) * _SCALE
    if u < 1.0 - p:
        return -scale * exp(-(log(u) - log_q) * inv_alpha)
    # 1 - u is exact on this grid, so log() matches log1p(-u)
    return scale * exp(-(log((<double>(_TWO52 - k) - 0.5) * _SCALE) - log_p) * inv_alpha)


def pareto_segment_stats(const uint64_t[::1] bits, const int64_t[::1] offsets,
                         double alpha, double scale, double p):
    """Per segment of two-sided Pareto draws: (sum w/o last, max w/o last, last)."""
    cdef Py_ssize_t nseg = offsets.shape[0] - 1
    head_sum_a = np.zeros(nseg)
    head_max_a = np.full(nseg, -np.inf)
    last_a = np.zeros(nseg)
    cdef double[::1] head_sum = head_sum_a
    cdef double[::1] head_max = head_max_a
    cdef double[::1] last = last_a
    cdef double inv_alpha = 1.0 / alpha
    cdef double log_p = log(p) if p > 0 else -INFINITY
    cdef double log_q = log1p(-p) if p < 1 else -INFINITY
    cdef Py_ssize_t s, i, start, stop
    cdef double v, acc, comp, t, mx
    with nogil:
        for s in range(nseg):
            start = offsets[s]
            stop = offsets[s + 1]
            if stop <= start:
                continue
            acc = 0.0
            comp = 0.0
            mx = -INFINITY
            for i in range(start, stop - 1):
                v = _pareto_draw(bits[i], inv_alpha, scale, p, log_p, log_q)
                # Neumaier summation
                t = acc + v
                if (acc if acc >= 0 else -acc) >= (v if v >= 0 else -v):
                    comp += (acc - t) + v
                else:
                    comp += (v - t) + acc
                acc = t
                if v > mx:
                    mx = v
            head_sum[s] = acc + comp
            head_max[s] = mx
            last[s] = _pareto_draw(bits[stop - 1], inv_alpha, scale, p, log_p, log_q)
    return head_sum_a, head_max_a, last_a


def segment_stats(const double[::1] values, const int64_t[::1] offsets):
    """Per segment of given values: (sum w/o last, max w/o last, last)."""
    cdef Py_ssize_t nseg = offsets.shape[0] - 1
    head_sum_a = np.zeros(nseg)
    head_max_a = np.full(nseg, -np.inf)
    last_a = np.zeros(nseg)
    cdef double[::1] head_sum = head_sum_a
    cdef double[::1] head_max = head_max_a
    cdef double[::1] last = last_a
    cdef Py_ssize_t s, i, start, stop
    cdef double v, acc, comp, t, mx
    with nogil:
        for s in range(nseg):
            start = offsets[s]
            stop = offsets[s + 1]
            if stop <= start:
                continue
            acc = 0.0
            comp = 0.0
            mx = -INFINITY
            for i in range(start, stop - 1):
                v = values[i]
                t = acc + v
                if (acc if acc >= 0 else -acc) >= (v if v >= 0 else -v):
                    comp += (acc - t) + v
                else:
                    comp += (v - t) + acc
                acc = t
                if v > mx:
                    mx = v
            head_sum[s] = acc + comp
            head_max[s] = mx
            last[s] = values[stop - 1]
    return head_sum_a, head_max_a, last_a


def path_stats(const double[::1] sizes, const int64_t[::1] offsets):
    """Per time-ordered path: (terminal, supremum incl. the origin, index of largest jump)."""
    cdef Py_ssize_t nseg = offsets.shape[0] - 1
    terminal_a = np.zeros(nseg)
    sup_a = np.zeros(nseg)
    argmax_a = np.full(nseg, -1, dtype=np.int64)
    cdef double[::1] terminal = terminal_a
    cdef double[::1] sup = sup_a
    cdef int64_t[::1] argmax = argmax_a
    cdef Py_ssize_t s, i, start, stop
    cdef double acc, comp, t, v, best, top
    cdef int64_t best_i
    with nogil:
        for s in range(nseg):
            start = offsets[s]
            stop = offsets[s + 1]
            acc = 0.0
            comp = 0.0
            top = 0.0
            best = -INFINITY
            best_i = -1
            for i in range(start, stop):
                v = sizes[i]
                t = acc + v
                if (acc if acc >= 0 else -acc) >= (v if v >= 0 else -v):
                    comp += (acc - t) + v
                else:
                    comp += (v - t) + acc
                acc = t
                if acc + comp > top:
                    top = acc + comp
                if v > best:
                    best = v
                    best_i = i
            terminal[s] = acc + comp
            sup[s] = top
            argmax[s] = best_i
    return terminal_a, sup_a, argmax_a
