# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scatter/gather kernels for the message-passing inner loop."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def segment_sum(const double[:, ::1] values, const long[::1] segments, Py_ssize_t num_segments):
    cdef Py_ssize_t e = values.shape[0]
    cdef Py_ssize_t d = values.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((num_segments, d), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, s
    for i in range(e):
        s = segments[i]
        for j in range(d):
            o[s, j] += values[i, j]
    return out


def index_add_rows(double[:, ::1] out, const long[::1] index, const double[:, ::1] values):
    cdef Py_ssize_t e = values.shape[0]
    cdef Py_ssize_t d = values.shape[1]
    cdef Py_ssize_t i, j, s
    for i in range(e):
        s = index[i]
        for j in range(d):
            out[s, j] += values[i, j]


def segment_max(const double[:, ::1] values, const long[::1] segments, Py_ssize_t num_segments):
    cdef Py_ssize_t e = values.shape[0]
    cdef Py_ssize_t d = values.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.full((num_segments, d), -np.inf, dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, s
    cdef double v
    for i in range(e):
        s = segments[i]
        for j in range(d):
            v = values[i, j]
            if v > o[s, j]:
                o[s, j] = v
    return out
