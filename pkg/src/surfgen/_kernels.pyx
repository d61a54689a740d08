# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled maxent inner loops; see _kernels_py.py for the contract."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def log_softmax_scores(const int[::1] pair_out, const int[::1] pair_fid,
                       const double[::1] log_w, Py_ssize_t n_out):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] res = np.zeros(n_out)
    cdef double[::1] scores = res
    cdef Py_ssize_t k, o
    cdef double top, total
    with nogil:
        for k in range(pair_out.shape[0]):
            scores[pair_out[k]] += log_w[pair_fid[k]]
        top = scores[0]
        for o in range(1, n_out):
            if scores[o] > top:
                top = scores[o]
        total = 0.0
        for o in range(n_out):
            total += exp(scores[o] - top)
        total = top + log(total)
        for o in range(n_out):
            scores[o] -= total
    return res


def iis_expectations(const long[::1] hist_ptr, const int[::1] pair_out,
                     const int[::1] pair_fid, const double[::1] hist_weight,
                     const long[::1] ev_ptr, const int[::1] ev_out,
                     const double[::1] ev_count, const double[::1] log_w,
                     Py_ssize_t n_out, Py_ssize_t max_fsharp,
                     Py_ssize_t lo, Py_ssize_t hi):
    cdef Py_ssize_t n_feat = log_w.shape[0]
    expected_arr = np.zeros((n_feat, max_fsharp + 1))
    cdef double[:, ::1] expected = expected_arr
    cdef double[::1] scores = np.zeros(n_out)
    cdef long[::1] fsharp = np.zeros(n_out, dtype=np.int64)
    cdef Py_ssize_t h, k, o
    cdef double top, log_z, loglik = 0.0, w
    with nogil:
        for h in range(lo, hi):
            for o in range(n_out):
                scores[o] = 0.0
                fsharp[o] = 0
            for k in range(hist_ptr[h], hist_ptr[h + 1]):
                scores[pair_out[k]] += log_w[pair_fid[k]]
                fsharp[pair_out[k]] += 1
            top = scores[0]
            for o in range(1, n_out):
                if scores[o] > top:
                    top = scores[o]
            log_z = 0.0
            for o in range(n_out):
                log_z += exp(scores[o] - top)
            log_z = top + log(log_z)
            w = hist_weight[h]
            for k in range(hist_ptr[h], hist_ptr[h + 1]):
                o = pair_out[k]
                expected[pair_fid[k], fsharp[o]] += w * exp(scores[o] - log_z)
            for k in range(ev_ptr[h], ev_ptr[h + 1]):
                loglik += ev_count[k] * (scores[ev_out[k]] - log_z)
    return expected_arr, loglik
