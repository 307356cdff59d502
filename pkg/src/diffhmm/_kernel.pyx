# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled simulation kernel.

Same contract as ``_kernel_py.run_chain``; the belief recursion runs in
plain C loops with the GIL released, so sweep cells parallelize across
threads.
"""

from libc.math cimport exp, log
from libc.stdint cimport int64_t

import numpy as np

from .errors import NumericFailureError

name = "compiled"
compiled = True


cdef inline void _lognormalize_row(double* row, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t j
    cdef double mx = row[0]
    cdef double s = 0.0
    for j in range(1, m):
        if row[j] > mx:
            mx = row[j]
    for j in range(m):
        s += exp(row[j] - mx)
    s = mx + log(s)
    for j in range(m):
        row[j] -= s


cdef int64_t _evolve(
    const double[:, :, ::1] loglik,
    const int64_t[::1] truth,
    const double[:, ::1] weights,
    int code,
    double p1,
    double p2,
    const double[:, ::1] transition,
    bint record_traj,
    double[:, ::1] lb,
    double[:, ::1] psi,
    double[:, ::1] nxt,
    unsigned char[:, ::1] correct,
    unsigned char[::1] net_error,
    double[:, :, ::1] traj,
) noexcept nogil:
    cdef Py_ssize_t t_steps = loglik.shape[0]
    cdef Py_ssize_t n = loglik.shape[1]
    cdef Py_ssize_t m = loglik.shape[2]
    cdef Py_ssize_t i, k, j, l
    cdef int64_t t
    cdef double one_less = 1.0 - p1 * m
    cdef double keep = 1.0 - p1
    cdef double acc
    cdef unsigned char err, any_err

    for i in range(t_steps):
        for k in range(n):
            if code == 0:  # bayes
                for j in range(m):
                    psi[k, j] = lb[k, j] + loglik[i, k, j]
            elif code == 1:  # alpha-hmm
                for j in range(m):
                    psi[k, j] = log(one_less * exp(lb[k, j]) + p1) + loglik[i, k, j]
            elif code == 2:  # hmm
                for j in range(m):
                    acc = 0.0
                    for l in range(m):
                        acc += transition[l, j] * exp(lb[k, l])
                    psi[k, j] = log(acc) + loglik[i, k, j]
            else:  # generalized
                for j in range(m):
                    psi[k, j] = keep * lb[k, j] + p2 * loglik[i, k, j]
            _lognormalize_row(&psi[k, 0], m)

        for k in range(n):
            for j in range(m):
                acc = 0.0
                for l in range(n):
                    acc += weights[l, k] * psi[l, j]
                nxt[k, j] = acc
            _lognormalize_row(&nxt[k, 0], m)
            # degenerate rows normalize to all-NaN; NaN != NaN
            if nxt[k, 0] != nxt[k, 0]:
                return i
        lb[:, :] = nxt

        t = truth[i]
        any_err = 0
        for k in range(n):
            err = 0
            for j in range(m):
                if j != t and lb[k, j] >= lb[k, t]:
                    err = 1
                    break
            correct[i, k] = 1 - err
            any_err |= err
        net_error[i] = any_err
        if record_traj:
            traj[i, :, :] = lb

    return -1


def run_chain(loglik, truth, weights, int code, double p1, double p2,
              transition, bint record_traj):
    """Evolve all agents' beliefs over a precomputed observation stream.

    See ``_kernel_py.run_chain`` for the full parameter description.
    """
    loglik_c = np.ascontiguousarray(loglik, dtype=np.float64)
    cdef Py_ssize_t t_steps = loglik_c.shape[0]
    cdef Py_ssize_t n = loglik_c.shape[1]
    cdef Py_ssize_t m = loglik_c.shape[2]

    truth_c = np.ascontiguousarray(truth, dtype=np.int64)
    weights_c = np.ascontiguousarray(weights, dtype=np.float64)
    trans_c = np.ascontiguousarray(transition, dtype=np.float64)

    lb = np.full((n, m), -np.log(m))
    psi = np.empty((n, m))
    nxt = np.empty((n, m))
    correct = np.zeros((t_steps, n), dtype=np.uint8)
    net_error = np.zeros(t_steps, dtype=np.uint8)
    traj = np.empty((t_steps, n, m)) if record_traj else np.empty((0, n, m))

    cdef const double[:, :, ::1] loglik_v = loglik_c
    cdef const int64_t[::1] truth_v = truth_c
    cdef const double[:, ::1] weights_v = weights_c
    cdef const double[:, ::1] trans_v = trans_c
    cdef double[:, ::1] lb_v = lb
    cdef double[:, ::1] psi_v = psi
    cdef double[:, ::1] nxt_v = nxt
    cdef unsigned char[:, ::1] correct_v = correct
    cdef unsigned char[::1] net_error_v = net_error
    cdef double[:, :, ::1] traj_v = traj

    cdef int64_t bad_step
    with nogil:
        bad_step = _evolve(
            loglik_v, truth_v, weights_v, code, p1, p2, trans_v,
            record_traj, lb_v, psi_v, nxt_v, correct_v, net_error_v, traj_v,
        )
    if bad_step >= 0:
        raise NumericFailureError(f"non-finite belief at step {bad_step}", step=int(bad_step))
    return correct, net_error, lb, (traj if record_traj else None)
