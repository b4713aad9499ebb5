# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled batch rollout: realized quadratic cost of many closed-loop trials."""

import numpy as np


def rollout_costs(const double[:, ::1] a_bar,
                  const double[:, :, ::1] bases,
                  const double[:, ::1] b,
                  const double[:, :, ::1] k_bar,
                  const double[:, :, :, ::1] corr,
                  const double[:, :, ::1] q,
                  const double[:, ::1] r,
                  const double[::1] x0,
                  const double[:, :, ::1] alphas):
    cdef Py_ssize_t trials = alphas.shape[0]
    cdef Py_ssize_t horizon = alphas.shape[1]
    cdef Py_ssize_t nterms = alphas.shape[2]
    cdef Py_ssize_t n = a_bar.shape[0]
    cdef Py_ssize_t m = b.shape[1]
    cdef Py_ssize_t tr, k, s, i, j
    cdef double acc, tmp, al

    out = np.empty(trials)
    cdef double[::1] out_v = out
    cdef double[::1] x = np.empty(n)
    cdef double[::1] xn = np.empty(n)
    cdef double[::1] u = np.empty(m)

    with nogil:
        for tr in range(trials):
            for i in range(n):
                x[i] = x0[i]
            acc = 0.0
            for k in range(horizon):
                # u = (K_bar + sum_s alpha_s C_s) x
                for i in range(m):
                    tmp = 0.0
                    for j in range(n):
                        tmp = tmp + k_bar[k, i, j] * x[j]
                    for s in range(nterms):
                        al = alphas[tr, k, s]
                        if al != 0.0:
                            for j in range(n):
                                tmp = tmp + al * corr[k, s, i, j] * x[j]
                    u[i] = tmp
                for i in range(n):
                    tmp = 0.0
                    for j in range(n):
                        tmp = tmp + q[k, i, j] * x[j]
                    acc = acc + x[i] * tmp
                for i in range(m):
                    tmp = 0.0
                    for j in range(m):
                        tmp = tmp + r[i, j] * u[j]
                    acc = acc + u[i] * tmp
                # x+ = (A_bar + sum_s alpha_s D_s) x + B u
                for i in range(n):
                    tmp = 0.0
                    for j in range(n):
                        tmp = tmp + a_bar[i, j] * x[j]
                    for s in range(nterms):
                        al = alphas[tr, k, s]
                        if al != 0.0:
                            for j in range(n):
                                tmp = tmp + al * bases[s, i, j] * x[j]
                    for j in range(m):
                        tmp = tmp + b[i, j] * u[j]
                    xn[i] = tmp
                for i in range(n):
                    x[i] = xn[i]
            for i in range(n):
                tmp = 0.0
                for j in range(n):
                    tmp = tmp + q[horizon, i, j] * x[j]
                acc = acc + x[i] * tmp
            out_v[tr] = acc
    return out
