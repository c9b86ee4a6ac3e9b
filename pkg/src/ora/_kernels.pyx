# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled episode and knapsack kernels.

Must stay bit-for-bit identical to ``_kernels_py``; do not build with
fast-math flags.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport nextafter, INFINITY, NAN

cnp.import_array()

cdef enum:
    ROBUST = 0
    OMD = 1
    ROA = 2
    STATIC = 3


cdef inline double _fit(double spent, double budget) noexcept nogil:
    cdef double c = budget - spent
    while spent + c > budget:
        c = nextafter(c, -INFINITY)
    return c


def linear_episode(double[::1] a, double[::1] delta, double[::1] x_max,
                   double B, double rho, double lam1, double eta, double lambda_max,
                   int mode, long window=0):
    cdef Py_ssize_t T = a.shape[0]
    cdef Py_ssize_t t
    lam_o = np.empty(T)
    pbar_o = np.full(T, np.nan)
    mu_o = np.full(T, np.nan)
    aid_o = np.empty(T, dtype=np.int64)
    x_o = np.empty(T)
    r_o = np.empty(T)
    c_o = np.empty(T)
    cdef double[::1] lam_v = lam_o, pbar_v = pbar_o, mu_v = mu_o, x_v = x_o, r_v = r_o, c_v = c_o
    cdef long long[::1] aid_v = aid_o

    ring_o = np.zeros(window if window > 0 else 1)
    cdef double[::1] ring = ring_o
    cdef Py_ssize_t ring_len = 0, ring_head = 0

    cdef double lam = lam1, p_bar = NAN, mu = 0.0
    cdef double F = 0.0, spent = 0.0
    cdef double d, xm, x, c, r, g, m, lo, hi, total = 0.0, ratio
    cdef long count = 0
    cdef long long aid

    with nogil:
        for t in range(T):
            lam_v[t] = lam
            if mode == ROBUST:
                pbar_v[t] = p_bar
                mu_v[t] = mu
            d = delta[t]
            if spent + d > B:
                aid = -1
                x = 0.0
                r = 0.0
                c = 0.0
            elif a[t] > lam:
                aid = 1
                xm = x_max[t]
                x = xm
                c = d + x
                if spent + c > B:
                    c = _fit(spent, B)
                    x = c - d
                    if x <= 0.0:
                        aid = 0
                        x = 0.0
                        c = d
                r = a[t] * x if aid == 1 else 0.0
            else:
                aid = 0
                x = 0.0
                r = 0.0
                c = d
            aid_v[t] = aid
            x_v[t] = x
            r_v[t] = r
            c_v[t] = c
            F = F + r
            spent = spent + c

            if mode == ROBUST:
                p_bar = F / spent if spent > 0 else 0.0
                g = rho - c
                m = mu - eta * g
                lo = -p_bar
                hi = lambda_max - p_bar
                if m < lo:
                    m = lo
                elif m > hi:
                    m = hi
                mu = m
                lam = p_bar + mu
            elif mode == OMD:
                lam = lam - eta * (rho - c)
                if lam < 0.0:
                    lam = 0.0
                elif lam > lambda_max:
                    lam = lambda_max
            elif mode == ROA:
                if aid >= 0:
                    ratio = r / c
                    total = total + ratio
                    count += 1
                    if window > 0:
                        if ring_len == window:
                            total -= ring[ring_head]
                            if total < 0.0:
                                total = 0.0
                            count -= 1
                            ring[ring_head] = ratio
                            ring_head = (ring_head + 1) % window
                        else:
                            ring[(ring_head + ring_len) % window] = ratio
                            ring_len += 1
                    lam = total / count

    return {
        "lam": lam_o, "p_bar": pbar_o, "mu": mu_o, "action_id": aid_o,
        "x": x_o, "reward": r_o, "consumption": c_o,
        "final_p_bar": p_bar if mode == ROBUST else float("nan"),
        "final_lambda": lam,
    }


def menu_dp(double[:, ::1] rewards, long long[:, ::1] units, long long budget, bint want_choices=True):
    """Max total reward choosing one action per row with total units <= budget.

    Padding entries carry ``units < 0``. Returns ``(value, choices)``; value is
    ``-inf`` when no feasible selection exists.
    """
    cdef Py_ssize_t T = rewards.shape[0], M = rewards.shape[1]
    cdef Py_ssize_t t, j, u, cu
    prev_o = np.zeros(budget + 1)
    cur_o = np.empty(budget + 1)
    cdef double[::1] prev = prev_o, cur = cur_o, tmp
    cdef double best, v
    cdef short bj
    cdef object shape
    shape = (1, 1)
    if want_choices:
        shape = (T, budget + 1)
    choice_o = np.full(shape, -1, dtype=np.int16)
    cdef short[:, ::1] choice = choice_o
    with nogil:
        for t in range(T):
            for u in range(budget + 1):
                best = -INFINITY
                bj = -1
                for j in range(M):
                    cu = units[t, j]
                    if cu < 0 or cu > u:
                        continue
                    v = rewards[t, j] + prev[u - cu]
                    if v > best:
                        best = v
                        bj = <short>j
                cur[u] = best
                if want_choices:
                    choice[t, u] = bj
            tmp = prev
            prev = cur
            cur = tmp
    value = prev[budget]
    return value, (choice_o if want_choices else None)
