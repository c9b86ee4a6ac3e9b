"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same arithmetic in the same order, so results match the extension bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

ROBUST, OMD, ROA, STATIC = 0, 1, 2, 3


def _fit(spent: float, budget: float) -> float:
    c = budget - spent
    while spent + c > budget:
        c = math.nextafter(c, -math.inf)
    return c


def linear_episode(a, delta, x_max, B, rho, lam1, eta, lambda_max, mode, window=0):
    T = len(a)
    a = np.asarray(a, float).tolist()
    delta = np.asarray(delta, float).tolist()
    x_max = np.asarray(x_max, float).tolist()
    lam_o = [0.0] * T
    pbar_o = [math.nan] * T
    mu_o = [math.nan] * T
    aid_o = [0] * T
    x_o = [0.0] * T
    r_o = [0.0] * T
    c_o = [0.0] * T
    ring = [0.0] * (window if window > 0 else 1)
    ring_len = ring_head = 0

    lam, p_bar, mu = float(lam1), math.nan, 0.0
    F = spent = total = 0.0
    count = 0
    for t in range(T):
        lam_o[t] = lam
        if mode == ROBUST:
            pbar_o[t] = p_bar
            mu_o[t] = mu
        d = delta[t]
        if spent + d > B:
            aid, x, r, c = -1, 0.0, 0.0, 0.0
        elif a[t] > lam:
            aid = 1
            x = x_max[t]
            c = d + x
            if spent + c > B:
                c = _fit(spent, B)
                x = c - d
                if x <= 0.0:
                    aid, x, c = 0, 0.0, d
            r = a[t] * x if aid == 1 else 0.0
        else:
            aid, x, r, c = 0, 0.0, 0.0, d
        aid_o[t] = aid
        x_o[t] = x
        r_o[t] = r
        c_o[t] = c
        F = F + r
        spent = spent + c

        if mode == ROBUST:
            p_bar = F / spent if spent > 0 else 0.0
            m = mu - eta * (rho - c)
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
        elif mode == ROA and aid >= 0:
            ratio = r / c
            total = total + ratio
            count += 1
            if window > 0:
                if ring_len == window:
                    total -= ring[ring_head]
                    if total < 0.0:  # ratios are nonnegative; this is rounding drift
                        total = 0.0
                    count -= 1
                    ring[ring_head] = ratio
                    ring_head = (ring_head + 1) % window
                else:
                    ring[(ring_head + ring_len) % window] = ratio
                    ring_len += 1
            lam = total / count

    return {
        "lam": np.array(lam_o), "p_bar": np.array(pbar_o), "mu": np.array(mu_o),
        "action_id": np.array(aid_o, dtype=np.int64), "x": np.array(x_o),
        "reward": np.array(r_o), "consumption": np.array(c_o),
        "final_p_bar": p_bar if mode == ROBUST else math.nan,
        "final_lambda": lam,
    }


def menu_dp(rewards, units, budget, want_choices=True):
    """Vectorized over the budget axis; one pass per round."""
    rewards = np.asarray(rewards, float)
    units = np.asarray(units, np.int64)
    T, M = rewards.shape
    prev = np.zeros(budget + 1)
    choice = np.full((T, budget + 1), -1, dtype=np.int16) if want_choices else None
    for t in range(T):
        cur = np.full(budget + 1, -np.inf)
        arg = np.full(budget + 1, -1, dtype=np.int16)
        for j in range(M):
            cu = int(units[t, j])
            if cu < 0 or cu > budget:
                continue
            cand = np.full(budget + 1, -np.inf)
            cand[cu:] = rewards[t, j] + prev[: budget + 1 - cu]
            better = cand > cur
            cur = np.where(better, cand, cur)
            arg[better] = j
        if want_choices:
            choice[t] = arg
        prev = cur
    return float(prev[budget]), choice
