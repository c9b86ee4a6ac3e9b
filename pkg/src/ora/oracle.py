"""Offline optimum, Lagrangian dual and the best static multiplier.

Every round must take one of its real actions in the offline problem (the
null action only exists online, after depletion). Linear instances are solved
by the fractional greedy fill, finite menus by an exact knapsack DP on the
declared consumption quantum, and short quantum-free menus by exhaustive
enumeration.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import Action, FiniteMenu, Instance, inner_max

GOLDEN_TOL = 1e-6
BRUTE_FORCE_MAX_T = 12
# Above this many DP cells the choice table is not kept and only the value is returned.
MAX_CHOICE_CELLS = 50_000_000
_GRID_TOL = 1e-9


class GridMismatch(ValueError):
    """A finite-menu consumption is not an integer multiple of the declared quantum."""


@dataclass
class OfflineSolution:
    value: float
    actions: list[Action] | None
    dual_gap: float = math.nan
    lambda_star: float = math.nan
    method: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def consumption(self) -> float:
        if self.actions is None:
            return math.nan
        return math.fsum(a.consumption for a in self.actions)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "dual_gap": self.dual_gap,
            "lambda_star": self.lambda_star,
            "method": self.method,
            "actions": None if self.actions is None else [
                {"id": a.id, "reward": a.reward, "consumption": a.consumption, "x": a.x}
                for a in self.actions
            ],
        }


# --------------------------------------------------------------------------
# dual


def _menu_arrays(instance: Instance) -> tuple[np.ndarray, np.ndarray]:
    """Rewards and consumptions padded to a rectangle; padding has reward -inf."""
    M = max(len(r.actions) for r in instance.requests)
    T = len(instance.requests)
    R = np.full((T, M), -np.inf)
    C = np.zeros((T, M))
    for t, req in enumerate(instance.requests):
        for j, a in enumerate(req.actions):
            R[t, j] = a.reward
            C[t, j] = a.consumption
    return R, C


def dual_value(lam: float, instance: Instance) -> float:
    """``sum_t max_x (f_t(x) - lam * b_t(x)) + lam * B``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    B = instance.params.B
    if instance.is_linear:
        a, d, xm = instance.linear_arrays()
        return float(np.sum(-lam * d + np.maximum(0.0, (a - lam) * xm)) + lam * B)
    if len(instance.requests) <= 64:
        return math.fsum(inner_max(r, lam) for r in instance.requests) + lam * B
    R, C = _menu_arrays(instance)
    return float(np.max(R - lam * C, axis=1).sum() + lam * B)


def optimal_multiplier(instance: Instance, tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Golden-section minimization of the dual over ``[0, lambda_max]``.

    The endpoints are compared against the interior result so that a minimizer
    sitting exactly on the boundary (for example ``0`` when greedy is feasible)
    is returned exactly.
    """
    lo, hi = 0.0, float(instance.params.lambda_max)
    D = lambda x: dual_value(x, instance)  # noqa: E731
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = D(c), D(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = D(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = D(d)
    best = (a + b) / 2
    fbest = D(best)
    for x in (lo, hi):
        fx = D(x)
        if fx <= fbest:
            best, fbest = x, fx
    return best, fbest


# --------------------------------------------------------------------------
# primal


def _solve_linear(instance: Instance) -> OfflineSolution:
    a, d, xm = instance.linear_arrays()
    room = instance.params.B - math.fsum(d)
    if room < -1e-9 * instance.params.B:
        raise ValueError("infeasible: calendar aging alone exceeds the budget")
    room = max(room, 0.0)
    x = np.zeros(len(a))
    order = np.argsort(-a, kind="stable")
    for t in order:
        if a[t] <= 0 or room <= 0:
            break
        take = min(xm[t], room)
        x[t] = take
        room -= take
    value = math.fsum(a * x)
    acts = [Action(1, float(a[t] * x[t]), float(d[t] + x[t]), float(x[t])) if x[t] > 0
            else Action(0, 0.0, float(d[t]), 0.0) for t in range(len(a))]
    return OfflineSolution(value, acts, method="fractional")


def _units(instance: Instance) -> tuple[np.ndarray, np.ndarray, int, int]:
    q = instance.quantum
    R, C = _menu_arrays(instance)
    U = np.full(C.shape, -1, dtype=np.int64)
    for t, req in enumerate(instance.requests):
        for j, act in enumerate(req.actions):
            k = act.consumption / q
            r = round(k)
            if abs(k - r) > _GRID_TOL * max(1.0, abs(k)):
                raise GridMismatch(
                    f"grid mismatch: round {t} action {j} consumption {act.consumption} "
                    f"is not a multiple of {q}"
                )
            U[t, j] = r
    R[U < 0] = 0.0
    budget_units = math.floor(instance.params.B / q + _GRID_TOL)
    return R, U, budget_units, int(U[U >= 0].min())


def _solve_dp(instance: Instance, want_actions: bool | None = None) -> OfflineSolution:
    R, U, Bu, _ = _units(instance)
    T = len(instance.requests)
    # every round consumes at least its own floor; shift it out to shrink the table
    floors = np.where(U >= 0, U, np.iinfo(np.int64).max).min(axis=1)
    shifted = np.where(U >= 0, U - floors[:, None], -1)
    cap = Bu - int(floors.sum())
    if cap < 0:
        raise ValueError("infeasible: calendar aging alone exceeds the budget")
    if want_actions is None:
        want_actions = T * (cap + 1) <= MAX_CHOICE_CELLS
    value, choice = kernels.menu_dp(np.ascontiguousarray(R), np.ascontiguousarray(shifted), cap,
                                    bool(want_actions))
    acts = None
    if want_actions:
        acts = []
        u = cap
        picks = []
        for t in range(T - 1, -1, -1):
            j = int(choice[t, u])
            picks.append(j)
            u -= int(shifted[t, j])
        picks.reverse()
        acts = [instance.requests[t].actions[j] for t, j in enumerate(picks)]
        # correctly rounded total of the chosen rewards, independent of DP summation order
        value = math.fsum(a.reward for a in acts)
    return OfflineSolution(float(value), acts, method="dp")


def _half_table(menus: list[FiniteMenu]):
    combos = list(itertools.product(*[range(len(m.actions)) for m in menus]))
    rew = np.array([math.fsum(menus[t].actions[j].reward for t, j in enumerate(c)) for c in combos])
    con = np.array([math.fsum(menus[t].actions[j].consumption for t, j in enumerate(c)) for c in combos])
    return combos, rew, con


def brute_force(instance: Instance, slack: float = 1e-9) -> OfflineSolution:
    """Exhaustive search over every joint choice, split in two halves.

    Each half is enumerated in full; for every left combination the best right
    combination fitting the leftover budget is read from a prefix maximum, so
    all ``prod |menu_t|`` joint choices are covered.
    """
    menus = list(instance.requests)
    if any(type(r) is not FiniteMenu for r in menus):
        raise TypeError("brute force needs finite menus")
    B = instance.params.B
    h = len(menus) // 2
    lc, lr, lcon = _half_table(menus[:h])
    rc, rr, rcon = _half_table(menus[h:])
    order = np.argsort(rcon, kind="stable")
    rcon_s, rr_s = rcon[order], rr[order]
    pm = np.maximum.accumulate(rr_s)
    arg = np.zeros(len(pm), dtype=np.int64)
    for i in range(1, len(pm)):
        arg[i] = i if rr_s[i] > pm[i - 1] else arg[i - 1]
    best, best_pair = -math.inf, None
    for i in range(len(lc)):
        k = int(np.searchsorted(rcon_s, B + slack - lcon[i], side="right")) - 1
        if k < 0:
            continue
        v = lr[i] + pm[k]
        if v > best:
            best, best_pair = v, (i, int(order[arg[k]]))
    if best_pair is None:
        raise ValueError("infeasible: no joint choice fits the budget")
    picks = list(lc[best_pair[0]]) + list(rc[best_pair[1]])
    acts = [menus[t].actions[j] for t, j in enumerate(picks)]
    return OfflineSolution(math.fsum(a.reward for a in acts), acts, method="brute_force")


def solve_opt(instance: Instance, *, with_dual: bool = True, want_actions: bool | None = None) -> OfflineSolution:
    """Exact offline optimum.

    Linear instances use the fractional fill; menu instances use the DP when
    a quantum is declared, otherwise brute force for ``T <= 12``.
    """
    p = instance.params
    if p.T * p.b_low > p.B * (1 + 1e-12):
        raise ValueError(f"infeasible: T*b_low = {p.T * p.b_low} exceeds B = {p.B}")
    if instance.is_linear:
        sol = _solve_linear(instance)
    elif instance.quantum is not None:
        sol = _solve_dp(instance, want_actions)
    elif len(instance.requests) <= BRUTE_FORCE_MAX_T:
        sol = brute_force(instance)
    else:
        raise ValueError("finite-menu instances with T > 12 need a declared consumption quantum")
    if with_dual:
        lam, d = optimal_multiplier(instance)
        sol.lambda_star = lam
        sol.dual_gap = d - sol.value
    return sol


__all__ = [
    "OfflineSolution", "GridMismatch", "solve_opt", "dual_value", "optimal_multiplier",
    "brute_force",
]
