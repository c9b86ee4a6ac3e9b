"""Rolling-average opportunity cost with a projected online-gradient correction.

The multiplier is ``lam_t = p_bar_t + mu_t`` where ``p_bar_t`` is cumulative
reward over cumulative consumption and ``mu_t`` runs projected online gradient
descent on the dual, kept in ``[-p_bar_t, lambda_max - p_bar_t]`` so that
``lam_t`` stays in ``[0, lambda_max]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Action, InstanceParams, Request, Trajectory, respond


def default_stepsize(T: int) -> float:
    """``sqrt(log(T) / T)`` with the natural log.

    >>> round(default_stepsize(2000), 4)
    0.0617
    """
    if T < 2:
        raise ValueError(f"default stepsize needs T >= 2, got {T}")
    return math.sqrt(math.log(T) / T)


def rolling_increment_constant(params: InstanceParams) -> float:
    """``C_p = (f_bar / b_low) * (1 + b_bar / b_low)``; ``|p_bar_{t+1} - p_bar_t| <= C_p / t``."""
    return params.f_bar / params.b_low * (1.0 + params.b_bar / params.b_low)


@dataclass(frozen=True, slots=True)
class RobustState:
    t: int
    p_bar: float
    mu: float
    lam: float
    cum_reward: float
    cum_consumption: float
    eta: float
    B: float
    rho: float
    lambda_max: float

    @property
    def remaining(self) -> float:
        return self.B - self.cum_consumption


def robust_init(params: InstanceParams, lambda_1: float, eta: float) -> RobustState:
    if not lambda_1 > 0:
        raise ValueError(f"initial multiplier must be positive, got {lambda_1}")
    if lambda_1 > params.lambda_max:
        raise ValueError(f"initial multiplier {lambda_1} exceeds lambda_max {params.lambda_max}")
    if not eta > 0:
        raise ValueError(f"stepsize must be positive, got {eta}")
    return RobustState(0, math.nan, 0.0, float(lambda_1), 0.0, 0.0, float(eta),
                       params.B, params.rho, params.lambda_max)


def project_correction(mu: float, eta: float, g: float, p_bar: float, lambda_max: float) -> float:
    """Closed form of ``argmin_{m in [-p_bar, lambda_max - p_bar]} eta*g*m + (m - mu)^2 / 2``."""
    m = mu - eta * g
    lo = -p_bar
    hi = lambda_max - p_bar
    if m < lo:
        return lo
    if m > hi:
        return hi
    return m


def robust_step(state: RobustState, request: Request) -> tuple[Action, RobustState]:
    """Play one round and return the action with the successor state."""
    s = state
    act = respond(request, s.lam, s.cum_consumption, s.B)
    F = s.cum_reward + act.reward
    Bc = s.cum_consumption + act.consumption
    p_bar = F / Bc if Bc > 0 else 0.0
    g = s.rho - act.consumption
    mu = project_correction(s.mu, s.eta, g, p_bar, s.lambda_max)
    return act, RobustState(s.t + 1, p_bar, mu, p_bar + mu, F, Bc, s.eta, s.B, s.rho, s.lambda_max)


def path_length(seq) -> float:
    """Total variation ``sum |p_{t+1} - p_t|`` of a sequence or of a trajectory's rolling average.

    >>> path_length([1.0, 3.0, 2.0])
    3.0
    """
    if isinstance(seq, Trajectory):
        seq = seq.p_bar_sequence()
    v = np.asarray(seq, float)
    if len(v) < 2:
        return 0.0
    return float(np.abs(np.diff(v)).sum())


def rolling_average_violations(traj: Trajectory, params: InstanceParams) -> list[int]:
    """Rounds ``t`` where ``|p_bar_{t+1} - p_bar_t| > C_p / t``."""
    cp = rolling_increment_constant(params)
    seq = np.append(traj.p_bar, traj.final_p_bar)
    bad = []
    for t in range(1, len(seq)):
        a, b = seq[t - 1], seq[t]
        if math.isnan(a) or math.isnan(b):
            continue
        if abs(b - a) > cp / t * (1 + 1e-12):
            bad.append(t)
    return bad


def path_length_bound(params: InstanceParams) -> float:
    return rolling_increment_constant(params) * (math.log(params.T) + 1.0)


def dynamic_regret(traj: Trajectory, params: InstanceParams, eta: float,
                   lambda_ref: float | None = None) -> tuple[float, float]:
    """Realized dual regret of the correction against ``nu_t = lambda_ref - p_bar_t``.

    Returns ``(sum_t g_t * (mu_t - nu_t), bound)`` where the bound is
    ``5 D^2 / (2 eta) * (1 + path(nu)) + eta * T * G^2 / 2`` with
    ``D = lambda_max`` and ``G = rho + b_bar``. Round 1 is skipped because
    ``p_bar_1`` is undefined.
    """
    if lambda_ref is None:
        lambda_ref = params.f_bar / params.rho
    g = params.rho - traj.consumption
    mask = ~np.isnan(traj.p_bar)
    nu = lambda_ref - traj.p_bar[mask]
    lhs = float(np.sum(g[mask] * (traj.mu[mask] - nu)))
    D = params.lambda_max
    G = params.rho + params.b_bar
    pl = 1.0 + (float(np.abs(np.diff(nu)).sum()) if len(nu) > 1 else 0.0)
    bound = 5 * D * D / (2 * eta) * pl + eta * params.T * G * G / 2
    return lhs, bound


class RobustPolicy:
    """Stateful wrapper used by the episode runner and the learning-augmented simulator.

    ``lambda_1`` defaults to ``lambda_max / 2``; ``eta="auto"`` uses
    :func:`default_stepsize`.
    """

    name = "robust"

    def __init__(self, lambda_1: float | None = None, eta: float | str = "auto"):
        self.lambda_1 = lambda_1
        self.eta = eta
        self.state: RobustState | None = None

    def resolved(self, params: InstanceParams) -> tuple[float, float]:
        lam1 = params.lambda_max / 2 if self.lambda_1 is None else self.lambda_1
        eta = default_stepsize(params.T) if self.eta == "auto" else float(self.eta)
        return lam1, eta

    def reset(self, params: InstanceParams) -> None:
        self.state = robust_init(params, *self.resolved(params))

    @property
    def lam(self) -> float:
        return self.state.lam

    @property
    def p_bar(self) -> float:
        return self.state.p_bar

    @property
    def mu(self) -> float:
        return self.state.mu

    @property
    def cum_consumption(self) -> float:
        return self.state.cum_consumption

    def step(self, request: Request) -> Action:
        act, self.state = robust_step(self.state, request)
        return act

    def __repr__(self) -> str:
        return f"RobustPolicy(lambda_1={self.lambda_1!r}, eta={self.eta!r})"
