"""Comparison policies: pure online mirror descent, average of ratios, static multiplier."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import Action, InstanceParams, Request, respond
from .robust import default_stepsize


@dataclass(frozen=True, slots=True)
class OmdState:
    lam: float
    eta: float
    cum_reward: float
    cum_consumption: float
    B: float
    rho: float
    lambda_max: float

    @property
    def remaining(self) -> float:
        return self.B - self.cum_consumption


def omd_init(params: InstanceParams, lambda_1: float, eta: float) -> OmdState:
    if lambda_1 < 0 or not eta > 0:
        raise ValueError("need lambda_1 >= 0 and eta > 0")
    return OmdState(float(lambda_1), float(eta), 0.0, 0.0, params.B, params.rho, params.lambda_max)


def omd_step(state: OmdState, request: Request) -> tuple[Action, OmdState]:
    """Projected subgradient step ``lam <- clamp(lam - eta*(rho - b), 0, lambda_max)``."""
    s = state
    act = respond(request, s.lam, s.cum_consumption, s.B)
    lam = s.lam - s.eta * (s.rho - act.consumption)
    if lam < 0.0:
        lam = 0.0
    elif lam > s.lambda_max:
        lam = s.lambda_max
    return act, OmdState(lam, s.eta, s.cum_reward + act.reward,
                         s.cum_consumption + act.consumption, s.B, s.rho, s.lambda_max)


@dataclass(frozen=True, slots=True)
class RoaState:
    """Average-of-ratios estimator over the last ``window`` non-null rounds.

    ``window=None`` averages over the whole history and keeps only the running
    sum and count.
    """

    lam: float
    window: int | None
    ratios: tuple[float, ...]
    total: float
    count: int
    cum_reward: float
    cum_consumption: float
    B: float


def roa_init(params: InstanceParams, lambda_1: float, window: int | None = None) -> RoaState:
    if lambda_1 < 0:
        raise ValueError("lambda_1 must be nonnegative")
    if window is not None and window < 1:
        raise ValueError("window must be a positive integer or None")
    return RoaState(float(lambda_1), window, (), 0.0, 0, 0.0, 0.0, params.B)


def roa_push(state: RoaState, ratio: float) -> RoaState:
    """Add one ratio and recompute the mean; the oldest drops out of a full window."""
    s = state
    total = s.total + ratio
    count = s.count + 1
    ratios = s.ratios
    if s.window is not None:
        ratios = ratios + (ratio,)
        if len(ratios) > s.window:
            total = max(total - ratios[0], 0.0)  # clamp rounding drift
            ratios = ratios[1:]
            count -= 1
    return RoaState(total / count, s.window, ratios, total, count,
                    s.cum_reward, s.cum_consumption, s.B)


def roa_step(state: RoaState, request: Request) -> tuple[Action, RoaState]:
    """Play at the current estimate, then fold in ``reward / consumption``.

    Rejected rounds contribute a ratio of 0; null rounds are skipped.
    """
    s = state
    act = respond(request, s.lam, s.cum_consumption, s.B)
    s = RoaState(s.lam, s.window, s.ratios, s.total, s.count,
                 s.cum_reward + act.reward, s.cum_consumption + act.consumption, s.B)
    if act.is_null:
        return act, s
    return act, roa_push(s, act.reward / act.consumption)


def static_policy_step(lambda_fixed: float, request: Request, remaining: float = math.inf) -> Action:
    if lambda_fixed < 0:
        raise ValueError("lambda_fixed must be nonnegative")
    return respond(request, lambda_fixed, 0.0, remaining)


# --------------------------------------------------------------------------
# stateful wrappers for the episode runner


class OmdPolicy:
    name = "omd"

    def __init__(self, lambda_1: float | None = None, eta: float | str = "auto"):
        self.lambda_1 = lambda_1
        self.eta = eta
        self.state: OmdState | None = None

    def resolved(self, params: InstanceParams) -> tuple[float, float]:
        lam1 = params.lambda_max / 2 if self.lambda_1 is None else self.lambda_1
        eta = default_stepsize(params.T) if self.eta == "auto" else float(self.eta)
        return lam1, eta

    def reset(self, params: InstanceParams) -> None:
        self.state = omd_init(params, *self.resolved(params))

    lam = property(lambda self: self.state.lam)
    p_bar = property(lambda self: math.nan)
    mu = property(lambda self: math.nan)
    cum_consumption = property(lambda self: self.state.cum_consumption)

    def step(self, request: Request) -> Action:
        act, self.state = omd_step(self.state, request)
        return act


class RoaPolicy:
    name = "roa"

    def __init__(self, lambda_1: float | None = None, window: int | None = None):
        self.lambda_1 = lambda_1
        self.window = window
        self.state: RoaState | None = None

    def resolved(self, params: InstanceParams) -> float:
        return params.lambda_max / 2 if self.lambda_1 is None else self.lambda_1

    def reset(self, params: InstanceParams) -> None:
        self.state = roa_init(params, self.resolved(params), self.window)

    lam = property(lambda self: self.state.lam)
    p_bar = property(lambda self: math.nan)
    mu = property(lambda self: math.nan)
    cum_consumption = property(lambda self: self.state.cum_consumption)

    def step(self, request: Request) -> Action:
        act, self.state = roa_step(self.state, request)
        return act


class StaticPolicy:
    """Fixed multiplier; ``StaticPolicy(0.0)`` is the greedy policy."""

    def __init__(self, lam: float = 0.0, name: str | None = None):
        if lam < 0:
            raise ValueError("lam must be nonnegative")
        self._lam = float(lam)
        self.name = name or ("greedy" if lam == 0 else "static")
        self.spent = 0.0
        self.B = math.inf

    def reset(self, params: InstanceParams) -> None:
        self.spent = 0.0
        self.B = params.B

    lam = property(lambda self: self._lam)
    p_bar = property(lambda self: math.nan)
    mu = property(lambda self: math.nan)
    cum_consumption = property(lambda self: self.spent)

    def step(self, request: Request) -> Action:
        act = respond(request, self._lam, self.spent, self.B)
        self.spent += act.consumption
        return act
