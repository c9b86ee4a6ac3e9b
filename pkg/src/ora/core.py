"""Requests, actions, instance parameters and the opportunity-cost best response.

Every policy in the package chooses its action through :func:`respond`, so the
tie-breaking rule (highest ``reward - lam * consumption``, then lowest
consumption, then lowest action id) is shared by the online policies, the
advice simulator and the dual oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

_REL_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class Action:
    """One realized choice: reward (currency) and consumption (SoH units).

    ``x`` is the continuous action level for linear requests and 0 otherwise.
    """

    id: int
    reward: float
    consumption: float
    x: float = 0.0

    @property
    def is_null(self) -> bool:
        return self.id < 0


NULL_ACTION = Action(-1, 0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class FiniteMenu:
    """A finite menu of actions; ids are positions in ``actions``."""

    actions: tuple[Action, ...]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "FiniteMenu":
        return cls(tuple(Action(i, float(r), float(c)) for i, (r, c) in enumerate(pairs)))

    def pairs(self) -> list[list[float]]:
        return [[a.reward, a.consumption] for a in self.actions]

    @property
    def min_consumption(self) -> float:
        return min(a.consumption for a in self.actions)


@dataclass(frozen=True, slots=True)
class LinearThreshold:
    """Linear request ``f(x) = a*x``, ``b(x) = delta + x`` on ``[0, x_max]``."""

    a: float
    delta: float
    x_max: float = 1.0

    @property
    def min_consumption(self) -> float:
        return self.delta

    def do_nothing(self) -> Action:
        return Action(0, 0.0, self.delta, 0.0)


Request = Union[FiniteMenu, LinearThreshold]


@dataclass(frozen=True)
class InstanceParams:
    """Global constants of an instance.

    ``rho`` is derived as ``B / T``. ``lambda_max`` defaults to ``f_bar / rho``
    and ``u`` to ``f_bar / b_low`` (the density bound implied by the reward and
    consumption bounds).
    """

    B: float
    T: int
    f_bar: float
    b_bar: float
    b_low: float
    lambda_max: float | None = None
    u: float | None = None
    l: float = 0.0
    epsilon: float | None = None
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.lambda_max is None:
            object.__setattr__(self, "lambda_max", self.f_bar / self.rho)
        if self.u is None:
            object.__setattr__(self, "u", self.f_bar / self.b_low if self.b_low > 0 else math.inf)
        if not self.check:
            return
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if not self.B > 0:
            raise ValueError(f"B must be positive, got {self.B}")
        if not self.b_low > 0:
            raise ValueError("b_low must be strictly positive (calendar aging)")
        if self.b_bar < self.b_low:
            raise ValueError("b_bar must be >= b_low")
        if self.f_bar < 0:
            raise ValueError("f_bar must be nonnegative")
        if not self.lambda_max > 0:
            raise ValueError("lambda_max must be positive")
        if not 0 <= self.l <= self.u:
            raise ValueError(f"need 0 <= l <= u, got l={self.l}, u={self.u}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.T * self.b_low > self.B * (1 + _REL_TOL):
            raise ValueError(f"infeasible: T*b_low = {self.T * self.b_low} exceeds B = {self.B}")

    @property
    def rho(self) -> float:
        return self.B / self.T

    @classmethod
    def from_rho(cls, rho: float, T: int, **kw) -> "InstanceParams":
        return cls(B=rho * T, T=T, **kw)

    def with_(self, **kw) -> "InstanceParams":
        d = self.to_dict()
        d.update(kw)
        return InstanceParams(**d)

    def to_dict(self) -> dict:
        return {
            "B": self.B,
            "T": self.T,
            "f_bar": self.f_bar,
            "b_bar": self.b_bar,
            "b_low": self.b_low,
            "lambda_max": self.lambda_max,
            "u": self.u,
            "l": self.l,
            "epsilon": self.epsilon,
        }


@dataclass(frozen=True)
class Instance:
    """A request sequence with its parameters.

    ``quantum`` declares the consumption grid of menu instances; the exact
    dynamic-programming oracle needs it.
    """

    params: InstanceParams
    requests: tuple[Request, ...]
    quantum: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "requests", tuple(self.requests))
        kinds = {type(r) for r in self.requests}
        if len(kinds) > 1:
            raise ValueError("an instance must use a single request family")

    def __len__(self) -> int:
        return len(self.requests)

    @property
    def is_linear(self) -> bool:
        return bool(self.requests) and isinstance(self.requests[0], LinearThreshold)

    def linear_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(a, delta, x_max)`` as float arrays; linear instances only."""
        if not self.is_linear:
            raise TypeError("not a linear-threshold instance")
        a = np.fromiter((r.a for r in self.requests), float, len(self.requests))
        d = np.fromiter((r.delta for r in self.requests), float, len(self.requests))
        x = np.fromiter((r.x_max for r in self.requests), float, len(self.requests))
        return a, d, x

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "quantum": self.quantum,
            "requests": [request_to_json(r) for r in self.requests],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        params = InstanceParams(**d["params"])
        reqs = tuple(request_from_json(r) for r in d["requests"])
        return cls(params, reqs, d.get("quantum"))

    @classmethod
    def from_json(cls, s: str) -> "Instance":
        return cls.from_dict(json.loads(s))


def request_to_json(r: Request):
    if isinstance(r, FiniteMenu):
        return r.pairs()
    return {"a": r.a, "delta": r.delta, "x_max": r.x_max}


def request_from_json(obj) -> Request:
    if isinstance(obj, dict):
        return LinearThreshold(float(obj["a"]), float(obj["delta"]), float(obj.get("x_max", 1.0)))
    if isinstance(obj, list):
        if not obj:
            raise ValueError("empty menu")
        return FiniteMenu.from_pairs(obj)
    raise ValueError(f"unrecognized request encoding: {obj!r}")


# --------------------------------------------------------------------------
# best response


def _fit(spent: float, budget: float) -> float:
    """Largest float ``c`` with ``spent + c <= budget`` (evaluated in floating point)."""
    c = budget - spent
    while spent + c > budget:
        c = math.nextafter(c, -math.inf)
    return c


def respond(request: Request, lam: float, spent: float, budget: float) -> Action:
    """Opportunity-cost action given cumulative consumption ``spent`` out of ``budget``.

    An action is feasible when ``spent + consumption <= budget`` holds in
    floating point, so accumulating the returned consumption never overshoots
    the budget. Returns :data:`NULL_ACTION` when nothing is feasible.
    """
    if type(request) is LinearThreshold:
        delta = request.delta
        if spent + delta > budget:
            return NULL_ACTION
        a = request.a
        if a > lam:
            x = request.x_max
            c = delta + x
            if spent + c > budget:
                c = _fit(spent, budget)
                x = c - delta
                if x <= 0.0:
                    return Action(0, 0.0, delta, 0.0)
            return Action(1, a * x, c, x)
        return Action(0, 0.0, delta, 0.0)

    best = NULL_ACTION
    bv = -math.inf
    found = False
    for act in request.actions:
        c = act.consumption
        if spent + c > budget:
            continue
        v = act.reward - lam * c
        if not found or v > bv or (
            v == bv and (c < best.consumption or (c == best.consumption and act.id < best.id))
        ):
            best, bv, found = act, v, True
    return best


def best_response(request: Request, lam: float, remaining: float) -> Action:
    """Maximize ``reward - lam * consumption`` over actions with consumption <= ``remaining``.

    Ties go to the lowest consumption, then the lowest id. A linear request
    plays ``x_max`` when ``a > lam`` and ``0`` otherwise, clipped to the
    remaining budget.

    >>> menu = FiniteMenu.from_pairs([(1.0, 0.5), (0.4, 0.1)])
    >>> best_response(menu, 1.0, 10.0).reward
    1.0
    >>> best_response(menu, 3.0, 10.0).reward
    0.4
    """
    if remaining < 0 or lam < 0:
        raise ValueError("remaining and lam must be nonnegative")
    return respond(request, lam, 0.0, remaining)


def inner_max(request: Request, lam: float) -> float:
    """``max_x f(x) - lam * b(x)`` with no budget restriction."""
    if type(request) is LinearThreshold:
        return -lam * request.delta + max(0.0, (request.a - lam) * request.x_max)
    return max(a.reward - lam * a.consumption for a in request.actions)


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    kind: str
    action_id: int | None
    message: str


def _gt(a: float, b: float) -> bool:
    return a > b + _REL_TOL * max(1.0, abs(b))


def validate_request(
    request: Request, params: InstanceParams, *, check_density: bool = True
) -> list[Violation]:
    """Every bound a request breaks; an empty list means the request is valid.

    ``check_density`` toggles the reward-per-consumption band ``[l, u]``.
    """
    out: list[Violation] = []
    p = params

    def check(aid, r, c):
        if r < 0:
            out.append(Violation("negative reward", aid, f"reward {r} < 0"))
        if _gt(r, p.f_bar):
            out.append(Violation("reward cap", aid, f"reward {r} > f_bar {p.f_bar}"))
        if c < p.b_low * (1 - _REL_TOL):
            out.append(Violation("calendar aging floor", aid, f"consumption {c} < b_low {p.b_low}"))
        if _gt(c, p.b_bar):
            out.append(Violation("consumption cap", aid, f"consumption {c} > b_bar {p.b_bar}"))
        if check_density and c > 0:
            if _gt(r, p.u * c):
                out.append(Violation("density upper bound", aid, f"reward/consumption {r / c} > u {p.u}"))
            if _gt(p.l * c, r):
                out.append(Violation("density lower bound", aid, f"reward/consumption {r / c} < l {p.l}"))

    if isinstance(request, FiniteMenu):
        if not request.actions:
            return [Violation("empty menu", None, "menu has no actions")]
        for act in request.actions:
            check(act.id, act.reward, act.consumption)
        if not any(act.consumption == p.b_low for act in request.actions):
            out.append(Violation("missing do-nothing", None, f"no action consumes exactly b_low={p.b_low}"))
    else:
        if request.a < 0:
            out.append(Violation("negative reward", 1, f"coefficient a={request.a} < 0"))
        if request.x_max < 0:
            out.append(Violation("consumption cap", 1, "x_max < 0"))
        check(0, 0.0, request.delta)
        check(1, request.a * request.x_max, request.delta + request.x_max)
        if request.delta != p.b_low and request.delta >= p.b_low:
            out.append(Violation("missing do-nothing", 0, f"delta {request.delta} != b_low {p.b_low}"))
    return out


# --------------------------------------------------------------------------
# trajectories

ENDGAMES = ("", "rich", "poor", "no_advice", "times_up")


@dataclass(frozen=True)
class StepRecord:
    t: int
    lam: float
    p_bar: float
    mu: float
    action: Action
    reward: float
    consumption: float
    cum_reward: float
    cum_consumption: float
    remaining: float
    endgame: str = ""
    theta: float = math.nan


@dataclass
class Trajectory:
    """Per-round telemetry of one episode, stored column-wise.

    ``p_bar`` and ``mu`` are the values in effect at round ``t`` (NaN where a
    policy does not define them); ``final_p_bar`` and ``final_lambda`` are the
    values after the last round.
    """

    policy: str
    B: float
    lam: np.ndarray
    p_bar: np.ndarray
    mu: np.ndarray
    action_id: np.ndarray
    x: np.ndarray
    reward: np.ndarray
    consumption: np.ndarray
    cum_reward: np.ndarray
    cum_consumption: np.ndarray
    endgame: list[str] = field(default_factory=list)
    theta: np.ndarray | None = None
    final_p_bar: float = math.nan
    final_lambda: float = math.nan
    extra: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.reward)

    @property
    def T(self) -> int:
        return len(self.reward)

    @property
    def remaining(self) -> np.ndarray:
        return self.B - self.cum_consumption

    @property
    def total_reward(self) -> float:
        return float(self.cum_reward[-1]) if len(self) else 0.0

    @property
    def total_consumption(self) -> float:
        return float(self.cum_consumption[-1]) if len(self) else 0.0

    def p_bar_sequence(self) -> np.ndarray:
        """Defined rolling averages in round order, followed by the final one."""
        seq = np.append(self.p_bar, self.final_p_bar)
        return seq[~np.isnan(seq)]

    def records(self) -> Iterator[StepRecord]:
        rem = self.remaining
        th = self.theta if self.theta is not None else np.full(len(self), math.nan)
        eg = self.endgame or [""] * len(self)
        for i in range(len(self)):
            act = Action(int(self.action_id[i]), float(self.reward[i]), float(self.consumption[i]), float(self.x[i]))
            yield StepRecord(
                i + 1, float(self.lam[i]), float(self.p_bar[i]), float(self.mu[i]), act,
                act.reward, act.consumption, float(self.cum_reward[i]),
                float(self.cum_consumption[i]), float(rem[i]), eg[i], float(th[i]),
            )

    @classmethod
    def from_columns(cls, policy: str, B: float, cols: dict, **kw) -> "Trajectory":
        reward = np.asarray(cols["reward"], float)
        cons = np.asarray(cols["consumption"], float)
        return cls(
            policy=policy,
            B=B,
            lam=np.asarray(cols["lam"], float),
            p_bar=np.asarray(cols.get("p_bar", np.full(len(reward), math.nan)), float),
            mu=np.asarray(cols.get("mu", np.full(len(reward), math.nan)), float),
            action_id=np.asarray(cols["action_id"], np.int64),
            x=np.asarray(cols["x"], float),
            reward=reward,
            consumption=cons,
            cum_reward=np.cumsum(reward),
            cum_consumption=np.cumsum(cons),
            **kw,
        )

