"""Learning-augmented allocation: follow a robust policy as far as consistency allows.

Three ledgers run side by side: the algorithm itself (ALG), an independent
simulation of the advice (ADV) and an independent simulation of the robust
policy (ROB). Each round the algorithm looks for the largest weight ``theta``
such that the blended multiplier ``theta * lam_rob + (1 - theta) * lam_adv``
keeps three consistency constraints satisfied after the action is taken:

* ``time``:  if ``Bbar <= Tbar * b_bar``:
  ``(1+eps) F + eps * l * (Bbar - b_bar + b_low) >= F_adv``
* ``rich``:  if ``Bbar > Tbar * b_bar``:
  ``(1+eps) F + eps * l * b_bar * Tbar >= F_adv``
* ``lead``:  if ``beta > 0``:
  ``(1+eps) F + eps * l * Bbar >= F_adv + u * (min(b_bar, Bbar) + beta)``

The names double as keys in reports and necessity constructions. Once an endgame condition holds
the algorithm plays greedily (``lam = 0``) for the rest of the horizon.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import OmdPolicy, RoaPolicy, StaticPolicy
from .core import (
    Action,
    FiniteMenu,
    Instance,
    InstanceParams,
    LinearThreshold,
    Request,
    respond,
)
from .robust import RobustPolicy

CONSTRAINTS = ("time", "rich", "lead")
THETA_TOL = 1e-6
THETA_MAX_ITER = 60
_SLACK = 1e-12


class InvariantViolation(RuntimeError):
    """An internal guarantee failed; this signals an accounting bug."""


class NothingToFalsify(ValueError):
    """The prefix already satisfies the constraint the adversary was asked to exploit."""


# --------------------------------------------------------------------------
# advice and robust simulators


class SequencePolicy:
    """Plays a precomputed multiplier sequence through the shared best response."""

    name = "sequence"

    def __init__(self, lambdas: Sequence[float], name: str | None = None):
        lam = np.asarray(lambdas, float)
        if lam.ndim != 1 or np.any(lam < 0) or np.any(np.isnan(lam)):
            raise ValueError("multiplier sequence must be a 1-d array of nonnegative numbers")
        self.lambdas = lam
        if name:
            self.name = name
        self.t = 0
        self.spent = 0.0
        self.B = math.inf

    def reset(self, params: InstanceParams) -> None:
        if len(self.lambdas) < params.T:
            raise ValueError(f"sequence has {len(self.lambdas)} entries, horizon is {params.T}")
        self.t = 0
        self.spent = 0.0
        self.B = params.B

    @property
    def lam(self) -> float:
        # after the horizon the last entry stays current (read for the terminal multiplier)
        return float(self.lambdas[min(self.t, len(self.lambdas) - 1)])

    p_bar = property(lambda self: math.nan)
    mu = property(lambda self: math.nan)
    cum_consumption = property(lambda self: self.spent)

    def step(self, request: Request) -> Action:
        act = respond(request, float(self.lambdas[self.t]), self.spent, self.B)
        self.spent += act.consumption
        self.t += 1
        return act


def make_policy(spec, params: InstanceParams | None = None):
    """Build a policy object from a name, a dict ``{"policy": name, ...}`` or a list of multipliers.

    Names: ``robust``, ``omd``, ``roa``, ``greedy``, ``static`` (key ``lam``),
    ``constant`` (alias of ``static``), ``hoarder`` (static at ``lambda_max``).
    """
    if isinstance(spec, (list, tuple, np.ndarray)):
        return SequencePolicy(spec)
    if isinstance(spec, str):
        spec = {"policy": spec}
    spec = dict(spec)
    kind = spec.pop("policy")
    if kind == "robust":
        return RobustPolicy(spec.get("lambda_1"), spec.get("eta", "auto"))
    if kind == "omd":
        return OmdPolicy(spec.get("lambda_1"), spec.get("eta", "auto"))
    if kind == "roa":
        return RoaPolicy(spec.get("lambda_1"), spec.get("window"))
    if kind == "greedy":
        return StaticPolicy(0.0)
    if kind in ("static", "constant"):
        return StaticPolicy(float(spec.get("lam", 0.0)))
    if kind == "hoarder":
        if params is None:
            raise ValueError("hoarder needs instance parameters for lambda_max")
        return StaticPolicy(params.lambda_max, name="hoarder")
    if kind == "sequence":
        return SequencePolicy(spec["lambdas"])
    raise ValueError(f"unknown policy {kind!r}")


def load_advice(source, params: InstanceParams | None = None):
    """Advice from a JSON file path, a JSON string, a list of multipliers or a policy spec."""
    if isinstance(source, (str, Path)) and Path(source).exists():
        source = json.loads(Path(source).read_text())
    elif isinstance(source, str) and source.lstrip().startswith(("[", "{")):
        source = json.loads(source)
    pol = make_policy(source, params)
    if isinstance(pol, SequencePolicy) and params is not None and len(pol.lambdas) != params.T:
        raise ValueError(f"advice sequence length {len(pol.lambdas)} != T = {params.T}")
    return pol


# --------------------------------------------------------------------------
# state and constraints


@dataclass(frozen=True, slots=True)
class LaState:
    """Ledgers after ``t`` rounds.

    ``lambda_rob_frozen`` is set once the simulated robust policy runs out of
    budget and holds the multiplier it used in that round.
    """

    t: int
    T: int
    B: float
    F: float = 0.0
    spent: float = 0.0
    F_adv: float = 0.0
    spent_adv: float = 0.0
    endgame: str = ""
    lambda_rob_frozen: float | None = None

    @property
    def remaining(self) -> float:
        return self.B - self.spent

    @property
    def remaining_adv(self) -> float:
        return self.B - self.spent_adv

    @property
    def beta(self) -> float:
        return self.spent - self.spent_adv

    @property
    def rounds_left(self) -> int:
        return self.T - self.t


def la_init(params: InstanceParams) -> LaState:
    return LaState(0, params.T, params.B)


def check_endgame(state: LaState, params: InstanceParams, t: int | None = None) -> str:
    """Endgame tag at the start of round ``t`` (default ``state.t + 1``); ``""`` if none.

    Tags are absorbing: a state already in an endgame keeps its tag.

    >>> p = InstanceParams(B=10.0, T=10, f_bar=2.0, b_bar=2.0, b_low=0.1)
    >>> check_endgame(LaState(8, 10, 10.0, spent=5.0), p)
    'rich'
    """
    if state.endgame:
        return state.endgame
    if t is None:
        t = state.t + 1
    rem = state.remaining
    if rem > (state.T - (t - 1)) * params.b_bar:
        return "rich"
    if rem <= params.b_bar and state.beta > 0:
        return "poor"
    # the advice can no longer act once its remainder is below the calendar-aging floor
    if state.remaining_adv < params.b_low:
        return "no_advice"
    if t >= state.T:
        return "times_up"
    return ""


def _geq(lhs: float, rhs: float) -> bool:
    return lhs >= rhs - _SLACK * max(1.0, abs(lhs), abs(rhs))


def constraint_report(F: float, remaining: float, rounds_left: int, beta: float, F_adv: float,
                      params: InstanceParams, epsilon: float) -> dict[str, bool]:
    """Truth value of each implication (an inactive premise counts as satisfied)."""
    p = params
    e = epsilon
    lhs = (1.0 + e) * F
    out = {"time": True, "rich": True, "lead": True}
    if remaining <= rounds_left * p.b_bar:
        out["time"] = _geq(lhs + e * p.l * (remaining - p.b_bar + p.b_low), F_adv)
    else:
        out["rich"] = _geq(lhs + e * p.l * p.b_bar * rounds_left, F_adv)
    if beta > 0:
        out["lead"] = _geq(lhs + e * p.l * remaining, F_adv + p.u * (min(p.b_bar, remaining) + beta))
    return out


def constraints_ok(F: float, remaining: float, rounds_left: int, beta: float, F_adv: float,
                   params: InstanceParams, epsilon: float, ignore: frozenset = frozenset()) -> bool:
    """Conjunction of the three consistency implications on a post-action state.

    >>> p = InstanceParams(B=10.0, T=10, f_bar=2.0, b_bar=1.0, b_low=0.1, u=2.0, l=0.5)
    >>> constraints_ok(10.0, 3.0, 5, 0.0, 10.5, p, 0.1)
    True
    """
    rep = constraint_report(F, remaining, rounds_left, beta, F_adv, params, epsilon)
    return all(v for k, v in rep.items() if k not in ignore)


def state_report(state: LaState, params: InstanceParams, epsilon: float) -> dict[str, bool]:
    return constraint_report(state.F, state.remaining, state.rounds_left, state.beta,
                             state.F_adv, params, epsilon)


# --------------------------------------------------------------------------
# theta search


def _menu_breakpoints(menu: FiniteMenu, lam_rob: float, lam_adv: float) -> list[float]:
    """Weights in (0, 1) at which the best response to the blended multiplier can change."""
    d = lam_rob - lam_adv
    if d == 0:
        return []
    acts = menu.actions
    out = set()
    for i in range(len(acts)):
        fi, ci = acts[i].reward, acts[i].consumption
        for j in range(i + 1, len(acts)):
            cj = acts[j].consumption
            if ci == cj:
                continue
            lam_ij = (fi - acts[j].reward) / (ci - cj)
            th = (lam_ij - lam_adv) / d
            if 0.0 < th < 1.0:
                out.add(th)
    return sorted(out, reverse=True)


def select_theta(request: Request, state: LaState, lam_rob: float, lam_adv: float,
                 params: InstanceParams, epsilon: float, adv_action: Action,
                 ignore: frozenset = frozenset()) -> tuple[float, Action]:
    """Largest feasible weight and the action it induces.

    ``state`` is the ledger before the round; ``adv_action`` is what the
    advice simulation plays this round. The weight 0 plays ``adv_action``
    itself. Finite menus are searched exactly over the breakpoint set (the
    reported weight inside an open interval is its midpoint, and every weight
    in that interval induces the same action); linear requests use bisection.
    """
    t = state.t + 1
    rounds_left = state.T - t
    F_adv = state.F_adv + adv_action.reward
    spent_adv = state.spent_adv + adv_action.consumption
    B = state.B
    spent = state.spent

    def ok(act: Action) -> bool:
        s = spent + act.consumption
        return constraints_ok(state.F + act.reward, B - s, rounds_left, s - spent_adv, F_adv,
                              params, epsilon, ignore)

    def act_at(theta: float) -> Action:
        lam = theta * lam_rob + (1.0 - theta) * lam_adv
        return respond(request, lam, spent, B)

    a1 = act_at(1.0)
    if ok(a1):
        return 1.0, a1

    if type(request) is LinearThreshold:
        lo, hi = 0.0, 1.0
        best = None
        for _ in range(THETA_MAX_ITER):
            if hi - lo <= THETA_TOL:
                break
            mid = 0.5 * (lo + hi)
            a = act_at(mid)
            if ok(a):
                lo, best = mid, a
            else:
                hi = mid
        if best is not None:
            return lo, best
    else:
        bps = _menu_breakpoints(request, lam_rob, lam_adv)
        edges = [1.0] + bps + [0.0]
        for k in range(1, len(edges)):
            upper, lower = edges[k - 1], edges[k]
            for th in ((upper + lower) / 2, lower) if lower > 0 else ((upper + lower) / 2,):
                a = act_at(th)
                if ok(a):
                    return th, a

    if ok(adv_action):
        return 0.0, adv_action
    raise InvariantViolation(
        f"round {t}: following the advice violates the consistency constraints"
    )


# --------------------------------------------------------------------------
# one round and the policy wrapper


@dataclass(frozen=True, slots=True)
class LaRound:
    action: Action
    lam: float
    theta: float
    endgame: str
    lam_rob: float
    lam_adv: float
    adv_action: Action
    theta0_ok: bool | None


def la_step(state: LaState, request: Request, rob, adv, params: InstanceParams, epsilon: float,
            *, enforce: bool = True, ignore: frozenset = frozenset(),
            theta_override: float | None = None, check_recursive: bool = True
            ) -> tuple[LaRound, LaState]:
    """Advance ADV and ROB on ``request``, pick the weight, play, update ledgers.

    ``rob`` and ``adv`` are policy objects that are stepped in place.
    ``enforce=False`` gives the constraint-ignoring variant (weight 1 outside
    endgames). ``theta_override`` fixes the weight in every round, endgames
    included, for diagnostics.
    """
    t = state.t + 1
    eg = check_endgame(state, params, t)

    lam_adv = adv.lam
    adv_act = adv.step(request)

    frozen = state.lambda_rob_frozen
    if frozen is None:
        lam_rob = rob.lam
        rob.step(request)
        if params.B - rob.cum_consumption < params.b_low:
            frozen = lam_rob
    else:
        lam_rob = frozen

    theta0_ok = None
    if theta_override is not None:
        theta = float(theta_override)
        if theta == 0.0:
            act, lam = adv_act, lam_adv
        else:
            lam = theta * lam_rob + (1.0 - theta) * lam_adv
            act = respond(request, lam, state.spent, state.B)
    elif eg:
        theta, lam = math.nan, 0.0
        act = respond(request, 0.0, state.spent, state.B)
    elif enforce:
        if check_recursive:
            s = state.spent + adv_act.consumption
            theta0_ok = constraints_ok(
                state.F + adv_act.reward, state.B - s, state.T - t,
                s - (state.spent_adv + adv_act.consumption), state.F_adv + adv_act.reward,
                params, epsilon)
            if not theta0_ok or adv_act.is_null:
                raise InvariantViolation(
                    f"round {t}: recursive feasibility failed (advice action not admissible)")
        theta, act = select_theta(request, state, lam_rob, lam_adv, params, epsilon, adv_act, ignore)
        lam = lam_adv if theta == 0.0 else theta * lam_rob + (1.0 - theta) * lam_adv
    else:
        theta, lam = 1.0, lam_rob
        act = respond(request, lam_rob, state.spent, state.B)

    new = LaState(
        t, state.T, state.B,
        state.F + act.reward, state.spent + act.consumption,
        state.F_adv + adv_act.reward, state.spent_adv + adv_act.consumption,
        eg, frozen,
    )
    return LaRound(act, lam, theta, eg, lam_rob, lam_adv, adv_act, theta0_ok), new


class LearningAugmentedPolicy:
    """Episode-runner wrapper holding the three ledgers.

    ``rob`` and ``advice`` accept anything :func:`make_policy` understands or a
    policy object; fresh copies are built on every :meth:`reset`.
    """

    name = "learning_augmented"

    def __init__(self, advice, rob="robust", epsilon: float | None = None, *,
                 enforce: bool = True, theta_override: float | None = None,
                 check_recursive: bool = True):
        self.advice_spec = advice
        self.rob_spec = rob
        self.epsilon = epsilon
        self.enforce = enforce
        self.theta_override = theta_override
        self.check_recursive = check_recursive
        if not enforce:
            self.name = "learning_augmented_unconstrained"

    @staticmethod
    def _build(spec, params):
        if hasattr(spec, "step") and hasattr(spec, "reset"):
            return copy.deepcopy(spec)
        return load_advice(spec, params)

    def reset(self, params: InstanceParams) -> None:
        eps = self.epsilon if self.epsilon is not None else params.epsilon
        if eps is None or not eps > 0:
            raise ValueError("learning-augmented policy needs epsilon > 0")
        self.eps = float(eps)
        self.params = params
        self.rob = self._build(self.rob_spec, params)
        self.adv = self._build(self.advice_spec, params)
        self.rob.reset(params)
        self.adv.reset(params)
        self.state = la_init(params)
        self.last: LaRound | None = None
        self.theta0_failures = 0
        self.theta0_checks = 0

    @property
    def lam(self) -> float:
        return math.nan if self.last is None else self.last.lam

    p_bar = property(lambda self: math.nan)
    mu = property(lambda self: math.nan)
    cum_consumption = property(lambda self: self.state.spent)

    @property
    def last_info(self) -> dict:
        r = self.last
        return {"lam": r.lam, "theta": r.theta, "endgame": r.endgame,
                "adv_reward": r.adv_action.reward, "adv_consumption": r.adv_action.consumption,
                "lam_rob": r.lam_rob, "lam_adv": r.lam_adv}

    def step(self, request: Request) -> Action:
        self.last, self.state = la_step(
            self.state, request, self.rob, self.adv, self.params, self.eps,
            enforce=self.enforce, theta_override=self.theta_override,
            check_recursive=self.check_recursive)
        if self.last.theta0_ok is not None:
            self.theta0_checks += 1
        return self.last.action

    def consistency_margin(self) -> float:
        return (1.0 + self.eps) * self.state.F - self.state.F_adv


def run_la(instance: Instance, advice, rob="robust", epsilon: float | None = None, **kw):
    """Run a whole episode; returns the final :class:`LaState` and the per-round log."""
    pol = LearningAugmentedPolicy(advice, rob, epsilon, **kw)
    pol.reset(instance.params)
    log = []
    for req in instance.requests:
        pol.step(req)
        log.append(pol.last)
    return pol.state, log, pol


# --------------------------------------------------------------------------
# necessity constructions


def min_density_menu(params: InstanceParams) -> FiniteMenu:
    p = params
    return FiniteMenu.from_pairs([(p.l * p.b_low, p.b_low), (p.l * p.b_bar, p.b_bar)])


def max_density_menu(params: InstanceParams) -> FiniteMenu:
    p = params
    return FiniteMenu.from_pairs([(p.l * p.b_low, p.b_low), (p.u * p.b_bar, p.b_bar)])


def forcing_menu(params: InstanceParams) -> FiniteMenu:
    """A single admissible action: consume exactly ``b_low`` at density ``l``."""
    return FiniteMenu.from_pairs([(params.l * params.b_low, params.b_low)])


def _replay(params, requests, advice, rob, epsilon, enforce):
    pol = LearningAugmentedPolicy(advice, rob, epsilon, enforce=enforce, check_recursive=False)
    pol.reset(params)
    for r in requests:
        pol.step(r)
    return pol


def necessity_adversary(prefix: Sequence[Request], constraint: str, params: InstanceParams, *,
                        advice, rob, epsilon: float | None = None) -> list[Request]:
    """Suffix that turns a constraint violation after ``prefix`` into an inconsistency.

    The constraint-ignoring variant is replayed on ``prefix``; the requested
    constraint must be violated on the resulting state. Suffixes:

    * ``lead``: minimum-density menus until the variant runs dry, maximum-density after;
    * ``rich``: minimum-density menus throughout;
    * ``time``: one forcing round (only ``b_low`` at density ``l``), then minimum-density.
    """
    if constraint not in CONSTRAINTS:
        raise ValueError(f"constraint must be one of {CONSTRAINTS}")
    eps = params.epsilon if epsilon is None else epsilon
    pol = _replay(params, prefix, advice, rob, eps, enforce=False)
    rep = state_report(pol.state, params, eps)
    if rep[constraint]:
        raise NothingToFalsify(f"nothing to falsify: constraint {constraint} holds after the prefix")
    n = params.T - len(prefix)
    if n < 0:
        raise ValueError("prefix longer than the horizon")
    low = min_density_menu(params)
    if constraint == "rich":
        return [low] * n
    if constraint == "time":
        return ([forcing_menu(params)] + [low] * (n - 1)) if n else []
    high = max_density_menu(params)
    out: list[Request] = []
    switched = False
    for _ in range(n):
        if not switched and pol.state.remaining < params.b_low:
            switched = True
        req = high if switched else low
        pol.step(req)
        out.append(req)
    return out


def necessity_instance(prefix: Sequence[Request], constraint: str, params: InstanceParams, *,
                       advice, rob, epsilon: float | None = None, quantum: float | None = None) -> Instance:
    suffix = necessity_adversary(prefix, constraint, params, advice=advice, rob=rob, epsilon=epsilon)
    return Instance(params, tuple(prefix) + tuple(suffix), quantum)


def canonical_necessity_case(constraint: str, epsilon: float = 0.1):
    """A worked prefix, parameters and policies for each constraint.

    Returns ``(params, prefix, advice, rob)``. Densities are ``l = 0.2`` and
    ``u = 2`` with ``b_low = 1/8`` and ``b_bar = 1`` (all dyadic so budget
    arithmetic is exact).
    """
    l, u, bl, bb = 0.2, 2.0, 0.125, 1.0
    lo_menu = lambda: FiniteMenu.from_pairs([(l * bl, bl), (l * bb, bb)])  # noqa: E731
    hi_menu = lambda: FiniteMenu.from_pairs([(l * bl, bl), (u * bb, bb)])  # noqa: E731
    advice = {"policy": "static", "lam": 1.0}
    if constraint == "lead":
        # greedy ROB overspends on a cheap request while the advice waits
        params = InstanceParams(B=4.0, T=16, f_bar=u * bb, b_bar=bb, b_low=bl, u=u, l=l,
                                epsilon=epsilon)
        return params, [lo_menu()], advice, "greedy"
    if constraint == "rich":
        # a hoarding ROB keeps budget until it is rich, having earned little
        T = 100
        params = InstanceParams(B=50.0, T=T, f_bar=u * bb, b_bar=bb, b_low=bl, u=u, l=l,
                                epsilon=epsilon)
        prefix = []
        pol = LearningAugmentedPolicy(advice, "hoarder", epsilon, enforce=False, check_recursive=False)
        pol.reset(params)
        i = 0
        while True:
            m = hi_menu() if i % 2 == 0 else lo_menu()
            pol.step(m)
            prefix.append(m)
            i += 1
            if not state_report(pol.state, params, epsilon)["rich"] or i >= T - 1:
                break
        return params, prefix, advice, "hoarder"
    if constraint == "time":
        # ROB skips the valuable requests and spends on the cheap ones
        m, T = 10, 40
        lam_seq = []
        prefix = []
        for _ in range(m):
            prefix += [hi_menu(), lo_menu()]
            lam_seq += [10.0, 0.0]
        lam_seq += [0.0] * (T - len(lam_seq))
        B = 31.25
        params = InstanceParams(B=B, T=T, f_bar=u * bb, b_bar=bb, b_low=bl, u=u, l=l,
                                epsilon=epsilon)
        return params, prefix, advice, SequencePolicy(lam_seq, name="sequence")
    raise ValueError(f"constraint must be one of {CONSTRAINTS}")


__all__ = [
    "LaState", "LaRound", "la_init", "check_endgame", "constraints_ok", "constraint_report",
    "select_theta", "la_step", "LearningAugmentedPolicy", "SequencePolicy", "make_policy",
    "load_advice", "run_la", "necessity_adversary", "necessity_instance",
    "canonical_necessity_case", "InvariantViolation", "NothingToFalsify",
]
