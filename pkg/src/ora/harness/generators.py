"""Seeded instance generators and the adaptive switch adversary."""

from __future__ import annotations

import math

import numpy as np

from ..core import FiniteMenu, Instance, InstanceParams, LinearThreshold


def gen_stochastic_linear(T: int, rho: float, delta: float, seed: int) -> Instance:
    """Linear requests with ``a_t ~ U[0, 1]``; ``f_bar = 1``, ``b_bar = 1 + delta``, ``b_low = delta``.

    >>> gen_stochastic_linear(2000, 0.1, 0.01, 0).params.B
    200.0
    """
    if not 0 < delta < rho < 1:
        raise ValueError(f"need 0 < delta < rho < 1, got delta={delta}, rho={rho}")
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.0, 1.0, size=T)
    params = InstanceParams(B=rho * T, T=T, f_bar=1.0, b_bar=1.0 + delta, b_low=delta, u=1.0, l=0.0)
    return Instance(params, tuple(LinearThreshold(float(x), delta, 1.0) for x in a))


def gen_finite_menu_random(T: int, rho: float, menu_size: int, density_band: tuple[float, float],
                           quantum: float, seed: int, *, b_low: float | None = None,
                           b_bar: float = 1.0, epsilon: float | None = None) -> Instance:
    """Random grid-aligned menus with reward densities inside ``[l, u]``.

    Each round has a do-nothing action ``(l * b_low, b_low)`` first, one action
    consuming exactly ``b_bar`` and ``menu_size`` further random actions.
    ``b_low`` defaults to the quantum.
    """
    l, u = density_band
    if not 0 <= l <= u:
        raise ValueError(f"invalid density band [{l}, {u}]")
    if not quantum > 0:
        raise ValueError("quantum must be positive")
    b_low = quantum if b_low is None else b_low
    lo_k = round(b_low / quantum)
    hi_k = round(b_bar / quantum)
    if abs(lo_k * quantum - b_low) > 1e-12 or abs(hi_k * quantum - b_bar) > 1e-12:
        raise ValueError("b_low and b_bar must lie on the quantum grid")
    rng = np.random.default_rng(seed)
    params = InstanceParams(B=rho * T, T=T, f_bar=u * b_bar, b_bar=b_bar, b_low=b_low, u=u, l=l,
                            epsilon=epsilon)
    reqs = []
    for _ in range(T):
        ks = rng.integers(lo_k, hi_k + 1, size=menu_size)
        dens = rng.uniform(l, u, size=menu_size + 1)
        pairs = [(l * b_low, b_low), (float(dens[0] * b_bar), b_bar)]
        for k, d in zip(ks, dens[1:]):
            c = int(k) * quantum
            pairs.append((float(d * c), c))
        reqs.append(FiniteMenu.from_pairs(pairs))
    return Instance(params, tuple(reqs), quantum)


class SwitchAdversary:
    """Adaptive stream: minimum-density menus until the observed policy runs dry, then maximum-density.

    The stream only looks at the policy's remaining budget, which is public
    trajectory information. ``switch_rule`` is ``"depletion"`` (remaining
    below ``b_low``) or a float ``f`` in (0, 1] meaning "remaining below
    ``f * B``".
    """

    def __init__(self, params: InstanceParams, switch_rule="depletion"):
        if not params.l > 0:
            raise ValueError("the switch adversary needs l > 0")
        self.params = params
        p = params
        self.low = FiniteMenu.from_pairs([(p.l * p.b_low, p.b_low), (p.l * p.b_bar, p.b_bar)])
        self.high = FiniteMenu.from_pairs([(p.l * p.b_low, p.b_low), (p.u * p.b_bar, p.b_bar)])
        if switch_rule == "depletion":
            self.threshold = p.b_low
        else:
            f = float(switch_rule)
            if not 0 < f <= 1:
                raise ValueError("switch fraction must lie in (0, 1]")
            self.threshold = f * p.B
        self.switch_rule = switch_rule
        self.switched_at: int | None = None

    def request(self, t: int, remaining: float) -> FiniteMenu:
        if self.switched_at is None and remaining < self.threshold:
            self.switched_at = t
        return self.high if self.switched_at is not None else self.low


def gen_adversarial_switch(T: int, rho: float, *, l: float = 0.2, u: float = 2.0,
                           b_low: float = 0.125, b_bar: float = 1.0,
                           switch_rule="depletion") -> SwitchAdversary:
    params = InstanceParams(B=rho * T, T=T, f_bar=u * b_bar, b_bar=b_bar, b_low=b_low, u=u, l=l)
    return SwitchAdversary(params, switch_rule)


def competitive_ratio_bound(params: InstanceParams) -> float:
    """``(b_bar - b_low) / (rho - b_low)``; infinite when ``rho <= b_low``."""
    d = params.rho - params.b_low
    return math.inf if d <= 0 else (params.b_bar - params.b_low) / d
