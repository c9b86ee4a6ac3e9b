"""Episode execution.

Linear instances played by one of the four multiplier policies go through the
episode kernel; everything else is stepped round by round. Both paths give
identical trajectories.
"""

from __future__ import annotations

import math

import numpy as np

from .. import kernels
from ..baselines import OmdPolicy, RoaPolicy, StaticPolicy
from ..core import Instance, Trajectory
from ..robust import RobustPolicy
from .generators import SwitchAdversary


def _kernel_args(policy, instance: Instance):
    p = instance.params
    if type(policy) is RobustPolicy:
        lam1, eta = policy.resolved(p)
        policy.reset(p)  # validates the initial multiplier and stepsize
        return "robust", lam1, eta, 0
    if type(policy) is OmdPolicy:
        lam1, eta = policy.resolved(p)
        policy.reset(p)
        return "omd", lam1, eta, 0
    if type(policy) is RoaPolicy:
        policy.reset(p)
        return "roa", policy.resolved(p), 0.0, policy.window or 0
    if type(policy) is StaticPolicy:
        return "static", policy.lam, 0.0, 0
    return None


def run_episode(policy, instance: Instance, *, use_kernel: bool = True) -> Trajectory:
    """Play ``policy`` on ``instance``; the trajectory always has length ``T``."""
    if len(instance.requests) != instance.params.T:
        raise ValueError(f"instance has {len(instance.requests)} requests but T = {instance.params.T}")
    if use_kernel and instance.is_linear:
        spec = _kernel_args(policy, instance)
        if spec is not None:
            mode, lam1, eta, window = spec
            a, d, xm = instance.linear_arrays()
            p = instance.params
            out = kernels.linear_episode(a, d, xm, p.B, p.rho, float(lam1), float(eta),
                                         float(p.lambda_max), kernels.MODES[mode], int(window))
            return Trajectory.from_columns(
                policy.name, p.B, out,
                final_p_bar=float(out["final_p_bar"]), final_lambda=float(out["final_lambda"]),
                extra={"backend": kernels.BACKEND},
            )
    return _run_steps(policy, instance.params, instance.requests)


def _run_steps(policy, params, requests, stream: SwitchAdversary | None = None):
    policy.reset(params)
    T = params.T
    cols = {k: np.empty(T) for k in ("lam", "p_bar", "mu", "x", "reward", "consumption")}
    cols["action_id"] = np.empty(T, dtype=np.int64)
    endgame: list[str] = []
    theta = np.full(T, math.nan)
    adv_r = np.full(T, math.nan)
    adv_c = np.full(T, math.nan)
    played = []
    spent = 0.0
    for t in range(T):
        if stream is not None:
            req = stream.request(t + 1, params.B - spent)
            played.append(req)
        else:
            req = requests[t]
        cols["lam"][t] = policy.lam
        cols["p_bar"][t] = policy.p_bar
        cols["mu"][t] = policy.mu
        act = policy.step(req)
        spent += act.consumption
        info = getattr(policy, "last_info", None)
        if info is not None:
            cols["lam"][t] = info["lam"]
            theta[t] = info["theta"]
            endgame.append(info["endgame"])
            adv_r[t] = info["adv_reward"]
            adv_c[t] = info["adv_consumption"]
        cols["action_id"][t] = act.id
        cols["x"][t] = act.x
        cols["reward"][t] = act.reward
        cols["consumption"][t] = act.consumption
    extra = {"backend": "steps"}
    kw = {}
    if endgame:
        kw["endgame"] = endgame
        kw["theta"] = theta
        extra["adv_reward"] = adv_r
        extra["adv_consumption"] = adv_c
        extra["F_adv"] = float(np.cumsum(adv_r)[-1]) if T else 0.0
        extra["epsilon"] = policy.eps
    if stream is not None:
        extra["requests"] = played
        extra["switched_at"] = stream.switched_at
    return Trajectory.from_columns(
        policy.name, params.B, cols,
        final_p_bar=float(policy.p_bar), final_lambda=float(policy.lam), extra=extra, **kw,
    )


def run_adaptive(policy, stream: SwitchAdversary) -> tuple[Trajectory, Instance]:
    """Play against an adaptive stream; the realized requests come back as a concrete instance."""
    p = stream.params
    traj = _run_steps(policy, p, None, stream)
    q = p.b_low
    on_grid = abs(p.b_bar / q - round(p.b_bar / q)) < 1e-12
    inst = Instance(p, tuple(traj.extra.pop("requests")), q if on_grid else None)
    return traj, inst
