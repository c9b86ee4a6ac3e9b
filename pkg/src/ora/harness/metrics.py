"""Per-episode metrics, sweep aggregation and the independent budget audit."""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..core import FiniteMenu, Instance, Trajectory
from ..oracle import OfflineSolution


class BudgetViolation(RuntimeError):
    pass


def instance_id(instance: Instance) -> str:
    """Short content hash of the serialized instance."""
    return hashlib.sha256(instance.to_json(sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class Metrics:
    policy: str
    total_reward: float
    opt: float
    regret: float
    ratio: float
    depletion_round: int | None
    terminal_lambda: float
    total_consumption: float
    consistency_margin: float | None = None
    instance_id: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def depletion_round(traj: Trajectory, b_low: float) -> int | None:
    """First (1-indexed) round after which the remaining budget is below ``b_low``."""
    idx = np.flatnonzero(traj.remaining < b_low)
    return int(idx[0]) + 1 if len(idx) else None


def compute_metrics(traj: Trajectory, solution: OfflineSolution, b_low: float, *,
                    advice_reward: float | None = None, epsilon: float | None = None,
                    instance: Instance | None = None) -> Metrics:
    """Regret ``OPT - reward`` and ratio ``reward / OPT`` against the exact optimum.

    The consistency margin ``(1+eps) F - F_adv`` is filled in when the advice
    total is given directly or recorded on the trajectory.
    """
    iid = None
    if instance is not None:
        iid = instance_id(instance)
        for other in (traj.extra.get("instance_id"), solution.extra.get("instance_id")):
            if other is not None and other != iid:
                raise ValueError(f"instance id mismatch: {other} != {iid}")
        if len(traj) != instance.params.T:
            raise ValueError("trajectory length does not match the instance horizon")
    F = traj.total_reward
    opt = solution.value
    if advice_reward is None:
        advice_reward = traj.extra.get("F_adv")
    if epsilon is None:
        epsilon = traj.extra.get("epsilon")
    margin = None
    if advice_reward is not None and epsilon is not None:
        margin = (1.0 + epsilon) * F - advice_reward
    return Metrics(
        policy=traj.policy,
        total_reward=F,
        opt=opt,
        regret=opt - F,
        ratio=F / opt if opt != 0 else math.nan,
        depletion_round=depletion_round(traj, b_low),
        terminal_lambda=float(traj.final_lambda),
        total_consumption=traj.total_consumption,
        consistency_margin=margin,
        instance_id=iid,
    )


def audit_budget(traj: Trajectory, instance: Instance) -> float:
    """Re-accumulate consumption from the raw per-round choices and check it against ``B``.

    Consumption is looked up from the instance (menu entry or ``delta + x``),
    not copied from the trajectory, and summed in a plain loop. Returns the
    total; raises :class:`BudgetViolation` on any mismatch or overshoot.
    """
    total = 0.0
    for t, req in enumerate(instance.requests):
        aid = int(traj.action_id[t])
        if aid < 0:
            c = 0.0
        elif isinstance(req, FiniteMenu):
            c = req.actions[aid].consumption
        else:
            c = req.delta + float(traj.x[t]) if aid == 1 else req.delta
        if c != traj.consumption[t]:
            raise BudgetViolation(f"round {t + 1}: recorded consumption {traj.consumption[t]} != {c}")
        total = total + c
        if total > instance.params.B:
            raise BudgetViolation(f"round {t + 1}: cumulative consumption {total} exceeds B")
    return total


def standard_error(x) -> float:
    x = np.asarray(x, float)
    return float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0


def regret_table(rows: list[dict]) -> list[dict]:
    """Aggregate per-episode rows ``{"T", "regret", ...}`` into one line per horizon."""
    out = []
    for T in sorted({r["T"] for r in rows}):
        reg = [r["regret"] for r in rows if r["T"] == T]
        ratio = [r["ratio"] for r in rows if r["T"] == T]
        m = float(np.mean(reg))
        out.append({
            "T": T,
            "episodes": len(reg),
            "mean_regret": m,
            "se_regret": standard_error(reg),
            "regret_over_T": m / T,
            "regret_over_sqrtTlogT": m / math.sqrt(T * math.log(T)),
            "mean_ratio": float(np.mean(ratio)),
        })
    return out
