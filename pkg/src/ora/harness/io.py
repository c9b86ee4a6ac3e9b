"""Deterministic output writers (CSV, JSON, markdown)."""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from ..core import Trajectory

TRAJECTORY_COLUMNS = ("t", "lambda", "p_bar", "mu", "reward", "consumption",
                      "cum_reward", "cum_consumption", "remaining", "endgame")


def output_root() -> Path:
    return Path(os.environ.get("ORA_OUT", "outputs"))


def _num(x) -> str:
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def jsonable(obj):
    """Replace NaN/inf with ``None`` and numpy scalars/arrays with plain Python values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")


def trajectory_rows(traj: Trajectory):
    rem = traj.remaining
    eg = traj.endgame or [""] * len(traj)
    t0 = int(traj.extra.get("t_offset", 0))
    for i in range(len(traj)):
        yield [str(t0 + i + 1), _num(traj.lam[i]), _num(traj.p_bar[i]), _num(traj.mu[i]),
               _num(traj.reward[i]), _num(traj.consumption[i]), _num(traj.cum_reward[i]),
               _num(traj.cum_consumption[i]), _num(rem[i]), eg[i]]


def write_trajectories(path: Path, trajs: list[tuple[dict, Trajectory]]) -> None:
    """Long-format CSV; ``trajs`` pairs key columns (e.g. policy, seed) with a trajectory."""
    keys = list(trajs[0][0]) if trajs else []
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys + list(TRAJECTORY_COLUMNS))
        for key, tr in trajs:
            prefix = [str(key[k]) for k in keys]
            for row in trajectory_rows(tr):
                w.writerow(prefix + row)


def write_table(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) if isinstance(v, (float, np.floating)) else str(v) for v in r])


def markdown_table(rows: list[dict], cols: list[str]) -> str:
    def fmt(v):
        if isinstance(v, float):
            return "" if math.isnan(v) else f"{v:.6g}"
        return "" if v is None else str(v)

    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for r in rows:
        lines.append("| " + " | ".join(fmt(r.get(c)) for c in cols) + " |")
    return "\n".join(lines)
