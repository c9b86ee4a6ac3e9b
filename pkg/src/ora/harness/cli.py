"""Command-line interface: ``simulate``, ``sweep``, ``oracle`` and ``figure1``.

Every subcommand writes ``instances.json``, ``trajectories.csv``,
``metrics.json`` and ``summary.md`` under ``$ORA_OUT/<run_id>/`` (default
root ``outputs``). The run id defaults to a hash of the resolved
configuration, so identical invocations overwrite identical bytes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from ..baselines import OmdPolicy, RoaPolicy, StaticPolicy
from ..core import Instance, Trajectory
from ..learning_augmented import InvariantViolation, LearningAugmentedPolicy, make_policy
from ..oracle import GridMismatch, solve_opt
from ..robust import (
    RobustPolicy,
    dynamic_regret,
    path_length,
    path_length_bound,
    rolling_average_violations,
)
from . import io
from .generators import gen_adversarial_switch, gen_finite_menu_random, gen_stochastic_linear
from .metrics import BudgetViolation, audit_budget, compute_metrics, instance_id, regret_table
from .runner import run_adaptive, run_episode

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVARIANT = 3

DEFAULTS = {
    "family": "linear",
    "T": 2000,
    "seed": 0,
    "seeds": 30,
    "rho": 0.1,
    "delta": 0.01,
    "menu_size": 3,
    "band": [0.2, 2.0],
    "quantum": 0.125,
    "b_bar": 1.0,
    "policy": ["robust"],
    "lambda_1": None,
    "eta": "auto",
    "window": None,
    "epsilon": None,
    "advice": None,
    "switch_rule": "depletion",
    "trajectories": "final",
}

FIGURE1 = {"T": 2000, "rho": 0.1, "delta": 0.01, "lambda_1": 0.1}


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration


def _csv_list(s, cast=str):
    if isinstance(s, (list, tuple)):
        return [cast(x) for x in s]
    return [cast(x) for x in str(s).split(",") if x != ""]


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(loaded) - set(DEFAULTS) - {"run_id", "instance"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for k, v in vars(args).items():
        if k in ("command", "config", "func") or v is None:
            continue
        cfg[k] = v
    cfg["policy"] = _csv_list(cfg["policy"])
    cfg["band"] = _csv_list(cfg["band"], float)
    if cfg["eta"] != "auto":
        cfg["eta"] = float(cfg["eta"])
    return cfg


def _public(cfg: dict) -> dict:
    """Config as recorded in outputs; the run id only names the directory."""
    return {k: v for k, v in cfg.items() if k != "run_id"}


def run_dir(command: str, cfg: dict) -> Path:
    rid = cfg.get("run_id")
    if not rid:
        blob = json.dumps(io.jsonable(_public(cfg)), sort_keys=True).encode()
        rid = f"{command}-{hashlib.sha256(blob).hexdigest()[:10]}"
    d = io.output_root() / rid
    d.mkdir(parents=True, exist_ok=True)
    return d


def make_instance(cfg: dict, T: int, seed: int) -> Instance:
    fam = cfg["family"]
    if fam == "linear":
        return gen_stochastic_linear(T, cfg["rho"], cfg["delta"], seed)
    if fam == "menu":
        lo, hi = cfg["band"]
        return gen_finite_menu_random(T, cfg["rho"], int(cfg["menu_size"]), (lo, hi), cfg["quantum"],
                                      seed, b_bar=cfg["b_bar"], epsilon=cfg["epsilon"])
    raise UsageError(f"unknown family {fam!r}")


def build_policy(name: str, cfg: dict, params):
    lam1, eta = cfg["lambda_1"], cfg["eta"]
    if name == "robust":
        return RobustPolicy(lam1, eta)
    if name == "omd":
        return OmdPolicy(lam1, eta)
    if name == "roa":
        return RoaPolicy(lam1, cfg["window"])
    if name == "greedy":
        return StaticPolicy(0.0)
    if name.startswith("static:"):
        return StaticPolicy(float(name.split(":", 1)[1]))
    if name == "la":
        if cfg["advice"] is None:
            raise UsageError("policy 'la' needs --advice")
        if cfg["epsilon"] is None:
            raise UsageError("policy 'la' needs --epsilon")
        return LearningAugmentedPolicy(cfg["advice"], RobustPolicy(lam1, eta), cfg["epsilon"])
    try:
        return make_policy(name, params)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"unknown policy {name!r}") from exc


def load_instance(path: str, index: int = 0) -> Instance:
    d = json.loads(Path(path).read_text())
    if "instances" in d:
        d = d["instances"][index]["instance"]
    return Instance.from_dict(d)


# --------------------------------------------------------------------------
# checks


def check_trajectory(traj: Trajectory, inst: Instance, policy) -> dict:
    """Budget audit plus the rolling-average invariants for the robust policy."""
    audit_budget(traj, inst)
    out = {"budget_ok": True}
    if isinstance(policy, RobustPolicy):
        p = inst.params
        viol = rolling_average_violations(traj, p)
        pl, bound = path_length(traj), path_length_bound(p)
        lhs, dr_bound = dynamic_regret(traj, p, policy.resolved(p)[1])
        out.update(path_length=pl, path_length_bound=bound, increment_violations=len(viol),
                   dual_regret=lhs, dual_regret_bound=dr_bound)
        if viol or pl > bound or lhs > dr_bound:
            raise InvariantViolation(f"rolling-average invariant failed for {policy.name}: {out}")
    if isinstance(policy, LearningAugmentedPolicy):
        margin = policy.consistency_margin()
        out["consistency_margin"] = margin
        if inst.params.l > 0 and margin < -1e-9:
            raise InvariantViolation(f"consistency margin {margin} < 0")
    return out


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(cfg: dict) -> int:
    out = run_dir("simulate", cfg)
    T, seed = int(cfg["T"]), int(cfg["seed"])
    episodes, trajs, instances = [], [], []
    if cfg["family"] == "switch":
        lo, hi = cfg["band"]
        for name in cfg["policy"]:
            stream = gen_adversarial_switch(T, cfg["rho"], l=lo, u=hi, b_low=cfg["quantum"],
                                            b_bar=cfg["b_bar"], switch_rule=cfg["switch_rule"])
            pol = build_policy(name, cfg, stream.params)
            traj, inst = run_adaptive(pol, stream)
            instances.append(inst)
            _record(inst, traj, pol, name, episodes, trajs)
    else:
        inst = Path(cfg["instance"]) if cfg.get("instance") else None
        inst = load_instance(str(inst)) if inst else make_instance(cfg, T, seed)
        instances.append(inst)
        for name in cfg["policy"]:
            pol = build_policy(name, cfg, inst.params)
            traj = run_episode(pol, inst)
            _record(inst, traj, pol, name, episodes, trajs)
    io.write_json(out / "instances.json",
                  {"instances": [{"id": instance_id(i), "instance": i.to_dict()} for i in instances]})
    io.write_trajectories(out / "trajectories.csv", trajs)
    io.write_json(out / "metrics.json", {"config": _public(cfg), "episodes": episodes})
    cols = ["policy", "total_reward", "opt", "regret", "ratio", "depletion_round",
            "terminal_lambda", "consistency_margin"]
    (out / "summary.md").write_text(
        f"# simulate\n\nfamily `{cfg['family']}`, T = {T}, seed = {seed}\n\n"
        + io.markdown_table(episodes, cols) + "\n")
    print(out)
    return EXIT_OK


def _record(inst, traj, pol, name, episodes, trajs):
    sol = solve_opt(inst)
    checks = check_trajectory(traj, inst, pol)
    m = compute_metrics(traj, sol, inst.params.b_low, instance=inst).to_dict()
    m.update(label=name, lambda_star=sol.lambda_star, dual_gap=sol.dual_gap, checks=checks)
    episodes.append(m)
    trajs.append(({"policy": name}, traj))


def cmd_sweep(cfg: dict) -> int:
    out = run_dir("sweep", cfg)
    Ts = _csv_list(cfg["T"], int)
    seeds = range(int(cfg["seeds"])) if isinstance(cfg["seeds"], int) or str(cfg["seeds"]).isdigit() \
        else _csv_list(cfg["seeds"], int)
    rows, trajs, descriptors = [], [], []
    for T in Ts:
        for s in seeds:
            inst_seed = int(np.random.SeedSequence([int(cfg["seed"]), T, s]).generate_state(1)[0])
            inst = make_instance(cfg, T, inst_seed)
            descriptors.append({"T": T, "seed": s, "instance_seed": inst_seed, "id": instance_id(inst)})
            sol = solve_opt(inst, with_dual=False)
            for name in cfg["policy"]:
                pol = build_policy(name, cfg, inst.params)
                traj = run_episode(pol, inst)
                check_trajectory(traj, inst, pol)
                m = compute_metrics(traj, sol, inst.params.b_low, instance=inst).to_dict()
                m.update(T=T, seed=s, label=name)
                rows.append(m)
                if cfg["trajectories"] == "full":
                    trajs.append(({"policy": name, "T": T, "seed": s}, traj))
                elif cfg["trajectories"] == "final":
                    trajs.append(({"policy": name, "T": T, "seed": s}, _last_row(traj)))
    tables = {name: regret_table([r for r in rows if r["label"] == name]) for name in cfg["policy"]}
    io.write_json(out / "instances.json", {"generator": cfg["family"], "instances": descriptors})
    io.write_trajectories(out / "trajectories.csv", trajs)
    io.write_json(out / "metrics.json", {"config": _public(cfg), "episodes": rows, "regret_tables": tables})
    cols = ["T", "episodes", "mean_regret", "se_regret", "regret_over_T", "regret_over_sqrtTlogT",
            "mean_ratio"]
    body = "".join(f"\n## {name}\n\n" + io.markdown_table(tab, cols) + "\n" for name, tab in tables.items())
    (out / "summary.md").write_text(f"# sweep\n\nfamily `{cfg['family']}`, T = {Ts}\n{body}")
    for name, tab in tables.items():
        io.write_table(out / f"regret_table_{name}.csv", cols, [[r[c] for c in cols] for r in tab])
    print(out)
    return EXIT_OK


def _last_row(traj: Trajectory) -> Trajectory:
    sl = slice(len(traj) - 1, len(traj))
    return Trajectory(
        traj.policy, traj.B, traj.lam[sl], traj.p_bar[sl], traj.mu[sl], traj.action_id[sl],
        traj.x[sl], traj.reward[sl], traj.consumption[sl], traj.cum_reward[sl],
        traj.cum_consumption[sl], traj.endgame[-1:] if traj.endgame else [],
        extra={"t_offset": len(traj) - 1},
    )


def cmd_oracle(cfg: dict) -> int:
    if cfg.get("instance"):
        inst = load_instance(cfg["instance"])
    else:
        inst = make_instance(cfg, int(cfg["T"]), int(cfg["seed"]))
    out = run_dir("oracle", {**cfg, "instance_id": instance_id(inst)})
    sol = solve_opt(inst)
    iid = instance_id(inst)
    io.write_json(out / "instances.json", {"instances": [{"id": iid, "instance": inst.to_dict()}]})
    trajs = []
    if sol.actions is not None:
        cols = {
            "lam": np.full(len(sol.actions), sol.lambda_star),
            "action_id": [a.id for a in sol.actions], "x": [a.x for a in sol.actions],
            "reward": [a.reward for a in sol.actions],
            "consumption": [a.consumption for a in sol.actions],
        }
        trajs.append(({"policy": "opt"}, Trajectory.from_columns("opt", inst.params.B, cols)))
    io.write_trajectories(out / "trajectories.csv", trajs)
    res = sol.to_dict()
    res.pop("actions")
    io.write_json(out / "metrics.json", {"config": _public(cfg), "instance_id": iid, "oracle": res})
    (out / "summary.md").write_text(
        f"# oracle\n\ninstance `{iid}`\n\n"
        + io.markdown_table([res], ["value", "lambda_star", "dual_gap", "method"]) + "\n")
    print(out)
    return EXIT_OK


def cmd_figure1(cfg: dict) -> int:
    T = FIGURE1["T"]
    cfg = {**cfg, "family": "linear", **FIGURE1, "eta": 1 / math.sqrt(T), "window": None,
           "policy": ["robust", "omd", "roa"]}
    out = run_dir("figure1", cfg)
    inst = gen_stochastic_linear(T, cfg["rho"], cfg["delta"], int(cfg["seed"]))
    sol = solve_opt(inst)
    episodes, trajs = [], []
    for name in cfg["policy"]:
        pol = build_policy(name, cfg, inst.params)
        traj = run_episode(pol, inst)
        _record(inst, traj, pol, name, episodes, trajs)
    opt_r = np.cumsum([a.reward for a in sol.actions])
    opt_c = np.cumsum([a.consumption for a in sol.actions])
    t = np.arange(1, T + 1)
    names = cfg["policy"]
    by = {k: tr for (k, tr) in ((key["policy"], tr) for key, tr in trajs)}
    io.write_table(out / "figure1_cum_reward.csv", ["t", *names, "opt"],
                   zip(t, *(by[n].cum_reward for n in names), opt_r))
    io.write_table(out / "figure1_cum_consumption.csv", ["t", *names, "opt", "budget"],
                   zip(t, *(by[n].cum_consumption for n in names), opt_c, np.full(T, inst.params.B)))
    io.write_table(out / "figure1_lambda.csv", ["t", *names, "lambda_star"],
                   zip(t, *(by[n].lam for n in names), np.full(T, sol.lambda_star)))
    io.write_json(out / "instances.json",
                  {"instances": [{"id": instance_id(inst), "instance": inst.to_dict()}]})
    io.write_trajectories(out / "trajectories.csv", trajs)
    io.write_json(out / "metrics.json", {"config": _public(cfg), "opt": sol.value,
                                         "lambda_star": sol.lambda_star, "episodes": episodes})
    cols = ["policy", "total_reward", "opt", "ratio", "depletion_round", "terminal_lambda"]
    (out / "summary.md").write_text(
        f"# figure1\n\nseed {cfg['seed']}: OPT = {sol.value:.2f}, lambda* = {sol.lambda_star:.4f}\n\n"
        + io.markdown_table(episodes, cols) + "\n")
    print(out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; explicit flags override its keys")
    p.add_argument("--run-id", dest="run_id")
    p.add_argument("--seed", type=int)
    p.add_argument("--family", choices=["linear", "menu", "switch"])
    p.add_argument("--rho", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--menu-size", dest="menu_size", type=int)
    p.add_argument("--band", help="density band l,u for menu and switch families")
    p.add_argument("--quantum", type=float, help="consumption grid (also b_low) for menu families")
    p.add_argument("--b-bar", dest="b_bar", type=float)
    p.add_argument("--policy", help="comma list: robust, omd, roa, greedy, static:<lam>, la")
    p.add_argument("--lambda1", dest="lambda_1", type=float)
    p.add_argument("--eta", help="stepsize or 'auto'")
    p.add_argument("--window", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--advice", help="advice JSON file (multiplier array or policy spec)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ora", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one instance, one or more policies")
    _common(p)
    p.add_argument("--T", type=int)
    p.add_argument("--instance", help="instance JSON to replay instead of generating one")
    p.add_argument("--switch-rule", dest="switch_rule")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="T x seed grid with aggregate regret tables")
    _common(p)
    p.add_argument("--T", help="comma list of horizons")
    p.add_argument("--seeds", help="number of seeds or comma list")
    p.add_argument("--trajectories", choices=["none", "final", "full"])
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="offline optimum and best static multiplier")
    _common(p)
    p.add_argument("--T", type=int)
    p.add_argument("--instance", help="instance JSON (or an instances.json from another run)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("figure1", help="canned uniform-coefficient example, three panels as CSV")
    p.add_argument("--seed", type=int)
    p.add_argument("--run-id", dest="run_id")
    p.set_defaults(func=cmd_figure1)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "sweep" and isinstance(cfg["T"], int):
            cfg["T"] = [cfg["T"]]
        return args.func(cfg)
    except (InvariantViolation, BudgetViolation) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (UsageError, GridMismatch, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
