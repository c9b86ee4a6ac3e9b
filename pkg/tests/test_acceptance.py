"""Acceptance gate: criteria 1-10, each reported as one PASS/FAIL line."""

import io
import math
import time

import numpy as np
import pytest

from ora import (
    LearningAugmentedPolicy,
    OmdPolicy,
    RoaPolicy,
    RobustPolicy,
    StaticPolicy,
    dual_value,
    solve_opt,
)
from ora.core import FiniteMenu, Instance, InstanceParams
from ora.harness import cli
from ora.harness.generators import (
    competitive_ratio_bound,
    gen_adversarial_switch,
    gen_finite_menu_random,
    gen_stochastic_linear,
)
from ora.harness.io import trajectory_rows
from ora.harness.metrics import BudgetViolation, audit_budget, depletion_round
from ora.harness.runner import run_adaptive, run_episode
from ora.learning_augmented import InvariantViolation, canonical_necessity_case, necessity_instance, run_la
from ora.oracle import brute_force
from ora.robust import dynamic_regret, path_length, path_length_bound, rolling_average_violations

from ._acceptance_log import report

AUDIT = {"checked": 0, "failed": 0}


def audited(traj, inst):
    AUDIT["checked"] += 1
    try:
        audit_budget(traj, inst)
    except BudgetViolation:
        AUDIT["failed"] += 1
    return traj


def robust_invariants(traj, inst, eta):
    p = inst.params
    pl_bad = path_length(traj) > path_length_bound(p)
    step_bad = len(rolling_average_violations(traj, p))
    lhs, bound = dynamic_regret(traj, p, eta)
    return pl_bad, step_bad, lhs > bound


# --------------------------------------------------------------------------
# shared suites (computed once)


@pytest.fixture(scope="module")
def example1():
    T, seeds = 2000, 30
    eta = 1 / math.sqrt(T)
    t0 = time.perf_counter()
    rows = []
    for s in range(seeds):
        inst = gen_stochastic_linear(T, 0.1, 0.01, s)
        opt = solve_opt(inst, with_dual=False).value
        rob = audited(run_episode(RobustPolicy(0.1, eta), inst), inst)
        omd = audited(run_episode(OmdPolicy(0.1, eta), inst), inst)
        roa = audited(run_episode(RoaPolicy(0.1), inst), inst)
        rows.append({"opt": opt, "robust": rob.total_reward, "omd": omd.total_reward,
                     "roa": roa.total_reward, "roa_lambda": roa.final_lambda,
                     "roa_depletion": depletion_round(roa, inst.params.b_low),
                     "inv": robust_invariants(rob, inst, eta)})
    return rows, time.perf_counter() - t0


@pytest.fixture(scope="module")
def regret_sweep():
    Ts, seeds = (250, 500, 1000, 2000, 4000), 30
    t0 = time.perf_counter()
    out, inv = {}, []
    for T in Ts:
        reg = []
        for s in range(seeds):
            inst = gen_stochastic_linear(T, 0.1, 0.01, 10_000 * T + s)
            pol = RobustPolicy()
            tr = audited(run_episode(pol, inst), inst)
            reg.append(solve_opt(inst, with_dual=False).value - tr.total_reward)
            inv.append(robust_invariants(tr, inst, pol.resolved(inst.params)[1]))
        out[T] = float(np.mean(reg))
    return out, inv, time.perf_counter() - t0


def _consistency_instance(rng):
    T = int(rng.integers(20, 201))
    l = float(rng.uniform(0.2, 1.0))
    u = float(rng.uniform(max(l, 1.0), 5.0))
    rho = float(rng.uniform(0.2, 0.9))
    return gen_finite_menu_random(T, rho, int(rng.integers(1, 4)), (l, u), 0.125,
                                  int(rng.integers(2**31)))


@pytest.fixture(scope="module")
def consistency_suite():
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    res = {"episodes": 0, "violations": 0, "worst": math.inf, "errors": 0,
           "theta0_checks": 0, "theta0_failures": 0}
    for _ in range(1000):
        inst = _consistency_instance(rng)
        p = inst.params
        advice = [rng.uniform(0, p.lambda_max, p.T).tolist(), "greedy", "hoarder", "robust"]
        for adv in advice:
            for eps in (0.05, 0.2, 1.0):
                pol = LearningAugmentedPolicy(adv, "robust", eps)
                res["episodes"] += 1
                try:
                    tr = audited(run_episode(pol, inst), inst)
                except InvariantViolation:
                    res["errors"] += 1
                    res["theta0_failures"] += 1
                    continue
                res["theta0_checks"] += pol.theta0_checks
                margin = (1 + eps) * tr.total_reward - tr.extra["F_adv"]
                res["worst"] = min(res["worst"], margin)
                if margin < -1e-9:
                    res["violations"] += 1
    res["seconds"] = time.perf_counter() - t0
    return res


# --------------------------------------------------------------------------
# criteria


def test_criterion_1_example_reproduction(example1):
    rows, secs = example1
    m = {k: float(np.mean([r[k] for r in rows])) for k in ("opt", "robust", "omd", "roa")}
    lam = [r["roa_lambda"] for r in rows]
    dep = sum(1 for r in rows if r["roa_depletion"] is not None and r["roa_depletion"] < 2000)
    a = m["robust"] >= m["omd"] >= m["roa"] and m["robust"] - m["roa"] >= 0.10 * m["opt"]
    b = m["robust"] >= 0.97 * m["opt"]
    c = all(0.36 <= x <= 0.46 for x in lam) and dep >= 0.9 * len(rows)
    ok = a and b and c and secs < 60
    report(1, ok, f"mean OPT {m['opt']:.2f}, robust {m['robust']:.2f} ({m['robust'] / m['opt']:.4f}), "
                  f"omd {m['omd']:.2f}, roa {m['roa']:.2f}; roa terminal lambda "
                  f"[{min(lam):.3f}, {max(lam):.3f}], depleted {dep}/{len(rows)}; {secs:.1f}s")
    assert ok


def test_criterion_2_regret_scaling(regret_sweep):
    reg, _, secs = regret_sweep
    Ts = sorted(reg)
    per_T = [reg[T] / T for T in Ts]
    scaled = [reg[T] / math.sqrt(T * math.log(T)) for T in Ts]
    decreasing = all(x > y for x, y in zip(per_T, per_T[1:]))
    band = max(scaled) / min(scaled)
    ok = decreasing and band <= 3 and secs < 180
    report(2, ok, "regret/T " + ", ".join(f"{x:.5f}" for x in per_T)
           + f"; regret/sqrt(T log T) band x{band:.2f}; {secs:.1f}s")
    assert ok


def test_criterion_3_path_length(example1, regret_sweep):
    inv = [r["inv"] for r in example1[0]] + regret_sweep[1]
    pl = sum(1 for x in inv if x[0])
    steps = sum(x[1] for x in inv)
    ok = pl == 0 and steps == 0
    report(3, ok, f"{len(inv)} episodes: {pl} path-length and {steps} per-step violations")
    assert ok


def test_criterion_4_dynamic_regret(example1, regret_sweep):
    inv = [r["inv"] for r in example1[0]] + regret_sweep[1]
    bad = sum(1 for x in inv if x[2])
    report(4, bad == 0, f"{len(inv)} episodes: {bad} dynamic-regret bound violations")
    assert bad == 0


def test_criterion_5_consistency(consistency_suite):
    r = consistency_suite
    ok = r["violations"] == 0 and r["errors"] == 0 and r["episodes"] == 12_000 and r["seconds"] < 120
    report(5, ok, f"{r['episodes']} episodes, {r['violations']} violations, {r['errors']} aborted, "
                  f"min margin {r['worst']:.3g}; {r['seconds']:.1f}s")
    assert ok


def test_criterion_6_recursive_feasibility(consistency_suite):
    r = consistency_suite
    ok = r["theta0_failures"] == 0 and r["theta0_checks"] > 0
    report(6, ok, f"theta=0 admissible on {r['theta0_checks']} non-endgame rounds, "
                  f"{r['theta0_failures']} failures")
    assert ok


def test_criterion_7_necessity():
    parts, ok = [], True
    for c in ("time", "rich", "lead"):
        params, prefix, advice, rob = canonical_necessity_case(c)
        inst = necessity_instance(prefix, c, params, advice=advice, rob=rob)
        eps = params.epsilon
        s_var, _, _ = run_la(inst, advice, rob, eps, enforce=False, check_recursive=False)
        s_ok, _, pol = run_la(inst, advice, rob, eps)
        m_var = (1 + eps) * s_var.F - s_var.F_adv
        m_ok = (1 + eps) * s_ok.F - s_ok.F_adv
        audited(run_episode(LearningAugmentedPolicy(advice, rob, eps), inst), inst)
        ok &= m_var < 0 <= m_ok
        parts.append(f"{c}: variant {m_var:+.3f} vs compliant {m_ok:+.3f}")
    report(7, ok, "; ".join(parts))
    assert ok


def _random_menu_instance(rng, T):
    q = 0.125
    menus = []
    for _ in range(T):
        n = int(rng.integers(1, 5))
        units = rng.integers(1, 9, n)
        rew = rng.uniform(0, 4, n)
        menus.append(FiniteMenu.from_pairs([(float(r), int(k) * q) for r, k in zip(rew, units)]))
    floor = sum(m.min_consumption for m in menus)
    B = floor + int(rng.integers(0, 6 * T + 1)) * q
    p = InstanceParams(B=B, T=T, f_bar=4.0, b_bar=1.0, b_low=q, u=32.0, l=0.0)
    return Instance(p, menus, q)


def test_criterion_8_oracle():
    rng = np.random.default_rng(8)
    mism = 0
    for _ in range(500):
        inst = _random_menu_instance(rng, int(rng.integers(1, 13)))
        if solve_opt(inst, with_dual=False).value != brute_force(inst).value:
            mism += 1
    worst, bad = math.inf, 0
    for i in range(1000):
        if i % 2:
            inst = _random_menu_instance(rng, int(rng.integers(1, 13)))
        else:
            inst = gen_stochastic_linear(int(rng.integers(2, 300)), 0.3, 0.01, int(rng.integers(2**31)))
        lam = float(rng.uniform(0, 1.5 * inst.params.lambda_max))
        slack = dual_value(lam, inst) - solve_opt(inst, with_dual=False).value
        worst = min(worst, slack)
        bad += slack < -1e-9
    ok = mism == 0 and bad == 0
    report(8, ok, f"DP vs enumeration: {mism}/500 mismatches; weak duality: {bad}/1000 "
                  f"below -1e-9 (min slack {worst:.2e})")
    assert ok


def test_criterion_9_competitive_ratio():
    parts, ok = [], True
    for rho in (0.25, 0.5):
        ratios = []
        for T in (1000, 10_000):
            stream = gen_adversarial_switch(T, rho, l=0.2, u=2.0)
            tr, inst = run_adaptive(RobustPolicy(), stream)
            audited(tr, inst)
            opt = solve_opt(inst, with_dual=False).value
            F = math.fsum(tr.reward)
            ratios.append(opt / F if F > 0 else math.inf)
        alpha = competitive_ratio_bound(stream.params)
        finite = all(math.isfinite(r) for r in ratios)
        # non-increasing up to float noise in the two sums
        trend = ratios[1] <= ratios[0] * (1 + 1e-9)
        cap = ratios[1] <= 1.5 * alpha
        ok &= finite and trend and cap
        parts.append(f"rho={rho}: OPT/reward {ratios[0]:.4f} -> {ratios[1]:.4f}, 1.5*alpha {1.5 * alpha:.2f}")
    report(9, ok, "; ".join(parts))
    assert ok


def _dump(traj):
    buf = io.StringIO()
    for row in trajectory_rows(traj):
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def test_criterion_10_budget_and_determinism(example1, regret_sweep, consistency_suite,
                                             tmp_path, monkeypatch):
    # replay a sample of every episode kind twice and compare serialized bytes
    diffs = 0
    runs = [
        (lambda: RobustPolicy(0.1, 1 / math.sqrt(2000)), gen_stochastic_linear(2000, 0.1, 0.01, 0)),
        (lambda: RoaPolicy(0.1), gen_stochastic_linear(2000, 0.1, 0.01, 1)),
        (lambda: LearningAugmentedPolicy("robust", "robust", 0.2),
         gen_finite_menu_random(150, 0.4, 3, (0.3, 3.0), 0.125, 3)),
    ]
    for make, inst in runs:
        a = audited(run_episode(make(), inst), inst)
        b = audited(run_episode(make(), inst, use_kernel=False), inst)
        diffs += _dump(a) != _dump(b)
    s1, _ = run_adaptive(RobustPolicy(), gen_adversarial_switch(1000, 0.25))
    s2, _ = run_adaptive(RobustPolicy(), gen_adversarial_switch(1000, 0.25))
    diffs += _dump(s1) != _dump(s2)
    monkeypatch.setenv("ORA_OUT", str(tmp_path))
    for cmd in (["figure1", "--seed", "3"],
                ["sweep", "--T", "100,200", "--seeds", "2", "--policy", "robust,roa"]):
        cli.main(cmd + ["--run-id", "a"])
        first = {p.name: p.read_bytes() for p in (tmp_path / "a").iterdir()}
        cli.main(cmd + ["--run-id", "b"])
        second = {p.name: p.read_bytes() for p in (tmp_path / "b").iterdir()}
        diffs += first != second
        for d in ("a", "b"):
            for p in (tmp_path / d).iterdir():
                p.unlink()
    ok = AUDIT["failed"] == 0 and diffs == 0
    report(10, ok, f"{AUDIT['checked']} trajectories audited, {AUDIT['failed']} over budget; "
                   f"{diffs} non-identical reruns")
    assert ok
