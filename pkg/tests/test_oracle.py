import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ora import dual_value, optimal_multiplier, solve_opt
from ora.core import FiniteMenu, Instance, InstanceParams, LinearThreshold
from ora.harness.generators import gen_finite_menu_random, gen_stochastic_linear
from ora.oracle import GridMismatch, brute_force

from .strategies import Q

# Frozen reference optima. The first came from enumerating all four joint
# choices by hand; the other two were computed once with an external LP/MILP
# solver (HiGHS) on the same seeded instances.
T2_OPT = 1.1
EXAMPLE1_SEED7_OPT = 171.5364214556358
MENU_SEED11_OPT = 26.891880801221323


def t2_instance(quantum):
    p = InstanceParams(B=0.8, T=2, f_bar=1.0, b_bar=0.6, b_low=0.1, u=2.0, l=0.0)
    menus = [FiniteMenu.from_pairs([(1.0, 0.6), (0.2, 0.1)]),
             FiniteMenu.from_pairs([(0.9, 0.6), (0.1, 0.1)])]
    return Instance(p, menus, quantum)


@pytest.mark.parametrize("quantum", [0.1, None])
def test_two_round_example(quantum):
    sol = solve_opt(t2_instance(quantum))
    assert sol.value == pytest.approx(T2_OPT, abs=1e-12)
    assert sorted(a.consumption for a in sol.actions) == [0.1, 0.6]
    assert sol.dual_gap >= -1e-9


def test_single_round_is_menu_max():
    p = InstanceParams(B=1.0, T=1, f_bar=2.0, b_bar=1.0, b_low=0.25, u=4.0, l=0.0)
    m = FiniteMenu.from_pairs([(0.0, 0.25), (1.5, 0.5), (1.2, 1.0)])
    assert solve_opt(Instance(p, [m], 0.25)).value == 1.5


def test_degenerate_single_action():
    p = InstanceParams(B=0.5, T=1, f_bar=1.0, b_bar=0.5, b_low=0.5, u=2.0, l=0.0)
    sol = solve_opt(Instance(p, [FiniteMenu.from_pairs([(1.0, 0.5)])]))
    assert sol.value == 1.0 and sol.dual_gap >= 0


def test_example1_seed7_against_lp():
    inst = gen_stochastic_linear(2000, 0.1, 0.01, 7)
    sol = solve_opt(inst)
    assert sol.value == pytest.approx(EXAMPLE1_SEED7_OPT, rel=1e-12)
    # the linear relaxation has no duality gap
    assert sol.dual_gap == pytest.approx(0.0, abs=1e-5)
    assert sol.consumption <= inst.params.B * (1 + 1e-12)


def test_menu_against_milp():
    inst = gen_finite_menu_random(40, 0.4, 3, (0.2, 2.0), 0.125, 11)
    assert solve_opt(inst).value == pytest.approx(MENU_SEED11_OPT, rel=1e-12)


def test_linear_fill_structure():
    p = InstanceParams(B=1.5, T=3, f_bar=1.0, b_bar=1.1, b_low=0.1, u=1.0, l=0.0)
    reqs = [LinearThreshold(a, 0.1, 1.0) for a in (0.3, 0.9, 0.5)]
    sol = solve_opt(Instance(p, reqs))
    # 1.2 left after floors: full x on a=0.9, then 0.2 on a=0.5
    assert [a.x for a in sol.actions] == pytest.approx([0.0, 1.0, 0.2])
    assert sol.value == pytest.approx(0.9 + 0.1)


def test_dual_examples():
    inst = t2_instance(0.1)
    assert dual_value(0.0, inst) == pytest.approx(1.9 + 0.0)
    lam = inst.params.f_bar / inst.params.b_low
    # every inner max is attained by an action with density at most lam
    inner = [max(r - lam * c for r, c in m.pairs()) for m in inst.requests]
    assert dual_value(lam, inst) == pytest.approx(sum(inner) + lam * inst.params.B)


def test_dual_at_high_price_uses_do_nothing():
    p = InstanceParams(B=5.0, T=10, f_bar=2.0, b_bar=1.0, b_low=0.125, u=2.0, l=0.0)
    rng = np.random.default_rng(0)
    menus = [FiniteMenu.from_pairs([(0.0, 0.125)] + [(float(rng.uniform(0, 2)) * k / 8, k / 8)
                                                     for k in (3, 5, 8)]) for _ in range(10)]
    inst = Instance(p, menus, 0.125)
    lam = p.f_bar / p.b_low  # every density is below this price
    assert dual_value(lam, inst) == pytest.approx(lam * (p.B - p.T * p.b_low))


def test_multiplier_zero_when_budget_is_loose():
    p = InstanceParams(B=10.0, T=3, f_bar=1.0, b_bar=1.0, b_low=0.25, u=4.0, l=0.0)
    m = FiniteMenu.from_pairs([(0.0, 0.25), (1.0, 1.0)])
    lam, d = optimal_multiplier(Instance(p, [m] * 3, 0.25))
    assert lam == pytest.approx(0.0, abs=1e-6)
    assert d == pytest.approx(3.0, abs=1e-5)


def test_lambda_star_monte_carlo():
    lams = [solve_opt(gen_stochastic_linear(2000, 0.1, 0.01, s), want_actions=False).lambda_star
            for s in range(50)]
    se = np.std(lams, ddof=1) / math.sqrt(len(lams))
    assert abs(np.mean(lams) - 0.91) <= max(5 * se, 0.005)


def test_errors():
    p = InstanceParams(B=1.0, T=2, f_bar=1.0, b_bar=0.5, b_low=0.25, u=4.0, l=0.0)
    off_grid = FiniteMenu.from_pairs([(0.0, 0.25), (0.5, 0.3)])
    with pytest.raises(GridMismatch, match="grid mismatch"):
        solve_opt(Instance(p, [off_grid] * 2, 0.25))
    bad = InstanceParams(B=1.0, T=2, f_bar=1.0, b_bar=0.6, b_low=0.6, u=4.0, l=0.0, check=False)
    with pytest.raises(ValueError, match="infeasible"):
        solve_opt(Instance(bad, [FiniteMenu.from_pairs([(0.0, 0.6)])] * 2))
    long = InstanceParams(B=20.0, T=13, f_bar=1.0, b_bar=0.5, b_low=0.25, u=4.0, l=0.0)
    with pytest.raises(ValueError, match="quantum"):
        solve_opt(Instance(long, [off_grid] * 13))


# -- properties ---------------------------------------------------------------


@st.composite
def small_grid_instances(draw, max_T=6):
    T = draw(st.integers(1, max_T))
    menus = []
    for _ in range(T):
        n = draw(st.integers(1, 4))
        units = draw(st.lists(st.integers(1, 8), min_size=n, max_size=n))
        rewards = draw(st.lists(st.floats(0.0, 4.0), min_size=n, max_size=n))
        menus.append(FiniteMenu.from_pairs(list(zip(rewards, [k * Q for k in units]))))
    floor = sum(m.min_consumption for m in menus)
    extra = draw(st.integers(0, 8 * T)) * Q
    p = InstanceParams(B=floor + extra, T=T, f_bar=4.0, b_bar=1.0, b_low=Q, u=32.0, l=0.0)
    return Instance(p, menus, Q)


def _enumerate(inst):
    best = -math.inf
    for combo in itertools.product(*[m.actions for m in inst.requests]):
        if math.fsum(a.consumption for a in combo) <= inst.params.B + 1e-9:
            best = max(best, math.fsum(a.reward for a in combo))
    return best


@given(small_grid_instances())
def test_dp_equals_enumeration(inst):
    dp = solve_opt(inst, with_dual=False)
    assert dp.value == _enumerate(inst)
    assert brute_force(inst).value == dp.value
    assert dp.consumption <= inst.params.B
    assert all(a.consumption >= inst.params.b_low for a in dp.actions)


@given(small_grid_instances(), st.floats(0.0, 40.0))
def test_weak_duality(inst, lam):
    assert dual_value(lam, inst) - solve_opt(inst, with_dual=False).value >= -1e-9
