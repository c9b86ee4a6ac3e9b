import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ora import RobustPolicy, default_stepsize, path_length, robust_init, robust_step
from ora.core import FiniteMenu, Instance, InstanceParams, LinearThreshold
from ora.harness.generators import gen_stochastic_linear
from ora.harness.metrics import audit_budget
from ora.harness.runner import run_episode
from ora.robust import (
    RobustState,
    dynamic_regret,
    path_length_bound,
    project_correction,
    rolling_average_violations,
)

P = InstanceParams(B=200.0, T=2000, f_bar=1.0, b_bar=1.01, b_low=0.01, u=1.0, l=0.0)

# sqrt(ln T / T) evaluated independently at 30 digits and frozen
ETA_2000 = 0.0616477998777818605
ETA_E2 = 0.520260095022888896


def test_default_stepsize_values():
    assert default_stepsize(2000) == pytest.approx(ETA_2000, rel=1e-15)
    T = math.exp(2)
    assert math.sqrt(math.log(T) / T) == pytest.approx(ETA_E2, rel=1e-15)
    with pytest.raises(ValueError):
        default_stepsize(1)


def test_init():
    s = robust_init(P, 0.5, 0.02)
    assert (s.lam, s.mu, s.cum_reward, s.cum_consumption, s.t) == (0.5, 0.0, 0.0, 0.0, 0)
    assert robust_init(P, 0.5, default_stepsize(2000)).eta == pytest.approx(0.0617, abs=1e-4)
    for bad in ((0.0, 0.1), (0.5, 0.0), (0.5, -1.0), (P.lambda_max * 2, 0.1)):
        with pytest.raises(ValueError):
            robust_init(P, *bad)


def test_projection_arithmetic():
    assert project_correction(0.2, 0.1, -0.5, 1.0, 2.0) == pytest.approx(0.25)
    assert project_correction(0.2, 1.0, 5.0, 1.0, 2.0) == -1.0
    assert project_correction(0.2, 1.0, -5.0, 1.0, 2.0) == 1.0


def test_step_two_rounds():
    p = InstanceParams(B=10.0, T=10, f_bar=4.0, b_bar=1.0, b_low=0.1, u=4.0, l=0.0)
    s = robust_init(p, 0.5, 0.1)
    menu1 = FiniteMenu.from_pairs([(0.0, 0.5), (1.0, 0.5)])
    menu2 = FiniteMenu.from_pairs([(0.0, 0.5), (2.0, 0.5)])
    a, s = robust_step(s, menu1)
    assert a.id == 1
    assert s.p_bar == 2.0
    g = p.rho - 0.5
    assert s.mu == pytest.approx(-0.1 * g)
    a, s = robust_step(s, menu2)
    assert s.p_bar == 3.0  # (1 + 2) / (0.5 + 0.5)
    assert s.lam == s.p_bar + s.mu


def test_first_round_uses_raw_lambda():
    s = robust_init(P, 0.3, 0.05)
    a, _ = robust_step(s, LinearThreshold(0.31, 0.01, 1.0))
    assert a.x == 1.0
    a, _ = robust_step(s, LinearThreshold(0.29, 0.01, 1.0))
    assert a.x == 0.0


def test_path_length_examples():
    assert path_length([2.0] * 7) == 0.0
    assert path_length([1.0, 3.0, 2.0]) == 3.0
    assert path_length([5.0]) == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_example1_single_seed_near_opt(seed):
    from ora import solve_opt

    inst = gen_stochastic_linear(2000, 0.1, 0.01, seed)
    tr = run_episode(RobustPolicy(0.1, 1 / math.sqrt(2000)), inst)
    opt = solve_opt(inst, with_dual=False).value
    assert 0.95 * opt <= tr.total_reward <= opt
    assert path_length(tr) <= path_length_bound(inst.params)
    assert rolling_average_violations(tr, inst.params) == []
    lhs, bound = dynamic_regret(tr, inst.params, 1 / math.sqrt(2000))
    assert lhs <= bound


def test_kernel_and_step_paths_agree():
    inst = gen_stochastic_linear(500, 0.1, 0.01, 4)
    a = run_episode(RobustPolicy(), inst)
    b = run_episode(RobustPolicy(), inst, use_kernel=False)
    for col in ("lam", "p_bar", "mu", "reward", "consumption", "x"):
        assert np.array_equal(getattr(a, col), getattr(b, col), equal_nan=True), col


# -- properties ---------------------------------------------------------------


@st.composite
def linear_instances(draw):
    T = draw(st.integers(2, 60))
    rho = draw(st.floats(0.02, 0.9))
    delta = draw(st.floats(0.001, 0.5)) * rho
    a = draw(st.lists(st.floats(0.0, 1.0), min_size=T, max_size=T))
    p = InstanceParams(B=rho * T, T=T, f_bar=1.0, b_bar=1.0 + delta, b_low=delta, u=1.0, l=0.0)
    return Instance(p, tuple(LinearThreshold(x, delta, 1.0) for x in a))


@given(linear_instances(), st.floats(0.01, 1.0), st.floats(1e-3, 2.0))
def test_invariants_hold_on_random_instances(inst, frac, eta):
    p = inst.params
    tr = run_episode(RobustPolicy(frac * p.lambda_max, eta), inst)
    assert np.all(tr.lam >= 0) and np.all(tr.lam <= p.lambda_max * (1 + 1e-12))
    audit_budget(tr, inst)
    assert rolling_average_violations(tr, p) == []
    pb = tr.p_bar[~np.isnan(tr.p_bar)]
    assert np.all(pb >= 0) and np.all(pb <= p.f_bar / p.b_low * (1 + 1e-12))
    lhs, bound = dynamic_regret(tr, p, eta)
    assert lhs <= bound


@given(st.floats(-5, 5), st.floats(1e-3, 2), st.floats(-3, 3), st.floats(0, 10), st.floats(0, 10))
def test_projection_lands_in_box(mu, eta, g, p_bar, extra):
    lam_max = p_bar + extra
    m = project_correction(mu, eta, g, p_bar, lam_max)
    assert -p_bar <= m <= lam_max - p_bar
    assert 0 <= p_bar + m <= lam_max + 1e-12


def test_state_is_a_value():
    s = robust_init(P, 0.5, 0.1)
    _, s2 = robust_step(s, LinearThreshold(0.9, 0.01, 1.0))
    assert s.t == 0 and s2.t == 1
    assert isinstance(s2, RobustState)
