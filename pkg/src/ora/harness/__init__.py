"""Instance generation, episode execution, metrics and the command-line interface."""

from .generators import (
    SwitchAdversary,
    competitive_ratio_bound,
    gen_adversarial_switch,
    gen_finite_menu_random,
    gen_stochastic_linear,
)
from .metrics import Metrics, audit_budget, compute_metrics, regret_table
from .runner import run_adaptive, run_episode

__all__ = [
    "SwitchAdversary", "competitive_ratio_bound", "gen_adversarial_switch",
    "gen_finite_menu_random", "gen_stochastic_linear", "Metrics", "audit_budget",
    "compute_metrics", "regret_table", "run_adaptive", "run_episode",
]
