"""Online resource allocation with calendar aging: robust and learning-augmented policies."""

from .baselines import OmdPolicy, RoaPolicy, StaticPolicy, omd_step, roa_step, static_policy_step
from .core import (
    NULL_ACTION,
    Action,
    FiniteMenu,
    Instance,
    InstanceParams,
    LinearThreshold,
    StepRecord,
    Trajectory,
    Violation,
    best_response,
    validate_request,
)
from .kernels import BACKEND
from .learning_augmented import (
    LaState,
    LearningAugmentedPolicy,
    SequencePolicy,
    check_endgame,
    constraints_ok,
    la_step,
    necessity_adversary,
    select_theta,
)
from .oracle import OfflineSolution, dual_value, optimal_multiplier, solve_opt
from .robust import (
    RobustPolicy,
    RobustState,
    default_stepsize,
    path_length,
    robust_init,
    robust_step,
)

__version__ = "0.1.0"

__all__ = [
    "Action", "FiniteMenu", "LinearThreshold", "Instance", "InstanceParams", "NULL_ACTION",
    "StepRecord", "Trajectory", "Violation", "best_response", "validate_request",
    "RobustPolicy", "RobustState", "robust_init", "robust_step", "default_stepsize", "path_length",
    "OmdPolicy", "RoaPolicy", "StaticPolicy", "omd_step", "roa_step", "static_policy_step",
    "OfflineSolution", "solve_opt", "dual_value", "optimal_multiplier",
    "LaState", "LearningAugmentedPolicy", "SequencePolicy", "check_endgame", "constraints_ok",
    "select_theta", "la_step", "necessity_adversary", "BACKEND",
]
