from .env import (
    EnvConfig,
    InitDistribution,
    LocalizationEnv,
    RewardBreakdown,
    StepOutcome,
    TerminalKind,
    lateral_distance_to_axis,
    lateral_error_sum,
    make_env,
    reward,
)
from .evaluate import LocalizationStats, evaluate, rollout
from .sac import Policy, SacConfig, TrainingCurves, init_policy, train_sac

__all__ = [
    "EnvConfig",
    "InitDistribution",
    "LocalizationEnv",
    "LocalizationStats",
    "Policy",
    "RewardBreakdown",
    "SacConfig",
    "StepOutcome",
    "TerminalKind",
    "TrainingCurves",
    "evaluate",
    "init_policy",
    "lateral_distance_to_axis",
    "lateral_error_sum",
    "make_env",
    "reward",
    "rollout",
    "train_sac",
]
