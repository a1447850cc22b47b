"""Environments: tabular blackjack, explicit-table MDPs, MiniPong."""

from .base import (
    Mdp,
    Policy,
    RulePolicy,
    StepRecord,
    TabularPolicy,
    achievable_window_sums,
    run_policy,
    write_trajectory_csv,
)
from .blackjack import BlackjackEnv, blackjack_env, target_policy_blackjack
from .explicit import ExplicitMdp, load_explicit_mdp, save_explicit_mdp, simulate_policy
from .minipong import MiniPongEnv, PongState

__all__ = [
    "Mdp", "Policy", "TabularPolicy", "RulePolicy", "StepRecord", "run_policy",
    "write_trajectory_csv", "achievable_window_sums", "BlackjackEnv", "blackjack_env",
    "target_policy_blackjack", "ExplicitMdp", "load_explicit_mdp", "save_explicit_mdp",
    "simulate_policy", "MiniPongEnv", "PongState",
]


def minipong_env(width: int = 16, height: int = 16, **kwargs) -> MiniPongEnv:
    return MiniPongEnv(width, height, **kwargs)
