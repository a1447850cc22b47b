"""Experiment runners, configuration, CLI, and baselines."""

from .blackjack_eval import blackjack_ground_truth, engine_q_table, run_blackjack_eval
from .certify import run_oracle_cert
from .config import config_hash, load_config, resolve, trial_streams
from .control import run_control, run_control_trial
from .mc import McBaseline
from .rate import run_rate_test

__all__ = [
    "run_blackjack_eval", "run_control", "run_control_trial", "run_oracle_cert",
    "run_rate_test", "McBaseline", "load_config", "resolve", "config_hash",
    "trial_streams", "blackjack_ground_truth", "engine_q_table",
]
