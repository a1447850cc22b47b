"""Experiment configuration: JSON files plus CLI overrides.

A config plus a seed fully determines a run; outputs are bit-identical
across reruns.  Every experiment accepts `seed`, `trials`, and `out`;
the rest is experiment-specific and validated by its runner.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import ConfigError

EXPERIMENTS = ("eval-blackjack", "control", "oracle-cert", "rate-test")


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def resolve(cfg: dict, experiment: str, seed=None, out=None, trials=None) -> dict:
    """Merge CLI overrides into a config and fill defaults."""
    cfg = dict(cfg)
    declared = cfg.setdefault("experiment", experiment)
    if declared != experiment:
        raise ConfigError(
            f"config declares experiment '{declared}' but '{experiment}' was requested")
    if seed is not None:
        cfg["seed"] = seed
    if out is not None:
        cfg["out"] = str(out)
    if trials is not None:
        cfg["trials"] = trials
    cfg.setdefault("seed", 0)
    cfg.setdefault("trials", 1)
    if "out" not in cfg:
        raise ConfigError("an output directory is required (config 'out' or --out)")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    if not isinstance(cfg["trials"], int) or cfg["trials"] < 1:
        raise ConfigError("trials must be a positive integer")
    return cfg


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def trial_streams(seed: int, trial: int, names=("env", "agent", "engine")):
    """Named, independent generators for one trial.

    Streams are split so that, e.g., changing the agent's draws never
    perturbs the environment's randomness.
    """
    root = np.random.SeedSequence(seed)
    trial_seq = root.spawn(trial + 1)[trial]
    children = trial_seq.spawn(len(names))
    return {name: np.random.default_rng(child) for name, child in zip(names, children)}


def out_dir(cfg: dict) -> Path:
    path = Path(cfg["out"])
    path.mkdir(parents=True, exist_ok=True)
    return path
