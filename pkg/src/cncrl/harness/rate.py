"""Convergence-rate check: with plain frequency estimators on a small
explicit MDP, the value error should shrink like one over the square
root of the sample count, i.e. halve per sample quadrupling."""

from __future__ import annotations

import numpy as np

from ..engine import make_engine
from ..envs.base import TabularPolicy, run_policy
from ..envs.explicit import load_explicit_mdp
from ..errors import ConfigError
from ..oracle import (
    build_augmented_chain,
    build_snake_chain,
    return_conditionals,
    solve_snake_stationary,
)
from ..oracle.qtables import q_via_dp
from .blackjack_eval import engine_q_table
from .certify import bundled_mdp_path
from .config import out_dir, trial_streams
from .reporting import write_csv, write_manifest

RATIO_BAND = (1.5, 3.0)


def _resolve_mdp(cfg: dict):
    spec = cfg.get("mdp", "bundled:rate3")
    if isinstance(spec, str) and spec.startswith("bundled:"):
        return load_explicit_mdp(bundled_mdp_path(spec.split(":", 1)[1]))
    return load_explicit_mdp(spec)


def run_rate_test(cfg: dict):
    """Returns (output dir, medians in band)."""
    mdp = _resolve_mdp(cfg)
    horizon = int(cfg.get("horizon", 2))
    checkpoints = sorted(int(c) for c in cfg.get("checkpoints", (10_000, 40_000, 160_000)))
    if len(checkpoints) < 2:
        raise ConfigError("rate test needs at least two checkpoints")
    trials = cfg["trials"]
    policy = TabularPolicy(np.full((mdp.n_states, mdp.n_actions),
                                   1.0 / mdp.n_actions))

    q_true = q_via_dp(mdp, policy, horizon)
    chain = build_augmented_chain(mdp, policy)
    snake = build_snake_chain(chain, horizon)
    cond = return_conditionals(snake, solve_snake_stationary(snake).dist)
    defined = cond.defined

    rows = []
    errors = np.zeros((trials, len(checkpoints)))
    for trial in range(trials):
        streams = trial_streams(cfg["seed"], trial)
        engine = make_engine(mdp, horizon=horizon, state_model="frequency",
                             return_model="frequency", seed=streams["engine"])
        env_seed = streams["env"]
        cp_iter = iter(enumerate(checkpoints))
        cp_i, cp = next(cp_iter)
        engine.begin_episode(mdp.reset(env_seed))
        for rec in run_policy(mdp, policy, checkpoints[-1], env_seed):
            engine.step(rec.action, rec.state, rec.reward)
            if rec.t + 1 == cp:
                q_hat = engine_q_table(engine, mdp.n_states)
                err = float(np.max(np.abs(q_hat - q_true)[defined]))
                errors[trial, cp_i] = err
                rows.append([trial, cp, err])
                nxt = next(cp_iter, None)
                if nxt is None:
                    break
                cp_i, cp = nxt

    ratio_rows = []
    medians = []
    for i in range(len(checkpoints) - 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = errors[:, i] / errors[:, i + 1]
        med = float(np.median(ratios))
        medians.append(med)
        ratio_rows.append([checkpoints[i], checkpoints[i + 1], med])
    ok = all(RATIO_BAND[0] <= m <= RATIO_BAND[1] for m in medians)

    out = out_dir(cfg)
    write_manifest(out / "manifest.txt", cfg)
    write_csv(out / "errors.csv", ["trial", "samples", "sup_error"], rows)
    write_csv(out / "ratios.csv", ["samples_from", "samples_to", "median_ratio"],
              ratio_rows)
    return out, ok
