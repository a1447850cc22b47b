"""On-policy control runs: a value engine driving an epsilon-greedy
policy in the standard act / observe / update loop, plus the
uniform-random baseline it is measured against."""

from __future__ import annotations

import math

import numpy as np

from ..engine import EpsilonSchedule, make_engine
from ..envs.explicit import load_explicit_mdp
from ..envs.minipong import MiniPongEnv
from ..errors import ConfigError
from .config import out_dir, trial_streams
from .reporting import mean_se_median, write_csv, write_manifest


def build_env(env_cfg: dict):
    kind = env_cfg.get("kind")
    if kind == "minipong":
        return MiniPongEnv(
            width=env_cfg.get("width", 16), height=env_cfg.get("height", 16),
            paddle_len=env_cfg.get("paddle_len", 3),
            opponent_fail=env_cfg.get("opponent_fail", 0.10),
            win_points=env_cfg.get("win_points", 5))
    if kind == "explicit":
        if "path" not in env_cfg:
            raise ConfigError("explicit environment needs a 'path'")
        return load_explicit_mdp(env_cfg["path"])
    raise ConfigError(f"control environment must be minipong or explicit, got {kind!r}")


def epsilon_schedule(cfg: dict) -> EpsilonSchedule:
    eps = cfg.get("epsilon", {})
    return EpsilonSchedule(
        start=float(eps.get("start", 1.0)),
        floor=float(eps.get("floor", 0.02)),
        decay_steps=int(eps.get("decay_steps", 200_000)))


def run_control_trial(cfg: dict, trial: int):
    """One trial; returns (report rows, list of (step, episode_score))."""
    env = build_env(cfg["env"])
    agent = cfg.get("agent", "cnc")
    steps = int(cfg.get("steps", 500_000))
    report_every = int(cfg.get("report_every", max(1, steps // 100)))
    streams = trial_streams(cfg["seed"], trial)
    env_rng, agent_rng = streams["env"], streams["agent"]

    engine = None
    sched = epsilon_schedule(cfg)
    if agent == "cnc":
        engine = make_engine(
            env, horizon=int(cfg.get("horizon", 16)),
            state_model=cfg.get("state_model", "factored-sad"),
            state_params=cfg.get("state_params", {}),
            return_model=cfg.get("return_model", "sad"),
            return_params=cfg.get("return_params", {}),
            view=cfg.get("view"), seed=streams["engine"], epsilon=sched)
    elif agent != "random":
        raise ConfigError(f"agent must be 'cnc' or 'random', got {agent!r}")

    is_pong = isinstance(env, MiniPongEnv)
    state = env.reset(env_rng)
    if engine is not None:
        engine.begin_episode(state)
    rows = []
    episode_scores = []
    seg_reward = 0.0
    seg_scores = []
    game_score = 0.0
    for t in range(steps):
        if engine is None:
            a = int(agent_rng.integers(env.n_actions))
        else:
            a = engine.epsilon_greedy_action(state, t)
        nxt, r, terminal = env.step(state, a, env_rng)
        game_end = env.game_over(state, r) if is_pong else terminal
        if engine is not None:
            engine.step(a, nxt, r, episode_end=terminal)
        seg_reward += r
        game_score += r
        if game_end:
            episode_scores.append((t, game_score))
            seg_scores.append(game_score)
            game_score = 0.0
        if terminal:
            state = env.reset(env_rng)
            if engine is not None:
                engine.begin_episode(state)
        else:
            state = nxt
        if (t + 1) % report_every == 0:
            eps_now = sched.value(t) if agent == "cnc" else 1.0
            mean_score = float(np.mean(seg_scores)) if seg_scores else float("nan")
            rows.append([trial, t + 1, eps_now, seg_reward / report_every,
                         len(seg_scores), mean_score])
            seg_reward = 0.0
            seg_scores = []
    return rows, episode_scores


def final_phase_scores(episode_scores, steps: int, fraction: float = 0.2):
    cut = (1.0 - fraction) * steps
    return [score for (t, score) in episode_scores if t >= cut]


def run_control(cfg: dict):
    trials = cfg["trials"]
    steps = int(cfg.get("steps", 500_000))
    all_rows = []
    summaries = []
    per_step: dict[int, list] = {}
    for trial in range(trials):
        rows, episode_scores = run_control_trial(cfg, trial)
        all_rows.extend(rows)
        for row in rows:
            per_step.setdefault(row[1], []).append(row)
        finals = final_phase_scores(episode_scores, steps)
        mean_final = float(np.mean(finals)) if finals else float("nan")
        summaries.append([trial, len(episode_scores), len(finals), mean_final])

    out = out_dir(cfg)
    write_manifest(out / "manifest.txt", cfg)
    write_csv(out / "trials.csv",
              ["trial", "step", "epsilon", "avg_reward", "episodes", "mean_episode_score"],
              all_rows)
    curve_rows = []
    for step in sorted(per_step):
        rows = per_step[step]
        rew_mean, rew_se, _ = mean_se_median([r[3] for r in rows])
        scores = [r[5] for r in rows if not math.isnan(r[5])]
        if scores:
            sc_mean, sc_se, sc_med = mean_se_median(scores)
        else:
            sc_mean = sc_se = sc_med = float("nan")
        curve_rows.append([step, rows[0][2], rew_mean, rew_se, sc_mean, sc_se, sc_med])
    write_csv(out / "curve.csv",
              ["step", "epsilon", "avg_reward", "avg_reward_se",
               "episode_score", "episode_score_se", "episode_score_median"],
              curve_rows)
    write_csv(out / "summary.csv",
              ["trial", "episodes", "final_phase_episodes", "final_phase_mean_score"],
              summaries)
    return out
