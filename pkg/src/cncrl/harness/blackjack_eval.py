"""Blackjack policy evaluation: engine vs first-visit Monte Carlo,
errors measured against the exact finite-horizon backup."""

from __future__ import annotations

import numpy as np

from ..engine import make_engine
from ..envs.base import Policy
from ..envs.blackjack import MAX_EPISODE_STEPS, N_STATES, blackjack_env, target_policy_blackjack
from ..errors import ConfigError
from ..oracle.qtables import q_via_dp
from .config import out_dir, trial_streams
from .mc import McBaseline
from .reporting import mean_se_median, write_csv, write_manifest

DEFAULT_CHECKPOINTS = (0, 1000, 2000, 5000, 10000, 20000, 50000, 100000)


class _LiftedPolicy(Policy):
    """The table policy extended over the appended terminal state."""

    def __init__(self, inner: Policy, n_states: int):
        self.inner = inner
        self.n_states = n_states

    def action_probs(self, state_idx: int) -> np.ndarray:
        if state_idx >= self.n_states:
            return np.array([1.0, 0.0])
        return self.inner.action_probs(state_idx)

    def sample(self, state_idx: int, rng) -> int:
        if state_idx >= self.n_states:
            return 0
        return self.inner.sample(state_idx, rng)


def blackjack_ground_truth(horizon: int = MAX_EPISODE_STEPS):
    """(exact Q over the 200 states, boolean mask of on-policy pairs).

    On-policy pairs are the (state, policy action) pairs of states
    reachable under the target policy; those are the only pairs with
    positive stationary mass, hence the only ones either estimator's
    theory speaks to.
    """
    env = blackjack_env()
    policy = target_policy_blackjack()
    explicit = env.to_explicit()
    q_true = q_via_dp(explicit, _LiftedPolicy(policy, N_STATES), horizon)[:N_STATES]

    start = env.start_distribution()
    reachable = start > 0
    frontier = list(np.flatnonzero(reachable))
    while frontier:
        s = frontier.pop()
        a = int(np.argmax(policy.action_probs(s)))
        for s2, _, _ in explicit.kernel[s][a]:
            if s2 < N_STATES and not reachable[s2]:
                reachable[s2] = True
                frontier.append(s2)
    defined = np.zeros((N_STATES, 2), dtype=bool)
    for s in np.flatnonzero(reachable):
        defined[s, int(np.argmax(policy.action_probs(s)))] = True
    return q_true, defined


def engine_q_table(engine, n_states: int) -> np.ndarray:
    """Value estimates for every atomic state at once, mirroring the
    per-query posterior (including the degenerate fallback)."""
    z = np.asarray(engine.returns.values)
    out = np.empty((n_states, engine.n_actions))
    table = engine.state_table
    if hasattr(table, "full_score_table"):
        logs = table.full_score_table()  # (A, Z, S)
        for a in range(engine.n_actions):
            logw = logs[a] + engine._return_log_probs(a)[:, None]
            m = logw.max(axis=0)
            w = np.exp(logw - np.where(np.isfinite(m), m, 0.0))
            wsum = w.sum(axis=0)
            good = wsum > 0
            weights = np.where(good, w / np.where(good, wsum, 1.0), 0.0)
            vals = weights.T @ z
            if not good.all():
                rz = engine.return_models[a].probs()
                vals[~good] = float(np.dot(rz / rz.sum(), z))
            out[:, a] = vals
        return out
    for s in range(n_states):
        for a in range(engine.n_actions):
            out[s, a] = engine.q_value(s, a).value
    return out


def _checkpoint_metrics(engine, mc: McBaseline, q_true, defined):
    q_hat = engine_q_table(engine, N_STATES)
    err2 = (q_hat - q_true) ** 2
    cnc_mse = float(err2[defined].mean())
    cnc_maxse = float(err2[defined].max())
    mc_defined = defined & mc.defined
    if mc_defined.any():
        mc_err2 = (mc.estimates() - q_true) ** 2
        mc_mse = float(mc_err2[mc_defined].mean())
        mc_maxse = float(mc_err2[mc_defined].max())
    else:
        mc_mse = mc_maxse = float("nan")
    return cnc_mse, cnc_maxse, mc_mse, mc_maxse


def run_blackjack_eval(cfg: dict):
    episodes = int(cfg.get("episodes", 100_000))
    horizon = int(cfg.get("horizon", MAX_EPISODE_STEPS))
    checkpoints = sorted(set(int(c) for c in cfg.get("checkpoints", DEFAULT_CHECKPOINTS)
                             if int(c) <= episodes) | {0, episodes})
    trials = cfg["trials"]
    seed = cfg["seed"]

    env = blackjack_env()
    if horizon < env.max_episode_steps:
        raise ConfigError(
            f"horizon {horizon} is below blackjack's longest episode "
            f"({env.max_episode_steps})")
    policy = target_policy_blackjack()
    q_true, defined = blackjack_ground_truth(horizon)

    per_trial = {cp: [] for cp in checkpoints}
    trial_rows = []
    for trial in range(trials):
        streams = trial_streams(seed, trial)
        env_rng = streams["env"]
        engine = make_engine(
            env, horizon=horizon,
            state_model=cfg.get("state_model", "dirichlet"),
            state_params=cfg.get("state_params", {"alpha": 0.5}),
            return_model=cfg.get("return_model", "dirichlet"),
            return_params=cfg.get("return_params", {"alpha": 0.5}),
            seed=streams["engine"])
        mc = McBaseline(N_STATES, 2)

        def record(cp_episode):
            metrics = _checkpoint_metrics(engine, mc, q_true, defined)
            per_trial[cp_episode].append(metrics)
            trial_rows.append([trial, cp_episode, *metrics])

        cp_set = set(checkpoints)
        if 0 in cp_set:
            record(0)
        state = env.reset(env_rng)
        engine.begin_episode(state)
        for episode in range(1, episodes + 1):
            transitions = []
            while True:
                s_idx = env.state_index(state)
                a = policy.sample(s_idx, env_rng)
                nxt, r, terminal = env.step(state, a, env_rng)
                engine.step(a, nxt, r, episode_end=terminal)
                transitions.append((s_idx, a, r))
                if terminal:
                    break
                state = nxt
            mc.update_episode(transitions)
            state = env.reset(env_rng)
            engine.begin_episode(state)
            if episode in cp_set:
                record(episode)

    out = out_dir(cfg)
    write_manifest(out / "manifest.txt", cfg)
    write_csv(out / "trials.csv",
              ["trial", "episode", "cnc_mse", "cnc_maxse", "mc_mse", "mc_maxse"],
              trial_rows)
    curve_rows = []
    for cp in checkpoints:
        stats = []
        for col in range(4):
            vals = [m[col] for m in per_trial[cp]]
            stats.extend(mean_se_median(vals) if not any(np.isnan(vals)) else
                         (float("nan"),) * 3)
        curve_rows.append([cp, *stats])
    write_csv(out / "curve.csv",
              ["episode",
               "cnc_mse", "cnc_mse_se", "cnc_mse_median",
               "cnc_maxse", "cnc_maxse_se", "cnc_maxse_median",
               "mc_mse", "mc_mse_se", "mc_mse_median",
               "mc_maxse", "mc_maxse_se", "mc_maxse_median"],
              curve_rows)
    return out
