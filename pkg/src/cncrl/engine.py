"""The online value engine.

Feed it the trajectory one (action, state, reward) triple at a time.
Once the lagged window holds `horizon` triples, the oldest one has a
complete window return: the sum of the window's rewards.  That consumes
the triple: the state model in bucket (return, action) is updated with
the state the action was taken from, and the action's return model is
updated with the return.  Querying a state-action pair combines the
bucket scores with the return model by Bayes rule to weight each possible
return; the value estimate is the weighted mean.

Episodic environments flush the window at episode end, so every consumed
triple's return is the reward sum to the terminal step; the configured
horizon must cover the longest episode.  Continuing environments never
flush and the window slides across everything.

An engine has one logical writer (the trajectory consumer feeding
`step`); value queries are read-only and safe between steps.  Run
multiple trials on independent engine instances.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from .buckets import make_state_table
from .codec import StateCodec, ViewSpec
from .coding import make_model
from .coding.base import normalize_log_weights, pack_records, unpack_records
from .errors import ConfigError, InputError


class ReturnAlphabet:
    """Ordered finite set of achievable window returns."""

    def __init__(self, values):
        self.values = tuple(sorted(float(v) for v in values))
        if len(set(self.values)) != len(self.values):
            raise InputError("return values must be distinct")
        self.index = {v: i for i, v in enumerate(self.values)}

    def __len__(self):
        return len(self.values)

    def idx(self, value: float) -> int:
        i = self.index.get(value)
        if i is not None:
            return i
        # Guard against float drift in summed rewards.
        arr = np.asarray(self.values)
        j = int(np.argmin(np.abs(arr - value)))
        if abs(arr[j] - value) <= 1e-9:
            return j
        raise InputError(
            f"return {value} is not in the declared alphabet; "
            "the return alphabet was mis-declared for this environment")


@dataclass
class QEstimate:
    """Value estimate with its per-return posterior weights attached."""

    value: float
    weights: np.ndarray
    z_values: tuple


@dataclass
class EpsilonSchedule:
    """Linear decay from `start` to `floor` over `decay_steps` steps."""

    start: float = 1.0
    floor: float = 0.02
    decay_steps: int = 200_000

    def value(self, t: int) -> float:
        if self.decay_steps <= 0:
            return self.floor
        frac = min(1.0, max(0.0, t / self.decay_steps))
        return self.start + (self.floor - self.start) * frac


class CncEngine:
    """Bucketed online policy evaluation plus greedy action selection."""

    def __init__(self, *, n_actions: int, return_values, reward_values,
                 state_table, return_models, codec: StateCodec, horizon: int,
                 truncate_at_episode_end: bool, seed=0,
                 epsilon: EpsilonSchedule | None = None):
        if horizon < 1:
            raise ConfigError("horizon must be >= 1")
        self.n_actions = int(n_actions)
        self.returns = ReturnAlphabet(return_values)
        self.reward_values = tuple(float(r) for r in reward_values)
        self.state_table = state_table
        self.return_models = return_models
        self.codec = codec
        self.horizon = int(horizon)
        self.truncate_at_episode_end = bool(truncate_at_episode_end)
        self.epsilon_schedule = epsilon or EpsilonSchedule()
        self.rng = np.random.default_rng(seed)

        self.window: deque = deque()
        self.window_sum = 0.0
        self.prev_block: tuple | None = None
        self.steps_seen = 0
        self.consumed = 0
        self.degenerate_posteriors = 0
        self._rz_cache = [None] * self.n_actions

    # -- trajectory intake --

    def begin_episode(self, state) -> None:
        """Register the state the next action will be taken from."""
        self.prev_block = self.codec.encode(state)

    def step(self, action: int, state, reward: float, episode_end: bool = False) -> None:
        """Consume one transition; see the module docstring for the
        bucketing rule."""
        if not 0 <= action < self.n_actions:
            raise InputError(f"action {action} out of range")
        if reward not in self.reward_values:
            raise InputError(f"reward {reward} not in declared set {self.reward_values}")
        if self.prev_block is None:
            raise InputError("begin_episode must be called before the first step")
        self.window.append((action, self.prev_block, reward))
        self.window_sum += reward
        self.steps_seen += 1
        if len(self.window) == self.horizon:
            self._consume_oldest()
        if episode_end and self.truncate_at_episode_end:
            while self.window:
                self._consume_oldest()
            self.window_sum = 0.0
            self.prev_block = None
        else:
            self.prev_block = self.codec.encode(state)

    def _consume_oldest(self) -> None:
        z_value = self.window_sum
        action, block, reward = self.window.popleft()
        self.window_sum -= reward
        z_idx = self.returns.idx(z_value)
        self.state_table.update(z_idx, action, block)
        self.return_models[action].update(z_idx)
        self.consumed += 1

    # -- queries --

    def _return_stats(self, action: int):
        """(probs, log probs) of the action's return model, cached until
        that model's next update."""
        model = self.return_models[action]
        cached = self._rz_cache[action]
        if cached is not None and cached[0] == model.n_updates:
            return cached[1], cached[2]
        probs = model.probs()
        with np.errstate(divide="ignore"):
            logs = np.log(probs)
        self._rz_cache[action] = (model.n_updates, probs, logs)
        return probs, logs

    def _return_log_probs(self, action: int) -> np.ndarray:
        return self._return_stats(action)[1]

    def _combine(self, log_scores: np.ndarray, action: int) -> np.ndarray:
        probs, logs = self._return_stats(action)
        weights = normalize_log_weights(log_scores + logs)
        if np.isnan(weights).any():
            # Every numerator vanished (possible with unnormalized scores
            # underflowing): fall back to the return model alone.
            self.degenerate_posteriors += 1
            weights = probs / probs.sum()
        return weights

    def _posterior_from_block(self, block, action: int) -> np.ndarray:
        return self._combine(self.state_table.log_scores(action, block), action)

    def return_posterior(self, state, action: int) -> np.ndarray:
        """Posterior weight of each declared return for (state, action)."""
        if not 0 <= action < self.n_actions:
            raise InputError(f"action {action} out of range")
        return self._posterior_from_block(self.codec.encode(state), action)

    def q_value(self, state, action: int) -> QEstimate:
        w = self.return_posterior(state, action)
        value = float(np.dot(w, self.returns.values))
        return QEstimate(value, w, self.returns.values)

    def q_values(self, state) -> np.ndarray:
        block = self.codec.encode(state)
        vals = np.empty(self.n_actions)
        z = np.asarray(self.returns.values)
        if hasattr(self.state_table, "log_scores_all_actions"):
            all_scores = self.state_table.log_scores_all_actions(block)
            for a in range(self.n_actions):
                vals[a] = float(np.dot(self._combine(all_scores[a], a), z))
            return vals
        for a in range(self.n_actions):
            vals[a] = float(np.dot(self._posterior_from_block(block, a), z))
        return vals

    def greedy_action(self, state) -> int:
        """Argmax of the value estimates; exact ties break uniformly."""
        vals = self.q_values(state)
        best = np.flatnonzero(vals == vals.max())
        if len(best) == 1:
            return int(best[0])
        return int(best[self.rng.integers(len(best))])

    def epsilon(self, t: int) -> float:
        return self.epsilon_schedule.value(t)

    def epsilon_greedy_action(self, state, t: int) -> int:
        if self.rng.random() < self.epsilon_schedule.value(t):
            return int(self.rng.integers(self.n_actions))
        return self.greedy_action(state)

    # -- snapshot / restore --

    def snapshot(self) -> bytes:
        window_flat = []
        for action, block, reward in self.window:
            window_flat.append((action, list(block), reward))
        meta = {
            "window": window_flat,
            "window_sum": self.window_sum,
            "prev_block": list(self.prev_block) if self.prev_block is not None else None,
            "steps_seen": self.steps_seen,
            "consumed": self.consumed,
            "degenerate_posteriors": self.degenerate_posteriors,
            "rng": self.rng.bit_generator.state,
        }
        records = [
            json.dumps(meta, default=_json_bytes).encode(),
            self.state_table.state_bytes(),
        ]
        for m in self.return_models:
            records.append(m.to_bytes())
        return pack_records(records)

    def restore(self, data: bytes) -> None:
        records = unpack_records(data)
        meta = json.loads(records[0].decode(), object_hook=_json_unbytes)
        self.window = deque(
            (a, _block_back(block), r) for a, block, r in meta["window"])
        self.window_sum = meta["window_sum"]
        self.prev_block = _block_back(meta["prev_block"]) if meta["prev_block"] is not None else None
        self.steps_seen = meta["steps_seen"]
        self.consumed = meta["consumed"]
        self.degenerate_posteriors = meta["degenerate_posteriors"]
        self.rng = np.random.default_rng()
        self.rng.bit_generator.state = meta["rng"]
        self.state_table.load_state_bytes(records[1])
        for m, rec in zip(self.return_models, records[2:]):
            m.restore(rec)
        self._rz_cache = [None] * self.n_actions


def _json_bytes(obj):
    if isinstance(obj, bytes):
        return {"__bytes__": obj.hex()}
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _json_unbytes(d):
    if "__bytes__" in d:
        return bytes.fromhex(d["__bytes__"])
    return d


def _block_back(block):
    return tuple(bytes(b) if isinstance(b, bytes) else b for b in block)


def make_engine(env, *, horizon: int, state_model: str = "dirichlet",
                state_params=None, return_model: str = "dirichlet",
                return_params=None, view=None, seed=0,
                epsilon: EpsilonSchedule | None = None,
                force_generic: bool = False) -> CncEngine:
    """Wire an engine for an environment.

    The return alphabet is declared up front from the environment: whole
    episode returns for episodic environments (whose horizon must cover
    the longest episode), achievable window sums otherwise.
    """
    if env.episodic and env.max_episode_steps is not None \
            and horizon < env.max_episode_steps:
        raise ConfigError(
            f"horizon {horizon} is below the environment's longest episode "
            f"({env.max_episode_steps}); window returns would not be whole-episode returns")
    codec = StateCodec(env, ViewSpec.from_config(view))
    return_values = env.return_alphabet(horizon)
    n_z = len(return_values)
    state_table = make_state_table(state_model, state_params, codec, n_z,
                                   env.n_actions, force_generic=force_generic)
    return_models = [
        make_model(return_model, atomic_size=n_z, params=dict(return_params or {}))
        for _ in range(env.n_actions)
    ]
    return CncEngine(
        n_actions=env.n_actions, return_values=return_values,
        reward_values=env.reward_values, state_table=state_table,
        return_models=return_models, codec=codec, horizon=horizon,
        truncate_at_episode_end=env.episodic, seed=seed, epsilon=epsilon)
