"""Finite-MDP environment contract, policies, and trajectory streaming."""

from __future__ import annotations

import csv
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..errors import InputError


class Mdp(ABC):
    """A finite MDP with explicit state and a pure step function.

    `step` must depend only on (state, action, rng draws), never on hidden
    instance state, so independent rollouts with distinct generators are
    fully parallel.  Environments that end episodes report `terminal`;
    `run_policy` auto-resets and marks the boundary.
    """

    n_states: int
    n_actions: int
    reward_values: tuple[float, ...]
    #: True when the environment has terminal states and window returns
    #: must truncate there (whole-episode totals); continuing environments
    #: let the lagged window run across any internal resets.
    episodic: bool = False
    max_episode_steps: int | None = None
    factor_alphabets: tuple[int, ...] | None = None
    grid_shape: tuple[int, int] | None = None

    @abstractmethod
    def reset(self, rng) -> object:
        """Sample a start state."""

    @abstractmethod
    def step(self, state, action: int, rng):
        """Return (next_state, reward, terminal)."""

    @abstractmethod
    def state_index(self, state) -> int:
        """Atomic index of a state, in [0, n_states)."""

    def factor_view(self, state) -> tuple[int, ...]:
        raise InputError(f"{type(self).__name__} has no factored view")

    def return_alphabet(self, horizon: int) -> tuple[float, ...]:
        """Declared return alphabet for the given window length."""
        if self.episodic:
            raise NotImplementedError
        return achievable_window_sums(self.reward_values, horizon)

    def check_reward(self, reward: float) -> float:
        if reward not in self.reward_values:
            raise InputError(f"reward {reward} not in declared set {self.reward_values}")
        return reward


def achievable_window_sums(reward_values, horizon: int) -> tuple[float, ...]:
    """All sums of `horizon` values drawn from the reward set, smallest
    first.  This is the tightest grid between horizon*r_min and
    horizon*r_max at the rewards' granularity."""
    sums = {0.0}
    for _ in range(horizon):
        sums = {s + r for s in sums for r in reward_values}
    return tuple(sorted(sums))


class Policy(ABC):
    """Stationary policy over atomic state indices."""

    @abstractmethod
    def action_probs(self, state_idx: int) -> np.ndarray: ...

    def sample(self, state_idx: int, rng) -> int:
        p = self.action_probs(state_idx)
        return int(rng.choice(len(p), p=p))


class TabularPolicy(Policy):
    """Row-normalized action table."""

    def __init__(self, table):
        table = np.asarray(table, dtype=float)
        if np.any(table < 0):
            raise InputError("policy probabilities must be nonnegative")
        sums = table.sum(axis=1)
        if np.any(sums <= 0):
            raise InputError("every state needs positive action mass")
        self.table = table / sums[:, None]

    def action_probs(self, state_idx: int) -> np.ndarray:
        return self.table[state_idx]

    def sample(self, state_idx: int, rng) -> int:
        row = self.table[state_idx]
        u = rng.random()
        acc = 0.0
        for a in range(len(row) - 1):
            acc += row[a]
            if u < acc:
                return a
        return len(row) - 1


class RulePolicy(Policy):
    """Deterministic policy given by a rule on atomic state indices."""

    def __init__(self, n_actions: int, rule):
        self.n_actions = n_actions
        self.rule = rule

    def action_probs(self, state_idx: int) -> np.ndarray:
        p = np.zeros(self.n_actions)
        p[self.rule(state_idx)] = 1.0
        return p

    def sample(self, state_idx: int, rng) -> int:
        return self.rule(state_idx)


@dataclass
class StepRecord:
    """One emitted transition: the action taken from `prev_state` and the
    resulting state and reward."""

    t: int
    episode: int
    action: int
    state: object
    reward: float
    episode_end: bool
    prev_state: object


def run_policy(env: Mdp, policy: Policy, steps: int, seed):
    """Stream `steps` transitions of `policy` on `env`.

    Deterministic given the seed; episodic environments reset inside the
    stream and flag the boundary on the terminal record.
    """
    if steps < 1:
        raise InputError("steps must be >= 1")
    rng = np.random.default_rng(seed)
    state = env.reset(rng)
    episode = 0
    for t in range(steps):
        a = policy.sample(env.state_index(state), rng)
        nxt, r, terminal = env.step(state, a, rng)
        env.check_reward(r)
        yield StepRecord(t, episode, a, nxt, r, terminal, state)
        if terminal:
            episode += 1
            state = env.reset(rng)
        else:
            state = nxt


def write_trajectory_csv(path, env: Mdp, records) -> None:
    """Trajectory log: step,episode,action,state,reward."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "episode", "action", "state", "reward"])
        for rec in records:
            w.writerow([rec.t, rec.episode, rec.action,
                        env.state_index(rec.state), repr(rec.reward)])
