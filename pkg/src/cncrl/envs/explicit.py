"""Explicit tabular MDPs and their text file format.

File format (UTF-8, '#' starts a comment anywhere on a line):

    states <n_states>
    actions <n_actions>
    rewards <r0> <r1> ...
    start <state>            # optional, default 0
    <s> <a> <s'> <r> <p>     # one line per transition, any order

For every (s, a) pair that appears, its probabilities must sum to 1
within 1e-12.  States/actions are 0-based indices; rewards are literal
values that must be members of the declared reward list.
"""

from __future__ import annotations

import numpy as np

from ..errors import InputError, MdpParseError
from .base import Mdp


class ExplicitMdp(Mdp):
    """Finite MDP with a fully enumerated transition kernel.

    `kernel[s][a]` is a list of (next_state, reward_index, probability)
    triples with positive probability.
    """

    episodic = False

    def __init__(self, n_states: int, n_actions: int, reward_values, kernel,
                 start_state: int = 0, name: str = "explicit"):
        self.n_states = int(n_states)
        self.n_actions = int(n_actions)
        self.reward_values = tuple(float(r) for r in reward_values)
        self.kernel = kernel
        self.start_state = int(start_state)
        self.name = name
        self._validate()
        self._cum = None

    def _validate(self):
        if not 0 <= self.start_state < self.n_states:
            raise InputError(f"start state {self.start_state} out of range")
        for s in range(self.n_states):
            for a in range(self.n_actions):
                rows = self.kernel[s][a]
                if not rows:
                    raise InputError(f"state {s} action {a} has no transitions")
                total = 0.0
                for s2, ri, p in rows:
                    if not 0 <= s2 < self.n_states:
                        raise InputError(f"dangling next-state index {s2}")
                    if not 0 <= ri < len(self.reward_values):
                        raise InputError(f"dangling reward index {ri}")
                    if p <= 0:
                        raise InputError("transition probabilities must be positive")
                    total += p
                if abs(total - 1.0) > 1e-12:
                    raise InputError(
                        f"probabilities for state {s} action {a} sum to {total!r}, not 1")

    def _cumulative(self):
        if self._cum is None:
            self._cum = [
                [np.cumsum([p for (_, _, p) in self.kernel[s][a]])
                 for a in range(self.n_actions)]
                for s in range(self.n_states)
            ]
        return self._cum

    def reset(self, rng):
        return self.start_state

    def step(self, state, action, rng):
        rows = self.kernel[state][action]
        if len(rows) == 1:
            s2, ri, _ = rows[0]
        else:
            cum = self._cumulative()[state][action]
            i = int(np.searchsorted(cum, rng.random(), side="right"))
            i = min(i, len(rows) - 1)
            s2, ri, _ = rows[i]
        return s2, self.reward_values[ri], False

    def state_index(self, state):
        return state

    def transition_probs(self, s: int, a: int):
        """Dense view P(s', r | s, a) as a (n_states, n_rewards) array."""
        out = np.zeros((self.n_states, len(self.reward_values)))
        for s2, ri, p in self.kernel[s][a]:
            out[s2, ri] += p
        return out


def load_explicit_mdp(path) -> ExplicitMdp:
    """Parse the text format; parse errors carry the offending line number."""
    n_states = n_actions = None
    rewards = None
    start = 0
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "states":
                    n_states = int(parts[1])
                elif parts[0] == "actions":
                    n_actions = int(parts[1])
                elif parts[0] == "rewards":
                    rewards = [float(v) for v in parts[1:]]
                elif parts[0] == "start":
                    start = int(parts[1])
                else:
                    if len(parts) != 5:
                        raise MdpParseError(
                            f"expected 's a s2 r p', got {len(parts)} fields", line_no)
                    s, a, s2 = int(parts[0]), int(parts[1]), int(parts[2])
                    r, p = float(parts[3]), float(parts[4])
                    rows.append((line_no, s, a, s2, r, p))
            except MdpParseError:
                raise
            except (ValueError, IndexError) as exc:
                raise MdpParseError(str(exc), line_no) from exc
    if n_states is None or n_actions is None or rewards is None:
        raise MdpParseError("missing states/actions/rewards header")
    reward_index = {r: i for i, r in enumerate(rewards)}
    kernel = [[[] for _ in range(n_actions)] for _ in range(n_states)]
    for line_no, s, a, s2, r, p in rows:
        if not 0 <= s < n_states or not 0 <= a < n_actions or not 0 <= s2 < n_states:
            raise MdpParseError(f"index out of range in '{s} {a} {s2}'", line_no)
        if r not in reward_index:
            raise MdpParseError(f"reward {r} not in declared list {rewards}", line_no)
        kernel[s][a].append((s2, reward_index[r], p))
    try:
        return ExplicitMdp(n_states, n_actions, rewards, kernel, start_state=start)
    except InputError as exc:
        raise MdpParseError(str(exc)) from exc


def save_explicit_mdp(path, mdp: ExplicitMdp) -> None:
    """Write the text format; floats use shortest round-trip repr so a
    load reproduces the kernel exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"states {mdp.n_states}\n")
        fh.write(f"actions {mdp.n_actions}\n")
        fh.write("rewards " + " ".join(repr(r) for r in mdp.reward_values) + "\n")
        fh.write(f"start {mdp.start_state}\n")
        for s in range(mdp.n_states):
            for a in range(mdp.n_actions):
                for s2, ri, p in mdp.kernel[s][a]:
                    fh.write(f"{s} {a} {s2} {mdp.reward_values[ri]!r} {p!r}\n")


def simulate_policy(mdp: ExplicitMdp, policy, steps: int, seed):
    """Long-rollout fast path returning (actions, states, rewards) arrays.

    Statistically identical to `run_policy` (two inverse-CDF draws per
    step) but not draw-for-draw aligned with it; exists so very long
    streams avoid per-step record objects and can route through the
    compiled kernel when it is built.
    """
    from .. import _kernels

    probs = np.array([policy.action_probs(s) for s in range(mdp.n_states)])
    n_rewards = len(mdp.reward_values)
    flat_next = []
    flat_reward = []
    flat_cum = []
    offsets = [0]
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            rows = mdp.kernel[s][a]
            flat_next.extend(s2 for s2, _, _ in rows)
            flat_reward.extend(ri for _, ri, _ in rows)
            flat_cum.extend(np.cumsum([p for _, _, p in rows]))
            offsets.append(offsets[-1] + len(rows))
    return _kernels.simulate_chain(
        np.cumsum(probs, axis=1),
        np.asarray(offsets, dtype=np.int64),
        np.asarray(flat_next, dtype=np.int64),
        np.asarray(flat_reward, dtype=np.int64),
        np.asarray(flat_cum, dtype=np.float64),
        mdp.n_actions,
        mdp.start_state,
        steps,
        seed,
    ), n_rewards
