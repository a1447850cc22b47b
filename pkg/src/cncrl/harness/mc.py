"""First-visit Monte Carlo baseline for episodic policy evaluation."""

from __future__ import annotations

import numpy as np


class McBaseline:
    """Per-(state, action) running sums of first-visit returns.

    An estimate is sum/count exactly, and undefined (masked) until the
    pair's first visit.
    """

    def __init__(self, n_states: int, n_actions: int):
        self.sums = np.zeros((n_states, n_actions))
        self.counts = np.zeros((n_states, n_actions), dtype=np.int64)

    def update_episode(self, transitions) -> None:
        """`transitions` is the episode's list of (state_idx, action,
        reward); each pair's first occurrence receives the summed reward
        from that point to the episode's end."""
        rewards = [r for (_, _, r) in transitions]
        suffix = np.cumsum(rewards[::-1])[::-1]
        seen = set()
        for i, (s, a, _) in enumerate(transitions):
            if (s, a) in seen:
                continue
            seen.add((s, a))
            self.sums[s, a] += suffix[i]
            self.counts[s, a] += 1

    @property
    def defined(self) -> np.ndarray:
        return self.counts > 0

    def estimates(self) -> np.ndarray:
        """sum/count where defined, NaN elsewhere."""
        with np.errstate(invalid="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), np.nan)
