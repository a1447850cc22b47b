"""Exact action values, computed two independent ways.

`q_via_stationary` reads values off the window chain's stationary
conditionals through the Bayes decomposition; `q_via_dp` runs a plain
finite-horizon backup over the kernel.  Agreement between the two (to
1e-9 over a random corpus) is the package's core correctness check.
"""

from __future__ import annotations

import numpy as np

from ..envs.explicit import ExplicitMdp
from .stationary import ReturnConditionals


def q_via_stationary(cond: ReturnConditionals):
    """Q[s, a] = sum_z z * P(s|z,a) P(z|a) / sum_z' P(s|z',a) P(z'|a).

    Entries conditioned on zero-probability (state, action) pairs are NaN
    and flagged out of `cond.defined`.
    """
    weights = cond.state_given_za * cond.z_given_a[:, None, :]
    denom = weights.sum(axis=0)
    z = np.asarray(cond.z_values)
    numer = np.tensordot(z, weights, axes=(0, 0))
    q = np.divide(numer, denom, out=np.full_like(denom, np.nan), where=denom > 0)
    q[~cond.defined] = np.nan
    return q


def q_via_dp(mdp: ExplicitMdp, policy, horizon: int) -> np.ndarray:
    """Backward induction: expected sum of the next `horizon` rewards when
    taking the action now and following the policy afterwards."""
    n_s, n_a = mdp.n_states, mdp.n_actions
    pi = np.array([policy.action_probs(s) for s in range(n_s)])
    expected_r = np.zeros((n_s, n_a))
    trans = np.zeros((n_s, n_a, n_s))
    for s in range(n_s):
        for a in range(n_a):
            for s2, ri, p in mdp.kernel[s][a]:
                expected_r[s, a] += p * mdp.reward_values[ri]
                trans[s, a, s2] += p
    v = np.zeros(n_s)
    q = np.zeros((n_s, n_a))
    for _ in range(horizon):
        q = expected_r + trans @ v
        v = (pi * q).sum(axis=1)
    return q


def episode_return_distribution(mdp: ExplicitMdp, policy, horizon: int,
                                start_dist: np.ndarray) -> dict:
    """Exact distribution of the summed reward over `horizon` steps from
    the start distribution (for episodic constructions with an absorbing
    terminal state this is the whole-episode return law)."""
    pi = np.array([policy.action_probs(s) for s in range(mdp.n_states)])
    current: dict[tuple, float] = {}
    for s, p in enumerate(start_dist):
        if p > 0:
            current[(s, 0.0)] = current.get((s, 0.0), 0.0) + float(p)
    for _ in range(horizon):
        nxt: dict[tuple, float] = {}
        for (s, z), p in current.items():
            for a in range(mdp.n_actions):
                pa = pi[s, a]
                if pa <= 0:
                    continue
                for s2, ri, pt in mdp.kernel[s][a]:
                    key = (s2, z + mdp.reward_values[ri])
                    nxt[key] = nxt.get(key, 0.0) + p * pa * pt
        current = nxt
    out: dict[float, float] = {}
    for (_, z), p in current.items():
        out[z] = out.get(z, 0.0) + p
    return out
