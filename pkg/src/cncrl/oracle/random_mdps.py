"""Random explicit-MDP corpus for certification sweeps."""

from __future__ import annotations

from ..envs.base import TabularPolicy
from ..envs.explicit import ExplicitMdp
from .chains import build_augmented_chain, check_properties

_REWARD_POOL = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)


def random_mdp(rng, n_states: int, n_actions: int, n_rewards: int,
               support: int = 2) -> ExplicitMdp:
    """Random sparse kernel: every (s, a) has `support` outcomes with a
    random positive distribution over them."""
    pool = list(_REWARD_POOL)
    rng.shuffle(pool)
    rewards = sorted(pool[:n_rewards])
    kernel = [[[] for _ in range(n_actions)] for _ in range(n_states)]
    for s in range(n_states):
        for a in range(n_actions):
            outcomes = set()
            while len(outcomes) < support:
                outcomes.add((int(rng.integers(n_states)), int(rng.integers(n_rewards))))
            probs = rng.random(len(outcomes)) + 0.1
            probs /= probs.sum()
            kernel[s][a] = [(s2, ri, float(p))
                            for (s2, ri), p in zip(sorted(outcomes), probs)]
    return ExplicitMdp(n_states, n_actions, rewards, kernel)


def random_policy(rng, n_states: int, n_actions: int) -> TabularPolicy:
    """Everywhere-positive random stationary policy."""
    return TabularPolicy(rng.random((n_states, n_actions)) + 0.2)


def random_certified_case(rng, max_states: int = 6, max_actions: int = 3,
                          max_rewards: int = 3, max_horizon: int = 4,
                          max_tries: int = 200):
    """Draw (mdp, policy, horizon) whose augmented chain is irreducible
    and aperiodic; resamples until the gate passes."""
    for _ in range(max_tries):
        n_s = int(rng.integers(2, max_states + 1))
        n_a = int(rng.integers(1, max_actions + 1))
        n_r = int(rng.integers(2, max_rewards + 1))
        mdp = random_mdp(rng, n_s, n_a, n_r)
        policy = random_policy(rng, n_s, n_a)
        chain = build_augmented_chain(mdp, policy)
        props = check_properties(chain)
        if props.irreducible and props.aperiodic:
            horizon = int(rng.integers(1, max_horizon + 1))
            return mdp, policy, horizon, chain
    raise RuntimeError("could not draw an irreducible aperiodic case")
