"""Tabular blackjack with an infinite deck.

State: (dealer showing card 1..10, player sum 12..21, usable-ace flag),
200 states in all.  Player sums below 12 never appear: hitting there is
forced, so those draws happen inside `reset`.  Rewards are 0 on every
non-terminal step and the game outcome (-1, 0, +1) on the terminal step.
There is no special payout for a natural; a dealt 21 plays out like any
other 21.

The exact transition kernel (dealer playout distribution included) is
exported through `to_explicit`, which appends one absorbing terminal
state so finite-horizon backups over it produce whole-episode values.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import InputError
from .base import Mdp, RulePolicy
from .explicit import ExplicitMdp

HIT, STAY = 0, 1

# Card values 1..10; tens/faces fold into 10.
_CARD_VALUES = tuple(range(1, 11))
_CARD_PROBS = tuple([1 / 13.0] * 9 + [4 / 13.0])

N_STATES = 200
# Longest possible episode under stay-at-20 play: ascend 12..19 with a
# usable ace, convert the ace (the sum rewinds to 12), ascend again, then
# stand; 17 actions in all.  Verified exhaustively in tests.
MAX_EPISODE_STEPS = 17


def state_to_index(dealer: int, player: int, usable: bool) -> int:
    return (dealer - 1) * 20 + (player - 12) * 2 + int(usable)

def index_to_state(idx: int):
    dealer, rest = divmod(idx, 20)
    player, usable = divmod(rest, 2)
    return dealer + 1, player + 12, bool(usable)


def _hit(player: int, usable: bool, card: int):
    """Apply one card to a player total; returns (sum, usable, bust)."""
    total = player + card
    if card == 1 and total + 10 <= 21:
        total += 10
        usable = True
    if total > 21 and usable:
        total -= 10
        usable = False
    return total, usable, total > 21


class BlackjackEnv(Mdp):
    n_states = N_STATES
    n_actions = 2
    reward_values = (-1.0, 0.0, 1.0)
    episodic = True
    max_episode_steps = MAX_EPISODE_STEPS

    def _draw(self, rng) -> int:
        u = rng.random()
        return 10 if u >= 9 / 13.0 else 1 + int(u * 13.0)

    def reset(self, rng):
        player, usable = 0, False
        player, usable, _ = _hit(player, usable, self._draw(rng))
        player, usable, _ = _hit(player, usable, self._draw(rng))
        while player < 12:
            player, usable, _ = _hit(player, usable, self._draw(rng))
        dealer = self._draw(rng)
        return (dealer, player, usable)

    def step(self, state, action, rng):
        dealer, player, usable = state
        if action == HIT:
            player, usable, bust = _hit(player, usable, self._draw(rng))
            if bust:
                return state, -1.0, True
            return (dealer, player, usable), 0.0, False
        if action != STAY:
            raise InputError(f"blackjack action must be 0 (hit) or 1 (stay), got {action}")
        total, dusable, _ = _hit(0, False, dealer)
        while total < 17:
            total, dusable, _ = _hit(total, dusable, self._draw(rng))
        if total > 21 or player > total:
            return state, 1.0, True
        if player < total:
            return state, -1.0, True
        return state, 0.0, True

    def state_index(self, state):
        return state_to_index(*state)

    def return_alphabet(self, horizon: int):
        return (-1.0, 0.0, 1.0)

    # -- exact kernel --

    @staticmethod
    @lru_cache(maxsize=None)
    def dealer_outcome_probs(showing: int):
        """Distribution of the dealer's final total given the showing
        card; key 0 stands for a bust. Dealer stands on any 17."""

        @lru_cache(maxsize=None)
        def finish(total: int, usable: bool):
            if total > 21:
                return {0: 1.0}
            if total >= 17:
                return {total: 1.0}
            out: dict[int, float] = {}
            for card, p in zip(_CARD_VALUES, _CARD_PROBS):
                t2, u2, _ = _hit(total, usable, card)
                for k, q in finish(t2, u2).items():
                    out[k] = out.get(k, 0.0) + p * q
            return out

        total, usable, _ = _hit(0, False, showing)
        return finish(total, usable)

    @staticmethod
    def start_distribution() -> np.ndarray:
        """Exact start-state distribution over the 200 states (initial
        deal plus forced hits below 12)."""

        @lru_cache(maxsize=None)
        def entry(total: int, usable: bool, cards: int):
            # Distribution over (sum >= 12, usable) entry points.
            if total >= 12 and cards >= 2:
                return {(total, usable): 1.0}
            out: dict[tuple, float] = {}
            for card, p in zip(_CARD_VALUES, _CARD_PROBS):
                t2, u2, _ = _hit(total, usable, card)
                for k, q in entry(t2, u2, cards + 1).items():
                    out[k] = out.get(k, 0.0) + p * q
            return out

        dist = np.zeros(N_STATES)
        for (player, usable), q in entry(0, False, 0).items():
            for dealer, p in zip(_CARD_VALUES, _CARD_PROBS):
                dist[state_to_index(dealer, player, usable)] += p * q
        return dist

    def to_explicit(self) -> ExplicitMdp:
        """Exact 201-state tabular version: the extra absorbing state
        collects terminal transitions with the game outcome as reward."""
        terminal = N_STATES
        reward_values = (-1.0, 0.0, 1.0)
        r_idx = {r: i for i, r in enumerate(reward_values)}
        kernel = [[[] for _ in range(2)] for _ in range(N_STATES + 1)]
        for idx in range(N_STATES):
            dealer, player, usable = index_to_state(idx)
            hit_rows: dict[tuple, float] = {}
            for card, p in zip(_CARD_VALUES, _CARD_PROBS):
                total, u2, bust = _hit(player, usable, card)
                key = (terminal, r_idx[-1.0]) if bust else \
                    (state_to_index(dealer, total, u2), r_idx[0.0])
                hit_rows[key] = hit_rows.get(key, 0.0) + p
            kernel[idx][HIT] = [(s2, ri, p) for (s2, ri), p in sorted(hit_rows.items())]
            stay_rows: dict[tuple, float] = {}
            for total, p in self.dealer_outcome_probs(dealer).items():
                if total == 0 or player > total:
                    outcome = 1.0
                elif player < total:
                    outcome = -1.0
                else:
                    outcome = 0.0
                key = (terminal, r_idx[outcome])
                stay_rows[key] = stay_rows.get(key, 0.0) + p
            kernel[idx][STAY] = [(s2, ri, p) for (s2, ri), p in sorted(stay_rows.items())]
        for a in range(2):
            kernel[terminal][a] = [(terminal, r_idx[0.0], 1.0)]
        return ExplicitMdp(N_STATES + 1, 2, reward_values, kernel, name="blackjack")


def blackjack_env() -> BlackjackEnv:
    return BlackjackEnv()


def target_policy_blackjack() -> RulePolicy:
    """Stay on a player sum of 20 or 21, hit otherwise."""

    def rule(state_idx: int) -> int:
        _, player, _ = index_to_state(state_idx)
        return STAY if player >= 20 else HIT

    return RulePolicy(2, rule)
