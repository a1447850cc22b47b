"""Markov chain constructions over explicit MDPs.

A policy plus an MDP induces the chain of (action, state) pairs.  Two
constructions extend it: attaching the reward to get a chain over
(action, state, reward) triples, and sliding a window of m+1 consecutive
triples to get the window ("snake") chain, whose stationary law carries
the joint distribution of a state, the next action, and the sum of the
next m rewards.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ..errors import InputError, ResourceLimitError
from ..envs.explicit import ExplicitMdp


@dataclass(frozen=True)
class ChainProperties:
    irreducible: bool
    aperiodic: bool
    positive_recurrent: bool


class MarkovChain:
    """Finite chain with labeled states and a sparse row-stochastic matrix."""

    def __init__(self, labels, matrix: sp.csr_matrix):
        self.labels = list(labels)
        self.index = {y: i for i, y in enumerate(self.labels)}
        self.matrix = matrix.tocsr()
        self.n = len(self.labels)
        sums = np.asarray(self.matrix.sum(axis=1)).ravel()
        if self.n and np.max(np.abs(sums - 1.0)) > 1e-12:
            raise InputError("chain rows must sum to 1 within 1e-12")

    def successors(self, i: int):
        row = self.matrix.getrow(i)
        return list(zip(row.indices.tolist(), row.data.tolist()))


class AugmentedChain(MarkovChain):
    """Chain over reachable (action, state, reward-index) triples."""

    def __init__(self, labels, matrix, mdp: ExplicitMdp):
        super().__init__(labels, matrix)
        self.mdp = mdp


class SnakeChain(MarkovChain):
    """Chain over positive-probability windows of m+1 base-chain states;
    labels are tuples of base-chain state indices."""

    def __init__(self, labels, matrix, base: MarkovChain, horizon: int):
        super().__init__(labels, matrix)
        self.base = base
        self.horizon = horizon


def _policy_table(mdp: ExplicitMdp, policy) -> np.ndarray:
    return np.array([policy.action_probs(s) for s in range(mdp.n_states)])


def build_base_chain(mdp: ExplicitMdp, policy) -> MarkovChain:
    """The chain of (action, state) pairs reachable from the start state."""
    pi = _policy_table(mdp, policy)
    start = []
    for a in range(mdp.n_actions):
        if pi[mdp.start_state, a] <= 0:
            continue
        for s2, _, p in mdp.kernel[mdp.start_state][a]:
            if p > 0:
                start.append((a, s2))
    labels, rows = _closure(start, lambda x: _base_successors(mdp, pi, x))
    return MarkovChain(labels, _to_csr(labels, rows))


def _base_successors(mdp, pi, x):
    _, s = x
    out = {}
    for a2 in range(mdp.n_actions):
        pa = pi[s, a2]
        if pa <= 0:
            continue
        for s2, _, p in mdp.kernel[s][a2]:
            key = (a2, s2)
            out[key] = out.get(key, 0.0) + pa * p
    return out


def build_augmented_chain(mdp: ExplicitMdp, policy) -> AugmentedChain:
    """Chain over (action, state, reward) triples, built on the reachable
    set; the transition law is action-choice times kernel, which depends
    on the current triple only through its state."""
    pi = _policy_table(mdp, policy)
    start = []
    for a in range(mdp.n_actions):
        if pi[mdp.start_state, a] <= 0:
            continue
        for s2, ri, p in mdp.kernel[mdp.start_state][a]:
            if p > 0:
                start.append((a, s2, ri))
    if not start:
        raise InputError("start state has no outgoing transitions under this policy")
    labels, rows = _closure(start, lambda y: _augmented_successors(mdp, pi, y))
    return AugmentedChain(labels, _to_csr(labels, rows), mdp)


def _augmented_successors(mdp, pi, y):
    _, s, _ = y
    out = {}
    for a2 in range(mdp.n_actions):
        pa = pi[s, a2]
        if pa <= 0:
            continue
        for s2, ri2, p in mdp.kernel[s][a2]:
            key = (a2, s2, ri2)
            out[key] = out.get(key, 0.0) + pa * p
    return out


def _closure(start, successors):
    """BFS closure; returns (labels in discovery order, row dicts)."""
    labels = []
    seen = set()
    rows = {}
    queue = deque(dict.fromkeys(start))
    for y in queue:
        seen.add(y)
    while queue:
        y = queue.popleft()
        labels.append(y)
        row = successors(y)
        rows[y] = row
        for y2 in row:
            if y2 not in seen:
                seen.add(y2)
                queue.append(y2)
    return labels, rows


def _to_csr(labels, rows) -> sp.csr_matrix:
    index = {y: i for i, y in enumerate(labels)}
    data, indices, indptr = [], [], [0]
    for y in labels:
        for y2, p in sorted(rows[y].items(), key=lambda kv: index[kv[0]]):
            indices.append(index[y2])
            data.append(p)
        indptr.append(len(indices))
    return sp.csr_matrix((data, indices, indptr), shape=(len(labels), len(labels)))


def build_snake_chain(chain: MarkovChain, horizon: int,
                      max_windows: int = 1_000_000) -> SnakeChain:
    """Windows (y_0 .. y_m) of m+1 consecutive base states with positive
    path probability; each transition shifts the window one step."""
    if horizon < 1:
        raise InputError("snake horizon must be >= 1")
    succ = [chain.successors(i) for i in range(chain.n)]
    succ_idx = [[j for j, _ in row] for row in succ]
    windows = [(i,) for i in range(chain.n)]
    for _ in range(horizon):
        grown = []
        for w in windows:
            for j in succ_idx[w[-1]]:
                grown.append(w + (j,))
            if len(grown) > max_windows:
                raise ResourceLimitError(
                    f"snake construction exceeds {max_windows} windows "
                    f"(at least {len(grown)} while extending)")
        windows = grown
    index = {w: i for i, w in enumerate(windows)}
    data, indices, indptr = [], [], [0]
    for w in windows:
        tail = w[1:]
        for j, p in succ[w[-1]]:
            indices.append(index[tail + (j,)])
            data.append(p)
        indptr.append(len(indices))
    matrix = sp.csr_matrix((data, indices, indptr), shape=(len(windows),) * 2)
    return SnakeChain(windows, matrix, chain, horizon)


def check_properties(chain: MarkovChain) -> ChainProperties:
    """Irreducibility by strong connectivity; aperiodicity by the gcd of
    cycle lengths, computed from BFS level differences within each
    strongly connected component; positive recurrence is equivalent to
    irreducibility on a finite chain."""
    if chain.n == 0:
        return ChainProperties(False, False, False)
    n_comp, comp = connected_components(chain.matrix, directed=True, connection="strong")
    irreducible = n_comp == 1
    aperiodic = irreducible and _component_period(chain, np.flatnonzero(comp == comp[0])) == 1
    return ChainProperties(irreducible, aperiodic, irreducible)


def _component_period(chain: MarkovChain, members: np.ndarray) -> int:
    member_set = set(int(i) for i in members)
    root = int(members[0])
    level = {root: 0}
    queue = deque([root])
    g = 0
    indptr, indices = chain.matrix.indptr, chain.matrix.indices
    while queue:
        u = queue.popleft()
        for k in range(indptr[u], indptr[u + 1]):
            v = int(indices[k])
            if v not in member_set:
                continue
            if v in level:
                g = math.gcd(g, level[u] + 1 - level[v])
            else:
                level[v] = level[u] + 1
                queue.append(v)
    return abs(g) if g else 0
