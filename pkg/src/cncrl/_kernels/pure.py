"""Pure-Python implementations of the hot kernels.

Same API and same arithmetic as the compiled extension; the extension
exists purely for speed.  Results agree with the compiled backend to
within last-ulp float noise (summation order may differ), and each
backend is individually deterministic.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "pure"

_LN2 = math.log(2.0)


def simulate_chain(policy_cum, offsets, next_flat, reward_flat, cum_flat,
                   n_actions, start, steps, seed):
    """Roll a policy on a flattened explicit kernel.

    Two inverse-CDF uniforms per step: one for the action, one for the
    transition row of (state, action).  Returns int64 arrays (actions,
    states, reward_indices).
    """
    rng = np.random.default_rng(seed)
    actions = np.empty(steps, dtype=np.int64)
    states = np.empty(steps, dtype=np.int64)
    rewards = np.empty(steps, dtype=np.int64)
    s = int(start)
    chunk = 65536
    pos = chunk
    uniforms = None
    for t in range(steps):
        if pos >= chunk:
            uniforms = rng.random(2 * chunk)
            pos = 0
        u_a = uniforms[2 * pos]
        u_t = uniforms[2 * pos + 1]
        pos += 1
        row = policy_cum[s]
        a = 0
        while a < n_actions - 1 and u_a >= row[a]:
            a += 1
        lo = offsets[s * n_actions + a]
        hi = offsets[s * n_actions + a + 1]
        i = lo
        while i < hi - 1 and u_t >= cum_flat[i]:
            i += 1
        actions[t] = a
        states[t] = next_flat[i]
        rewards[t] = reward_flat[i]
        s = int(next_flat[i])
    return actions, states, rewards


def sad_block_logscores(count_rows, totals, mseen, sizes, log_sizes, out):
    """Sum of per-region sparse-adaptive log probabilities, one entry per
    return bucket.

    count_rows: (k, Z) observed counts of each region's current code per
    bucket; totals: (Z,) bucket update counts; mseen: (k, Z) distinct
    codes seen; sizes/log_sizes: (k,) region alphabet sizes and their
    logs.  Alphabets small enough for exact float arithmetic use the
    exact unseen share beta/((n+beta)(size-seen)); larger ones use the
    log-space form (relative error under 1e-12).  Writes into `out` (Z,)
    and returns it.
    """
    exact_limit = 9007199254740992.0  # 2^53
    k, n_z = count_rows.shape
    for z in range(n_z):
        acc = 0.0
        tot = totals[z]
        for r in range(k):
            m = mseen[r, z]
            exact = sizes[r] <= exact_limit
            if exact and sizes[r] - m <= 0:
                beta = 0.0  # everything seen: pure empirical shares
            else:
                beta = m / 2.0 if m >= 2 else 0.5
            denom = math.log(tot + beta)
            c = count_rows[r, z]
            if c > 0:
                acc += math.log(c) - denom
            elif exact:
                unseen = sizes[r] - m
                acc += math.log(beta) - denom - math.log(unseen) if unseen > 0 else -math.inf
            else:
                acc += math.log(beta) - denom - log_sizes[r]
        out[z] = acc
    return out


class LzTrieSet:
    """A bank of incremental-parse dictionaries, one per bucket, with
    non-mutating block costing.

    Cost rule: a completed phrase costs ceil(log2(D+1)) + symbol_bits
    where D is the dictionary size before the phrase; an open phrase is
    charged as if closed.
    """

    def __init__(self, n_buckets: int, symbol_bits: int):
        self.n_buckets = int(n_buckets)
        self.symbol_bits = int(symbol_bits)
        self.tries = [dict() for _ in range(self.n_buckets)]
        self.dict_sizes = [0] * self.n_buckets
        self.cursors = [0] * self.n_buckets
        self.closed_bits = [0] * self.n_buckets

    def _phrase_cost(self, dict_size: int) -> int:
        return _ceil_log2(dict_size + 1) + self.symbol_bits

    def total_bits(self, bucket: int) -> int:
        open_cost = self._phrase_cost(self.dict_sizes[bucket]) if self.cursors[bucket] else 0
        return self.closed_bits[bucket] + open_cost

    def delta_bits(self, bucket: int, syms) -> int:
        trie = self.tries[bucket]
        node = self.cursors[bucket]
        dict_size = self.dict_sizes[bucket]
        added = 0
        overlay = None
        next_id = dict_size + 1
        for sym in syms:
            key = (node, sym)
            child = trie.get(key)
            if child is None and overlay is not None:
                child = overlay.get(key)
            if child is not None:
                node = child
            else:
                added += self._phrase_cost(dict_size)
                if overlay is None:
                    overlay = {}
                overlay[key] = next_id
                next_id += 1
                dict_size += 1
                node = 0
        open_cost = self._phrase_cost(dict_size) if node else 0
        old_open = self._phrase_cost(self.dict_sizes[bucket]) if self.cursors[bucket] else 0
        return added + open_cost - old_open

    def delta_bits_range(self, start: int, count: int, syms) -> np.ndarray:
        """What-if costs for `count` consecutive buckets."""
        out = np.empty(count, dtype=np.int64)
        for i in range(count):
            out[i] = self.delta_bits(start + i, syms)
        return out

    def update(self, bucket: int, syms) -> None:
        trie = self.tries[bucket]
        node = self.cursors[bucket]
        for sym in syms:
            key = (node, sym)
            child = trie.get(key)
            if child is not None:
                node = child
            else:
                self.closed_bits[bucket] += self._phrase_cost(self.dict_sizes[bucket])
                self.dict_sizes[bucket] += 1
                trie[key] = self.dict_sizes[bucket]
                node = 0
        self.cursors[bucket] = node

    # Canonical state: edges sorted by child id, so both backends export
    # identical snapshots.

    def export_state(self, bucket: int):
        edges = sorted(self.tries[bucket].items(), key=lambda kv: kv[1])
        flat = []
        for (parent, sym), child in edges:
            flat.extend((parent, sym, child))
        return (self.dict_sizes[bucket], self.cursors[bucket],
                self.closed_bits[bucket], flat)

    def load_state(self, bucket: int, dict_size: int, cursor: int,
                   closed_bits: int, flat) -> None:
        self.dict_sizes[bucket] = int(dict_size)
        self.cursors[bucket] = int(cursor)
        self.closed_bits[bucket] = int(closed_bits)
        trie = {}
        for i in range(0, len(flat), 3):
            trie[(int(flat[i]), int(flat[i + 1]))] = int(flat[i + 2])
        self.tries[bucket] = trie


def _ceil_log2(n: int) -> int:
    return (n - 1).bit_length() if n > 1 else 0
