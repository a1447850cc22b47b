"""Bucketed model tables for the value engine.

The engine keeps one state model per (return, action) bucket and one
return model per action.  The generic table holds independent model
instances; specialized tables pack count statistics into arrays so one
query scores a state against every return bucket of an action at once.
All tables share the interface:

    log_scores(action, block) -> (n_returns,) log state scores
    update(z_idx, action, block)
    update_counts  (n_returns, n_actions) bucket update tally
    state_bytes() / load_state_bytes()
"""

from __future__ import annotations

import math
import struct

import numpy as np

from . import _kernels
from .coding import make_model
from .coding.base import pack_ints, pack_records, unpack_ints, unpack_records
from .errors import ConfigError


class PerBucketTable:
    """Independent model instances; works with every model key."""

    grouped = False

    def __init__(self, factory, n_returns: int, n_actions: int):
        self.models = [[factory() for _ in range(n_actions)] for _ in range(n_returns)]
        self.n_returns = n_returns
        self.n_actions = n_actions
        self.update_counts = np.zeros((n_returns, n_actions), dtype=np.int64)
        self.normalized = self.models[0][0].normalized if n_returns else True

    def bucket(self, z_idx: int, action: int):
        return self.models[z_idx][action]

    def log_scores(self, action: int, block) -> np.ndarray:
        return np.array([self.models[z][action].log_score_block(block)
                         for z in range(self.n_returns)])

    def update(self, z_idx: int, action: int, block) -> None:
        self.models[z_idx][action].update_block(block)
        self.update_counts[z_idx, action] += 1

    def state_bytes(self) -> bytes:
        records = [pack_ints(self.update_counts.ravel())]
        for row in self.models:
            for m in row:
                records.append(m.to_bytes())
        return pack_records(records)

    def load_state_bytes(self, data: bytes) -> None:
        records = unpack_records(data)
        self.update_counts = unpack_ints(records[0]).reshape(self.n_returns, self.n_actions)
        it = iter(records[1:])
        for row in self.models:
            for m in row:
                m.restore(next(it))


class TabularCountTable:
    """Frequency / Dirichlet / sparse-adaptive state models over the
    atomic view, stored as one counts array per action."""

    grouped = True
    normalized = True

    def __init__(self, kind: str, n_returns: int, n_actions: int, n_states: int,
                 alpha: float = 0.5):
        if kind not in ("frequency", "dirichlet", "sad"):
            raise ConfigError(f"tabular count table cannot host '{kind}'")
        self.kind = kind
        self.alpha = float(alpha)
        self.n_returns = n_returns
        self.n_actions = n_actions
        self.n_states = n_states
        self.counts = np.zeros((n_actions, n_returns, n_states), dtype=np.int64)
        self.totals = np.zeros((n_actions, n_returns), dtype=np.int64)
        self.seen = np.zeros((n_actions, n_returns), dtype=np.int64)
        self.update_counts = np.zeros((n_returns, n_actions), dtype=np.int64)

    def log_scores(self, action: int, block) -> np.ndarray:
        (s,) = block
        c = self.counts[action, :, s].astype(np.float64)
        n = self.totals[action].astype(np.float64)
        if self.kind == "dirichlet":
            return np.log(c + self.alpha) - np.log(n + self.alpha * self.n_states)
        if self.kind == "frequency":
            out = np.where(n > 0, c, 1.0)
            with np.errstate(divide="ignore"):
                return np.log(out) - np.log(np.where(n > 0, n, float(self.n_states)))
        m = self.seen[action].astype(np.float64)
        beta = np.where(m < self.n_states, np.maximum(1.0, m) / 2.0, 0.0)
        denom = np.log(n + beta)
        unseen = np.maximum(self.n_states - m, 1.0)
        with np.errstate(divide="ignore"):
            return np.where(c > 0, np.log(np.maximum(c, 1.0)) - denom,
                            np.log(beta) - denom - np.log(unseen))

    def update(self, z_idx: int, action: int, block) -> None:
        (s,) = block
        if self.counts[action, z_idx, s] == 0:
            self.seen[action, z_idx] += 1
        self.counts[action, z_idx, s] += 1
        self.totals[action, z_idx] += 1
        self.update_counts[z_idx, action] += 1

    def full_score_table(self) -> np.ndarray:
        """log scores for every state at once: (n_actions, n_returns,
        n_states); used by whole-table evaluation sweeps."""
        c = self.counts.astype(np.float64)
        n = self.totals.astype(np.float64)[:, :, None]
        if self.kind == "dirichlet":
            return np.log(c + self.alpha) - np.log(n + self.alpha * self.n_states)
        if self.kind == "frequency":
            out = np.where(n > 0, c, 1.0)
            with np.errstate(divide="ignore"):
                return np.log(out) - np.log(np.where(n > 0, n, float(self.n_states)))
        m = self.seen.astype(np.float64)[:, :, None]
        beta = np.where(m < self.n_states, np.maximum(1.0, m) / 2.0, 0.0)
        denom = np.log(n + beta)
        unseen = np.maximum(self.n_states - m, 1.0)
        with np.errstate(divide="ignore"):
            return np.where(c > 0, np.log(np.maximum(c, 1.0)) - denom,
                            np.log(beta) - denom - np.log(unseen))

    def state_bytes(self) -> bytes:
        return pack_records([
            pack_ints(self.counts.ravel()), pack_ints(self.totals.ravel()),
            pack_ints(self.seen.ravel()), pack_ints(self.update_counts.ravel()),
        ])

    def load_state_bytes(self, data: bytes) -> None:
        records = unpack_records(data)
        self.counts = unpack_ints(records[0]).reshape(self.counts.shape)
        self.totals = unpack_ints(records[1]).reshape(self.totals.shape)
        self.seen = unpack_ints(records[2]).reshape(self.seen.shape)
        self.update_counts = unpack_ints(records[3]).reshape(self.update_counts.shape)


class RegionSadTable:
    """Factored sparse-adaptive state models (region/patch products),
    packed across return buckets.

    The code -> row index of each region is shared across actions, so
    scoring a state against every bucket costs one dict lookup per region
    plus one fused kernel call per action.
    """

    grouped = True
    normalized = True

    def __init__(self, n_returns: int, n_actions: int, factor_sizes, log_factor_sizes):
        self.n_returns = n_returns
        self.n_actions = n_actions
        self.k = len(factor_sizes)
        self.sizes = np.asarray([float(s) for s in factor_sizes])
        self.log_sizes = np.asarray(log_factor_sizes, dtype=np.float64)
        self.code_rows = [dict() for _ in range(self.k)]
        self.counts = [[self._empty() for _ in range(self.k)] for _ in range(n_actions)]
        self.totals = np.zeros((n_actions, n_returns), dtype=np.float64)
        self.seen = np.zeros((n_actions, self.k, n_returns), dtype=np.float64)
        self.update_counts = np.zeros((n_returns, n_actions), dtype=np.int64)

    def _empty(self):
        return np.zeros((0, self.n_returns), dtype=np.float64)

    def _row_indices(self, block):
        rows = []
        for r in range(self.k):
            i = self.code_rows[r].get(block[r])
            rows.append(-1 if i is None else i)
        return rows

    def _gather(self, action: int, row_indices) -> np.ndarray:
        out = np.zeros((self.k, self.n_returns))
        counts = self.counts[action]
        for r, i in enumerate(row_indices):
            if 0 <= i < counts[r].shape[0]:
                out[r] = counts[r][i]
        return out

    def _scores_for(self, action: int, row_indices) -> np.ndarray:
        out = np.empty(self.n_returns)
        return _kernels.sad_block_logscores(
            self._gather(action, row_indices), self.totals[action],
            self.seen[action], self.sizes, self.log_sizes, out)

    def log_scores(self, action: int, block) -> np.ndarray:
        return self._scores_for(action, self._row_indices(block))

    def log_scores_all_actions(self, block) -> np.ndarray:
        rows = self._row_indices(block)
        return np.stack([self._scores_for(a, rows) for a in range(self.n_actions)])

    def update(self, z_idx: int, action: int, block) -> None:
        counts = self.counts[action]
        for r in range(self.k):
            code = block[r]
            i = self.code_rows[r].get(code)
            if i is None:
                i = len(self.code_rows[r])
                self.code_rows[r][code] = i
            if i >= counts[r].shape[0]:
                grown = np.zeros((max(8, 2 * (i + 1)), self.n_returns))
                grown[: counts[r].shape[0]] = counts[r]
                counts[r] = grown
            if counts[r][i, z_idx] == 0:
                self.seen[action, r, z_idx] += 1
            counts[r][i, z_idx] += 1
        self.totals[action, z_idx] += 1
        self.update_counts[z_idx, action] += 1

    def state_bytes(self) -> bytes:
        records = [
            pack_ints([self.n_returns, self.n_actions, self.k]),
            self.totals.tobytes(), self.seen.tobytes(),
            pack_ints(self.update_counts.ravel()),
        ]
        for r in range(self.k):
            items = sorted(self.code_rows[r].items(), key=lambda kv: kv[1])
            blob = bytearray(struct.pack("<I", len(items)))
            for code, _ in items:
                key = code if isinstance(code, bytes) else struct.pack("<q", code)
                blob += struct.pack("<BI", 0 if isinstance(code, int) else 1, len(key))
                blob += key
            records.append(bytes(blob))
        for a in range(self.n_actions):
            for r in range(self.k):
                n_rows = len(self.code_rows[r])
                records.append(self.counts[a][r][:n_rows].tobytes())
        return pack_records(records)

    def load_state_bytes(self, data: bytes) -> None:
        records = unpack_records(data)
        self.totals = np.frombuffer(records[1]).reshape(self.totals.shape).copy()
        self.seen = np.frombuffer(records[2]).reshape(self.seen.shape).copy()
        self.update_counts = unpack_ints(records[3]).reshape(self.update_counts.shape)
        pos = 4
        for r in range(self.k):
            blob = records[pos]
            pos += 1
            (n_items,) = struct.unpack_from("<I", blob, 0)
            off = 4
            mapping = {}
            for i in range(n_items):
                tag, length = struct.unpack_from("<BI", blob, off)
                off += 5
                key = blob[off : off + length]
                off += length
                mapping[key if tag else struct.unpack("<q", key)[0]] = i
            self.code_rows[r] = mapping
        for a in range(self.n_actions):
            for r in range(self.k):
                flat = np.frombuffer(records[pos])
                pos += 1
                n_rows = len(self.code_rows[r])
                counts = np.zeros((max(8, n_rows), self.n_returns))
                if n_rows:
                    counts[:n_rows] = flat.reshape(n_rows, self.n_returns)
                self.counts[a][r] = counts


class LzTable:
    """Incremental-parse dictionaries per bucket, scored via the kernel
    backend; bucket (z, a) maps to trie index a * n_returns + z so one
    action's buckets are contiguous."""

    grouped = True
    normalized = False

    _LN2 = math.log(2.0)

    def __init__(self, n_returns: int, n_actions: int, alphabet_size: int):
        self.n_returns = n_returns
        self.n_actions = n_actions
        self.alphabet_size = int(alphabet_size)
        symbol_bits = math.ceil(math.log2(alphabet_size)) if alphabet_size > 1 else 0
        self.tries = _kernels.LzTrieSet(n_returns * n_actions, symbol_bits)
        self.update_counts = np.zeros((n_returns, n_actions), dtype=np.int64)

    def _bucket(self, z_idx: int, action: int) -> int:
        return action * self.n_returns + z_idx

    def log_scores(self, action: int, block) -> np.ndarray:
        deltas = self.tries.delta_bits_range(action * self.n_returns,
                                             self.n_returns, block)
        return -self._LN2 * deltas.astype(np.float64)

    def log_scores_all_actions(self, block) -> np.ndarray:
        deltas = self.tries.delta_bits_range(0, self.n_actions * self.n_returns, block)
        return -self._LN2 * deltas.reshape(self.n_actions, self.n_returns).astype(np.float64)

    def update(self, z_idx: int, action: int, block) -> None:
        self.tries.update(self._bucket(z_idx, action), block)
        self.update_counts[z_idx, action] += 1

    def state_bytes(self) -> bytes:
        records = [pack_ints(self.update_counts.ravel())]
        for b in range(self.n_returns * self.n_actions):
            dict_size, cursor, closed_bits, flat = self.tries.export_state(b)
            records.append(pack_ints([dict_size, cursor, closed_bits]))
            records.append(pack_ints(flat))
        return pack_records(records)

    def load_state_bytes(self, data: bytes) -> None:
        records = unpack_records(data)
        self.update_counts = unpack_ints(records[0]).reshape(self.update_counts.shape)
        for b in range(self.n_returns * self.n_actions):
            head = unpack_ints(records[1 + 2 * b])
            flat = unpack_ints(records[2 + 2 * b])
            self.tries.load_state(b, int(head[0]), int(head[1]), int(head[2]),
                                  [int(v) for v in flat])


def make_state_table(model_key: str, params, codec, n_returns: int, n_actions: int,
                     force_generic: bool = False):
    """Pick the fastest table that matches the model and view."""
    params = dict(params or {})
    if not force_generic:
        if model_key in ("frequency", "dirichlet", "sad") and codec.view.kind == "atomic":
            return TabularCountTable(model_key, n_returns, n_actions,
                                     codec.atomic_size, alpha=params.get("alpha", 0.5))
        if model_key == "factored-sad" and codec.view.kind in ("cells", "patches"):
            # The sparse predictors are context-free, so the packed table
            # is exactly equivalent to per-bucket factored models.
            return RegionSadTable(n_returns, n_actions, codec.factor_alphabets,
                                  codec.log_factor_sizes)
        if model_key == "lz":
            if codec.view.kind == "patches":
                raise ConfigError("lz needs integer symbols; use the cells or atomic view")
            size = codec.atomic_size if codec.view.kind == "atomic" \
                else max(codec.factor_alphabets)
            return LzTable(n_returns, n_actions, size)

    def factory():
        return make_model(model_key, atomic_size=codec.atomic_size,
                          factor_alphabets=codec.factor_alphabets,
                          log_factor_sizes=codec.log_factor_sizes, params=params)

    return PerBucketTable(factory, n_returns, n_actions)
