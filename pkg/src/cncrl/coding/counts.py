"""Count-based estimators: frequency, Dirichlet-multinomial, and the
sparse adaptive estimator for large alphabets."""

from __future__ import annotations

import math
import struct

import numpy as np

from ..errors import InputError
from .base import (
    Alphabet,
    SequentialModel,
    pack_ints,
    unpack_ints,
)


class FrequencyModel(SequentialModel):
    """Empirical-frequency predictor: P(x) = count(x) / n.

    With an empty history the prediction is uniform; consistency is an
    asymptotic property, so any fixed prior at n=0 preserves it.
    """

    kind = "frequency"

    def __init__(self, alphabet: Alphabet):
        super().__init__(alphabet)
        self.counts = np.zeros(alphabet.size, dtype=np.int64)

    def prob(self, symbol: int) -> float:
        self.alphabet.check(symbol)
        if self.n_updates == 0:
            return 1.0 / self.alphabet.size
        return self.counts[symbol] / self.n_updates

    def probs(self) -> np.ndarray:
        if self.n_updates == 0:
            return np.full(self.alphabet.size, 1.0 / self.alphabet.size)
        return self.counts / self.n_updates

    def update(self, symbol: int) -> None:
        self.alphabet.check(symbol)
        self.counts[symbol] += 1
        self.n_updates += 1

    def _state_records(self):
        return [pack_ints([self.alphabet.size, self.n_updates]), pack_ints(self.counts)]

    def _load_state_records(self, records):
        head = unpack_ints(records[0])
        self.alphabet = Alphabet(int(head[0]))
        self.n_updates = int(head[1])
        self.counts = unpack_ints(records[1])


class DirichletModel(SequentialModel):
    """Dirichlet-multinomial predictor: P(x) = (count(x) + a) / (n + a*|X|).

    a = 1/2 is the Krichevsky-Trofimov rule.
    """

    kind = "dirichlet"

    def __init__(self, alphabet: Alphabet, alpha: float = 0.5):
        super().__init__(alphabet)
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = float(alpha)
        self.counts = np.zeros(alphabet.size, dtype=np.int64)

    def prob(self, symbol: int) -> float:
        self.alphabet.check(symbol)
        a = self.alpha
        return (self.counts[symbol] + a) / (self.n_updates + a * self.alphabet.size)

    def probs(self) -> np.ndarray:
        a = self.alpha
        return (self.counts + a) / (self.n_updates + a * self.alphabet.size)

    def update(self, symbol: int) -> None:
        self.alphabet.check(symbol)
        self.counts[symbol] += 1
        self.n_updates += 1

    def _state_records(self):
        return [
            pack_ints([self.alphabet.size, self.n_updates]),
            struct.pack("<d", self.alpha),
            pack_ints(self.counts),
        ]

    def _load_state_records(self, records):
        head = unpack_ints(records[0])
        self.alphabet = Alphabet(int(head[0]))
        self.n_updates = int(head[1])
        (self.alpha,) = struct.unpack("<d", records[1])
        self.counts = unpack_ints(records[2])


def sad_escape_mass(n_seen_symbols: int, n_unseen_symbols=1) -> float:
    """Escape mass reserved for unseen symbols: max(1, #distinct seen) / 2,
    recomputed at every step; zero once no unseen symbols remain (otherwise
    the predictive would leak mass nowhere and stop summing to one)."""
    if n_unseen_symbols is not None and n_unseen_symbols <= 0:
        return 0.0
    return max(1, n_seen_symbols) / 2.0


class SadModel(SequentialModel):
    """Sparse adaptive count model for large (possibly astronomically
    large) alphabets.

    Seen symbols get their empirical share c(x)/(n + beta); the escape mass
    beta/(n + beta) is split evenly over the alphabet's unseen remainder.
    Counts are kept sparsely, so only observed symbols cost memory.  For
    alphabets too large for exact float subtraction the unseen share is
    computed in log space (relative error below 1e-12).
    """

    kind = "sad"

    # Alphabet sizes above this use the log-space unseen branch.
    _EXACT_LIMIT = 2.0**53

    def __init__(self, alphabet_size, log_size: float | None = None):
        # alphabet_size may exceed any integer type; keep it as given.
        if isinstance(alphabet_size, Alphabet):
            alphabet_size = alphabet_size.size
        if alphabet_size < 1:
            raise InputError(f"alphabet size must be >= 1, got {alphabet_size}")
        self.size = alphabet_size
        self.log_size = math.log(alphabet_size) if log_size is None else log_size
        self.alphabet = Alphabet(min(int(alphabet_size), 2**62))
        self.counts: dict = {}
        self.n_updates = 0

    @property
    def n_seen(self) -> int:
        return len(self.counts)

    def _check(self, symbol):
        if isinstance(symbol, (int, np.integer)):
            if not 0 <= symbol < self.size:
                raise InputError(f"symbol {symbol} outside alphabet of size {self.size}")
        return symbol

    def prob(self, symbol) -> float:
        return math.exp(self.log_prob(symbol))

    def log_prob(self, symbol) -> float:
        self._check(symbol)
        n_unseen = self.size - self.n_seen if self.size <= self._EXACT_LIMIT else None
        beta = sad_escape_mass(self.n_seen, n_unseen)
        denom = self.n_updates + beta
        c = self.counts.get(symbol, 0)
        if c > 0:
            return math.log(c) - math.log(denom)
        if n_unseen is not None:
            if n_unseen <= 0:
                # Unreachable: an unseen query implies unseen symbols remain.
                return -math.inf
            return math.log(beta) - math.log(denom) - math.log(n_unseen)
        # Huge alphabet: n_seen is negligible against the size.
        return math.log(beta) - math.log(denom) - self.log_size

    def probs(self) -> np.ndarray:
        size = int(self.size)
        if size > 1_000_000:
            raise InputError("dense predictive vector requested for a huge alphabet")
        n_unseen = size - self.n_seen
        beta = sad_escape_mass(self.n_seen, n_unseen)
        denom = self.n_updates + beta
        out = np.zeros(size)
        if n_unseen > 0:
            out[:] = beta / (denom * n_unseen)
        for sym, c in self.counts.items():
            out[sym] = c / denom
        return out

    def update(self, symbol) -> None:
        self._check(symbol)
        self.counts[symbol] = self.counts.get(symbol, 0) + 1
        self.n_updates += 1

    def _state_records(self):
        syms = []
        vals = []
        byte_keys = []
        for sym, c in sorted(self.counts.items()):
            if isinstance(sym, bytes):
                byte_keys.append((sym, c))
            else:
                syms.append(int(sym))
                vals.append(int(c))
        recs = [
            struct.pack("<dQ", float(self.size), self.n_updates),
            pack_ints(syms),
            pack_ints(vals),
        ]
        blob = bytearray(struct.pack("<I", len(byte_keys)))
        for sym, c in byte_keys:
            blob += struct.pack("<Iq", len(sym), c) + sym
        recs.append(bytes(blob))
        return recs

    def _load_state_records(self, records):
        size_f, n = struct.unpack("<dQ", records[0])
        if size_f <= self._EXACT_LIMIT:
            self.size = int(size_f)
        else:
            self.size = size_f
        self.log_size = math.log(self.size)
        self.n_updates = int(n)
        self.counts = {}
        for sym, c in zip(unpack_ints(records[1]), unpack_ints(records[2])):
            self.counts[int(sym)] = int(c)
        blob = records[3]
        (n_bytes,) = struct.unpack_from("<I", blob, 0)
        pos = 4
        for _ in range(n_bytes):
            length, c = struct.unpack_from("<Iq", blob, pos)
            pos += 12
            self.counts[blob[pos : pos + length]] = int(c)
            pos += length
