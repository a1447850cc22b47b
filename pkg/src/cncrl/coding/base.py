"""Sequential density models: the predict/update contract.

A sequential model assigns a conditional probability to the next symbol
given everything it has been updated with so far.  Code length and
probability are two views of the same quantity: a model that assigns
probability p to a sequence corresponds to a code of about -log2(p) bits
for it, so cumulative log-loss in bits is the compressed size under the
model.
"""

from __future__ import annotations

import math
import struct
from abc import ABC, abstractmethod

import numpy as np

from ..errors import InputError

LOG_HALF = math.log(0.5)
_LN2 = math.log(2.0)

MAGIC = b"CNCM"
FORMAT_VERSION = 1


class Alphabet:
    """A finite symbol set; symbols are the indices 0..size-1."""

    __slots__ = ("size",)

    def __init__(self, size: int):
        if size < 1:
            raise InputError(f"alphabet size must be >= 1, got {size}")
        self.size = int(size)

    def check(self, symbol: int) -> int:
        if not 0 <= symbol < self.size:
            raise InputError(f"symbol {symbol} outside alphabet of size {self.size}")
        return symbol

    def __repr__(self):
        return f"Alphabet({self.size})"

    def __eq__(self, other):
        return isinstance(other, Alphabet) and other.size == self.size


class SequentialModel(ABC):
    """One-step predictive model, updatable online.

    `prob` must not mutate the model; `update` advances the history by one
    symbol.  Subclasses with ``normalized = True`` guarantee the predictive
    distribution sums to one; unnormalized models (LZ) only guarantee
    scores in (0, 1].

    Instances are single-writer: serialize updates externally.  Probability
    queries are pure reads and may run concurrently with each other, but
    not with an update.
    """

    normalized: bool = True
    kind: str = "?"

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet
        self.n_updates = 0

    @abstractmethod
    def prob(self, symbol: int) -> float:
        """Predictive probability of `symbol` under the current history."""

    @abstractmethod
    def update(self, symbol: int) -> None:
        """Condition all subsequent predictions on `symbol`."""

    def log_prob(self, symbol: int) -> float:
        p = self.prob(symbol)
        return math.log(p) if p > 0.0 else -math.inf

    def probs(self) -> np.ndarray:
        """Predictive vector over the whole alphabet."""
        return np.array([self.prob(x) for x in range(self.alphabet.size)])

    def logloss_bits(self, seq) -> float:
        """Cumulative -log2 probability of `seq`, updating as it goes."""
        total = 0.0
        for x in seq:
            total -= self.log_prob(x)
            self.update(x)
        return total / _LN2

    # Atomic models consume states as single-symbol blocks.

    def log_score_block(self, syms) -> float:
        if len(syms) != 1:
            raise InputError(f"{self.kind} is an atomic model; got a {len(syms)}-symbol block")
        return self.log_prob(syms[0])

    def update_block(self, syms) -> None:
        if len(syms) != 1:
            raise InputError(f"{self.kind} is an atomic model; got a {len(syms)}-symbol block")
        self.update(syms[0])

    # -- snapshot format: MAGIC, u16 version, key record, payload records --

    def to_bytes(self) -> bytes:
        body = pack_records([self.kind.encode("ascii")] + self._state_records())
        return MAGIC + struct.pack("<H", FORMAT_VERSION) + body

    @abstractmethod
    def _state_records(self) -> list[bytes]:
        """Sufficient statistics as a list of byte records."""

    @abstractmethod
    def _load_state_records(self, records: list[bytes]) -> None:
        """Inverse of `_state_records`."""

    def restore(self, data: bytes) -> None:
        key, records = split_snapshot(data)
        if key != self.kind:
            raise InputError(f"snapshot is for model '{key}', not '{self.kind}'")
        self._load_state_records(records)


def pack_records(records) -> bytes:
    out = bytearray()
    for rec in records:
        out += struct.pack("<I", len(rec))
        out += rec
    return bytes(out)


def unpack_records(data: bytes) -> list[bytes]:
    records = []
    pos = 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise InputError("truncated record stream")
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + length > len(data):
            raise InputError("truncated record payload")
        records.append(data[pos : pos + length])
        pos += length
    return records


def split_snapshot(data: bytes):
    """Return (model key, state records) from a snapshot blob."""
    if data[:4] != MAGIC:
        raise InputError("not a model snapshot (bad magic)")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != FORMAT_VERSION:
        raise InputError(f"unsupported snapshot version {version}")
    records = unpack_records(data[6:])
    if not records:
        raise InputError("empty snapshot")
    return records[0].decode("ascii"), records[1:]


def pack_ints(values) -> bytes:
    arr = np.asarray(values, dtype=np.int64)
    return arr.tobytes()


def unpack_ints(rec: bytes) -> np.ndarray:
    return np.frombuffer(rec, dtype=np.int64).copy()


def pack_floats(values) -> bytes:
    return np.asarray(values, dtype=np.float64).tobytes()


def unpack_floats(rec: bytes) -> np.ndarray:
    return np.frombuffer(rec, dtype=np.float64).copy()


def log_add(a: float, b: float) -> float:
    """log(exp(a) + exp(b)) with max subtraction."""
    if a < b:
        a, b = b, a
    if b == -math.inf:
        return a
    return a + math.log1p(math.exp(b - a))


def normalize_log_weights(logw: np.ndarray) -> np.ndarray:
    """exp-normalize a log-weight vector; all -inf maps to all NaN."""
    m = np.max(logw)
    if m == -math.inf:
        return np.full_like(logw, np.nan)
    w = np.exp(logw - m)
    return w / w.sum()
