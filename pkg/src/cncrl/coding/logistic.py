"""Autoregressive logistic model over factored states.

Each factor's conditional distribution is a softmax of linear scores over
shared weights; features are a bias plus one-hot encodings of the factor's
local context (its own value in the previous state, then row-major
preceding factors of the current state).  Weights update online with
per-coordinate adaptive steps.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from ..errors import InputError
from .base import (
    FORMAT_VERSION,
    MAGIC,
    pack_floats,
    pack_ints,
    pack_records,
    split_snapshot,
    unpack_floats,
    unpack_ints,
)

PAD = -1


class AdagradOptimizer:
    """Per-coordinate adaptive gradient descent with accumulated squared
    gradients (monotonically nondecreasing)."""

    def __init__(self, shape, learning_rate: float = 0.1, eps: float = 1e-8):
        self.learning_rate = float(learning_rate)
        self.eps = float(eps)
        self.accum = np.zeros(shape)

    def step_columns(self, weights: np.ndarray, grad: np.ndarray, cols) -> None:
        """Apply one step touching only the feature columns in `cols`.
        `grad` has one column per entry of `cols`."""
        g2 = self.accum[:, cols] + grad * grad
        self.accum[:, cols] = g2
        weights[:, cols] -= self.learning_rate * grad / (np.sqrt(g2) + self.eps)


class LogisticModel:
    """Shared-weight softmax predictor for every factor of a state."""

    normalized = True
    kind = "logistic"

    def __init__(self, factor_alphabet: int, n_factors: int, context_slots: int = 2,
                 learning_rate: float = 0.1, eps: float = 1e-8):
        if factor_alphabet < 2:
            raise InputError("logistic model needs a factor alphabet of size >= 2")
        self.factor_alphabet = int(factor_alphabet)
        self.n_factors = int(n_factors)
        self.context_slots = int(context_slots)
        # Feature layout: [bias][slot 0: pad, sym 0..B-1][slot 1: ...] ...
        self.n_features = 1 + self.context_slots * (self.factor_alphabet + 1)
        self.weights = np.zeros((self.factor_alphabet, self.n_features))
        self.optimizer = AdagradOptimizer(self.weights.shape, learning_rate, eps)
        self.prev: tuple | None = None
        self.n_updates = 0

    def feature_columns(self, context) -> list[int]:
        """Active (value 1) feature indices for a context tuple; entries of
        `context` are symbols or PAD."""
        if len(context) != self.context_slots:
            raise InputError(f"context must have {self.context_slots} slots")
        cols = [0]
        base = 1
        for slot, v in enumerate(context):
            if v != PAD and not 0 <= v < self.factor_alphabet:
                raise InputError(f"context symbol {v} outside factor alphabet")
            cols.append(base + slot * (self.factor_alphabet + 1) + (v + 1))
        return cols

    def factor_log_probs(self, context) -> np.ndarray:
        cols = self.feature_columns(context)
        scores = self.weights[:, cols].sum(axis=1)
        m = scores.max()
        z = np.exp(scores - m)
        return (scores - m) - math.log(z.sum())

    def factor_probs(self, context) -> np.ndarray:
        """Predictive vector over the factor alphabet given one context."""
        return np.exp(self.factor_log_probs(context))

    def observe(self, context, symbol: int) -> None:
        """One gradient step on the log-loss of `symbol` under `context`."""
        if not 0 <= symbol < self.factor_alphabet:
            raise InputError(f"symbol {symbol} outside factor alphabet")
        cols = self.feature_columns(context)
        p = np.exp(self.factor_log_probs(context))
        gvec = p.copy()
        gvec[symbol] -= 1.0
        grad = np.repeat(gvec[:, None], len(cols), axis=1)
        self.optimizer.step_columns(self.weights, grad, cols)

    # -- state-level interface (tuples of factors) --

    def _context_for(self, factors, i: int):
        ctx = []
        ctx.append(self.prev[i] if self.prev is not None else PAD)
        j = i - 1
        while len(ctx) < self.context_slots:
            ctx.append(factors[j] if j >= 0 else PAD)
            j -= 1
        return tuple(ctx[: self.context_slots])

    def log_score_block(self, factors) -> float:
        if len(factors) != self.n_factors:
            raise InputError(f"expected {self.n_factors} factors, got {len(factors)}")
        total = 0.0
        for i in range(self.n_factors):
            total += float(self.factor_log_probs(self._context_for(factors, i))[factors[i]])
        return total

    def update_block(self, factors) -> None:
        if len(factors) != self.n_factors:
            raise InputError(f"expected {self.n_factors} factors, got {len(factors)}")
        for i in range(self.n_factors):
            self.observe(self._context_for(factors, i), factors[i])
        self.prev = tuple(factors)
        self.n_updates += 1

    def to_bytes(self) -> bytes:
        prev = list(self.prev) if self.prev is not None else []
        records = [
            self.kind.encode("ascii"),
            pack_ints([self.factor_alphabet, self.n_factors, self.context_slots,
                       self.n_updates, len(prev)]),
            struct.pack("<dd", self.optimizer.learning_rate, self.optimizer.eps),
            pack_floats(self.weights.ravel()),
            pack_floats(self.optimizer.accum.ravel()),
            pack_ints(prev),
        ]
        return MAGIC + struct.pack("<H", FORMAT_VERSION) + pack_records(records)

    def restore(self, data: bytes) -> None:
        key, records = split_snapshot(data)
        if key != self.kind:
            raise InputError(f"snapshot is for model '{key}', not '{self.kind}'")
        b, k, slots, n, n_prev = (int(v) for v in unpack_ints(records[0]))
        lr, eps = struct.unpack("<dd", records[1])
        self.__init__(b, k, slots, lr, eps)
        self.n_updates = n
        self.weights = unpack_floats(records[2]).reshape(self.weights.shape)
        self.optimizer.accum = unpack_floats(records[3]).reshape(self.weights.shape)
        prev = [int(v) for v in unpack_ints(records[4])]
        self.prev = tuple(prev) if prev else None
