"""Product models over factored states.

A factored model scores a state as the product of one conditional per
factor, decoded in a fixed row-major order.  Context wiring decides what
each factor's predictor conditions on; the grid wiring feeds it the same
factor's value in the previous state followed by the current state's
already-decoded neighbors.
"""

from __future__ import annotations

import struct

from ..errors import InputError
from .base import (
    FORMAT_VERSION,
    MAGIC,
    pack_ints,
    pack_records,
    split_snapshot,
    unpack_ints,
)
from .counts import SadModel
from .ctw import ContextTree
from .logistic import PAD


class GridWiring:
    """Context order: previous state's value of the same factor, then
    row-major preceding factors of the current state, truncated to
    `depth` slots; missing entries are PAD."""

    def __init__(self, depth: int = 2):
        self.depth = int(depth)

    def context(self, prev, current_prefix, i: int):
        ctx = [prev[i] if prev is not None else PAD]
        j = i - 1
        while len(ctx) < self.depth:
            ctx.append(current_prefix[j] if j >= 0 else PAD)
            j -= 1
        return tuple(ctx[: self.depth])


class _TreePredictor:
    """Context-tree predictor for one factor (PAD context maps to 0)."""

    def __init__(self, alphabet_size: int, depth: int, alpha: float):
        self.tree = ContextTree(alphabet_size, depth, alpha)

    def _ctx(self, context):
        return [0 if c == PAD else c for c in context]

    def log_prob(self, symbol, context) -> float:
        return self.tree.log_prob(symbol, self._ctx(context))

    def update(self, symbol, context) -> None:
        self.tree.update(symbol, self._ctx(context))

    def dump(self):
        return self.tree.dump_records()

    @classmethod
    def load(cls, records):
        obj = cls.__new__(cls)
        obj.tree = ContextTree.from_records(records)
        return obj


class _SparsePredictor:
    """Context-free sparse count predictor for one factor."""

    def __init__(self, alphabet_size, log_size=None):
        self.model = SadModel(alphabet_size, log_size)

    def log_prob(self, symbol, context) -> float:
        return self.model.log_prob(symbol)

    def update(self, symbol, context) -> None:
        self.model.update(symbol)

    def dump(self):
        return self.model._state_records()

    @classmethod
    def load(cls, records):
        obj = cls.__new__(cls)
        obj.model = SadModel.__new__(SadModel)
        obj.model._load_state_records(records)
        return obj


class FactoredModel:
    """Product-of-conditionals model over factor tuples.

    The log score is accumulated factor by factor in index order, so the
    floating addition order is fixed.
    """

    normalized = True

    def __init__(self, predictors, wiring: GridWiring, kind: str):
        self.predictors = list(predictors)
        self.n_factors = len(self.predictors)
        self.wiring = wiring
        self.kind = kind
        self.prev: tuple | None = None
        self.n_updates = 0

    def _check(self, factors):
        if len(factors) != self.n_factors:
            raise InputError(f"expected {self.n_factors} factors, got {len(factors)}")

    def factor_log_prob(self, factors, i: int) -> float:
        ctx = self.wiring.context(self.prev, factors, i)
        return self.predictors[i].log_prob(factors[i], ctx)

    def log_score_block(self, factors) -> float:
        self._check(factors)
        total = 0.0
        for i in range(self.n_factors):
            total += self.factor_log_prob(factors, i)
        return total

    def update_block(self, factors) -> None:
        self._check(factors)
        for i in range(self.n_factors):
            ctx = self.wiring.context(self.prev, factors, i)
            self.predictors[i].update(factors[i], ctx)
        self.prev = tuple(factors)
        self.n_updates += 1

    def to_bytes(self) -> bytes:
        prev = list(self.prev) if self.prev is not None else []
        records = [
            self.kind.encode("ascii"),
            pack_ints([self.n_factors, self.wiring.depth, self.n_updates, len(prev)]),
            pack_ints(prev),
        ]
        for pred in self.predictors:
            sub = pred.dump()
            records.append(struct.pack("<I", len(sub)))
            records.extend(sub)
        return MAGIC + struct.pack("<H", FORMAT_VERSION) + pack_records(records)

    def restore(self, data: bytes) -> None:
        key, records = split_snapshot(data)
        if key != self.kind:
            raise InputError(f"snapshot is for model '{key}', not '{self.kind}'")
        n_factors, depth, n_updates, n_prev = (int(v) for v in unpack_ints(records[0]))
        self.wiring = GridWiring(depth)
        self.n_updates = n_updates
        prev = [int(v) for v in unpack_ints(records[1])]
        self.prev = tuple(prev) if prev else None
        pred_cls = _TreePredictor if key == "factored-ctw" else _SparsePredictor
        self.predictors = []
        pos = 2
        for _ in range(n_factors):
            (n_sub,) = struct.unpack("<I", records[pos])
            sub = records[pos + 1 : pos + 1 + n_sub]
            self.predictors.append(pred_cls.load(sub))
            pos += 1 + n_sub
        self.n_factors = n_factors
        self.kind = key


def factored_ctw(factor_alphabets, depth: int = 2, alpha: float = 0.5) -> FactoredModel:
    preds = [_TreePredictor(b, depth, alpha) for b in factor_alphabets]
    return FactoredModel(preds, GridWiring(depth), "factored-ctw")


def factored_sad(factor_alphabets, log_sizes=None, depth: int = 2) -> FactoredModel:
    if log_sizes is None:
        log_sizes = [None] * len(factor_alphabets)
    preds = [_SparsePredictor(b, ls) for b, ls in zip(factor_alphabets, log_sizes)]
    return FactoredModel(preds, GridWiring(depth), "factored-sad")
