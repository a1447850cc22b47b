"""Incremental-parse dictionary model (LZ78 family).

The parser splits a stream into phrases, each extending a previously seen
phrase by one symbol.  Code length accounting: a completed phrase costs
ceil(log2(D+1)) + ceil(log2(|X|)) bits, where D is the dictionary size
before the phrase; an open (still matching) phrase is charged the same as
if it were closed.  The implied score of appending symbols is
2^(-delta bits), which is 1 when the appended data keeps matching the
dictionary and shrinks when it forces new phrases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .base import Alphabet, SequentialModel, pack_ints, unpack_ints

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class LzPhrase:
    """One parsed phrase: dictionary index of its longest proper prefix,
    plus the extending symbol.  The final phrase may be partial (it matched
    an existing dictionary entry when the input ran out); then `symbol` is
    None and `prefix` is the matched entry itself."""

    prefix: int
    symbol: int | None

    @property
    def partial(self) -> bool:
        return self.symbol is None


def parse_lz78(seq) -> list[LzPhrase]:
    """Incremental parse; the dictionary starts with only the empty phrase
    (index 0) and phrase k gets index k."""
    trie: dict[tuple[int, int], int] = {}
    phrases: list[LzPhrase] = []
    node = 0
    next_id = 1
    for sym in seq:
        child = trie.get((node, sym))
        if child is not None:
            node = child
        else:
            phrases.append(LzPhrase(node, sym))
            trie[(node, sym)] = next_id
            next_id += 1
            node = 0
    if node != 0:
        phrases.append(LzPhrase(node, None))
    return phrases


def phrase_strings(phrases: list[LzPhrase]) -> list[list[int]]:
    """Expand parsed phrases back into symbol runs (identity on concat)."""
    table: list[list[int]] = [[]]
    out = []
    for ph in phrases:
        if ph.partial:
            out.append(list(table[ph.prefix]))
        else:
            s = table[ph.prefix] + [ph.symbol]
            table.append(s)
            out.append(s)
    return out


class Lz78Model(SequentialModel):
    """Coding model over the incremental parse of its whole history.

    Scores are unnormalized: score(x) = 2^-(bits(history + x) - bits(history)),
    always in (0, 1].  Appending a block of symbols is scored the same way
    without committing it (dictionary growth inside the block is simulated).
    """

    normalized = False
    kind = "lz"

    def __init__(self, alphabet: Alphabet):
        super().__init__(alphabet)
        self.symbol_bits = math.ceil(math.log2(alphabet.size)) if alphabet.size > 1 else 0
        self.trie: dict[tuple[int, int], int] = {}
        self.dict_size = 0
        self.cursor = 0
        self.closed_bits = 0

    def _phrase_cost(self, dict_size: int) -> int:
        return math.ceil(math.log2(dict_size + 1)) + self.symbol_bits

    def total_bits(self) -> int:
        """Code length of the committed history under the length rule."""
        open_cost = self._phrase_cost(self.dict_size) if self.cursor != 0 else 0
        return self.closed_bits + open_cost

    def delta_bits(self, syms) -> int:
        """bits(history + syms) - bits(history), leaving the model untouched."""
        node = self.cursor
        dict_size = self.dict_size
        added = 0
        overlay: dict[tuple[int, int], int] = {}
        next_id = dict_size + 1
        for sym in syms:
            self.alphabet.check(sym)
            key = (node, sym)
            child = self.trie.get(key)
            if child is None:
                child = overlay.get(key)
            if child is not None:
                node = child
            else:
                added += self._phrase_cost(dict_size)
                overlay[key] = next_id
                next_id += 1
                dict_size += 1
                node = 0
        open_cost = self._phrase_cost(dict_size) if node != 0 else 0
        old_open = self._phrase_cost(self.dict_size) if self.cursor != 0 else 0
        return added + open_cost - old_open

    def score(self, symbol: int) -> float:
        """Unnormalized next-symbol score, 2^-(marginal bits)."""
        return 2.0 ** (-self.delta_bits((symbol,)))

    def prob(self, symbol: int) -> float:
        return self.score(symbol)

    def log_score_block(self, syms) -> float:
        return -self.delta_bits(syms) * _LN2

    def update(self, symbol: int) -> None:
        self.alphabet.check(symbol)
        key = (self.cursor, symbol)
        child = self.trie.get(key)
        if child is not None:
            self.cursor = child
        else:
            self.closed_bits += self._phrase_cost(self.dict_size)
            self.dict_size += 1
            self.trie[key] = self.dict_size
            self.cursor = 0
        self.n_updates += 1

    def update_block(self, syms) -> None:
        for sym in syms:
            self.update(sym)

    def _state_records(self):
        edges = sorted(self.trie.items(), key=lambda kv: kv[1])
        flat = []
        for (parent, sym), child in edges:
            flat.extend((parent, sym, child))
        return [
            pack_ints([self.alphabet.size, self.n_updates, self.dict_size,
                       self.cursor, self.closed_bits]),
            pack_ints(flat),
        ]

    def _load_state_records(self, records):
        head = unpack_ints(records[0])
        self.alphabet = Alphabet(int(head[0]))
        self.symbol_bits = math.ceil(math.log2(self.alphabet.size)) if self.alphabet.size > 1 else 0
        self.n_updates = int(head[1])
        self.dict_size = int(head[2])
        self.cursor = int(head[3])
        self.closed_bits = int(head[4])
        flat = unpack_ints(records[1])
        self.trie = {}
        for i in range(0, len(flat), 3):
            self.trie[(int(flat[i]), int(flat[i + 1]))] = int(flat[i + 2])
