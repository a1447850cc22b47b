"""Context-tree weighting over multi-symbol alphabets.

Every tree node carries a Dirichlet(1/2) count estimator for the symbols
routed through it.  An internal node mixes its own estimate with the
product of its children's weighted probabilities, half and half:

    P_w = 1/2 * P_e + 1/2 * prod_children P_w      (leaf: P_w = P_e)

All bookkeeping is in natural-log space.  An unvisited subtree has seen
the empty sequence, so its weighted probability is exactly 1 and it
contributes 0 to its parent's children term.
"""

from __future__ import annotations

import math
import struct

from ..errors import InputError
from .base import (
    LOG_HALF,
    Alphabet,
    SequentialModel,
    log_add,
    pack_ints,
    unpack_ints,
)


class _Node:
    __slots__ = ("counts", "total", "log_pe", "log_pw", "log_children", "children", "depth")

    def __init__(self, alphabet_size: int, depth: int):
        self.counts = [0] * alphabet_size
        self.total = 0
        self.log_pe = 0.0
        self.log_pw = 0.0
        self.log_children = 0.0
        self.children: dict[int, _Node] = {}
        self.depth = depth


class ContextTree:
    """The weighting tree itself; contexts are supplied by the caller.

    `context` is most-recent-first and must have exactly `depth` entries
    drawn from the context alphabet (callers pad short histories).
    """

    def __init__(self, alphabet_size: int, depth: int, alpha: float = 0.5,
                 context_alphabet_size: int | None = None):
        if depth < 0:
            raise InputError("context depth must be >= 0")
        self.alphabet_size = int(alphabet_size)
        self.context_alphabet_size = int(context_alphabet_size or alphabet_size)
        self.depth = int(depth)
        self.alpha = float(alpha)
        self.root = _Node(self.alphabet_size, 0)
        self.n_updates = 0

    def _estimator_log_step(self, node: _Node, symbol: int) -> float:
        a = self.alpha
        return math.log(node.counts[symbol] + a) - math.log(node.total + a * self.alphabet_size)

    def _path(self, context, create: bool):
        """Nodes from root to depth, following `context`; None where absent."""
        nodes = [self.root]
        node = self.root
        for d in range(self.depth):
            c = context[d]
            child = node.children.get(c) if node is not None else None
            if child is None and create and node is not None:
                child = _Node(self.alphabet_size, d + 1)
                node.children[c] = child
            nodes.append(child)
            node = child
        return nodes

    def update(self, symbol: int, context) -> None:
        if not 0 <= symbol < self.alphabet_size:
            raise InputError(f"symbol {symbol} outside alphabet of size {self.alphabet_size}")
        if len(context) != self.depth:
            raise InputError(f"context must have length {self.depth}")
        nodes = self._path(context, create=True)
        child_old_pw = 0.0
        child_new_pw = 0.0
        for d in range(self.depth, -1, -1):
            node = nodes[d]
            node.log_pe += self._estimator_log_step(node, symbol)
            node.counts[symbol] += 1
            node.total += 1
            old_pw = node.log_pw
            if d == self.depth:
                node.log_pw = node.log_pe
            else:
                node.log_children += child_new_pw - child_old_pw
                node.log_pw = LOG_HALF + log_add(node.log_pe, node.log_children)
            child_old_pw = old_pw
            child_new_pw = node.log_pw
        self.n_updates += 1

    def log_prob(self, symbol: int, context) -> float:
        """log P(symbol | context, history), without mutating the tree."""
        if not 0 <= symbol < self.alphabet_size:
            raise InputError(f"symbol {symbol} outside alphabet of size {self.alphabet_size}")
        if len(context) != self.depth:
            raise InputError(f"context must have length {self.depth}")
        nodes = self._path(context, create=False)
        new_pw = 0.0
        old_pw = 0.0
        for d in range(self.depth, -1, -1):
            node = nodes[d]
            if node is None:
                node_pe, node_children, node_pw = 0.0, 0.0, 0.0
                step = math.log(self.alpha) - math.log(self.alpha * self.alphabet_size)
            else:
                node_pe, node_children, node_pw = node.log_pe, node.log_children, node.log_pw
                step = self._estimator_log_step(node, symbol)
            pe_new = node_pe + step
            if d == self.depth:
                pw_new = pe_new
            else:
                children_new = node_children + (new_pw - old_pw)
                pw_new = LOG_HALF + log_add(pe_new, children_new)
            old_pw = node_pw
            new_pw = pw_new
        return new_pw - old_pw  # old_pw is now the root's current log P_w

    def root_log_prob_sequence(self) -> float:
        """log P_w at the root: the joint probability of everything seen."""
        return self.root.log_pw

    def iter_nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.children.values())

    def mixture_deviation(self) -> float:
        """Worst-case violation of the node recursion, in log space."""
        worst = 0.0
        for node in self.iter_nodes():
            if node.depth == self.depth:
                worst = max(worst, abs(node.log_pw - node.log_pe))
            else:
                children = sum(c.log_pw for c in node.children.values())
                expect = LOG_HALF + log_add(node.log_pe, children)
                worst = max(worst, abs(node.log_pw - expect), abs(node.log_children - children))
        return worst

    # -- flat node serialization: parent-linked preorder records --

    def dump_records(self) -> list[bytes]:
        header = struct.pack(
            "<qqqdq",
            self.alphabet_size,
            self.context_alphabet_size,
            self.depth,
            self.alpha,
            self.n_updates,
        )
        order = []
        index = {}
        stack = [(self.root, -1, -1)]
        while stack:
            node, parent, sym = stack.pop()
            index[id(node)] = len(order)
            order.append((node, parent, sym))
            for c_sym in sorted(node.children, reverse=True):
                stack.append((node.children[c_sym], index[id(node)], c_sym))
        links = []
        payload = bytearray()
        for node, parent, sym in order:
            links.extend([parent, sym])
            payload += struct.pack("<ddd", node.log_pe, node.log_pw, node.log_children)
            payload += pack_ints(node.counts)
        return [header, pack_ints(links), bytes(payload)]

    @classmethod
    def from_records(cls, records: list[bytes]) -> "ContextTree":
        a_size, ctx_size, depth, alpha, n_updates = struct.unpack("<qqqdq", records[0])
        tree = cls(a_size, depth, alpha, ctx_size)
        tree.n_updates = int(n_updates)
        links = unpack_ints(records[1])
        payload = records[2]
        node_bytes = 24 + 8 * a_size
        nodes = []
        for i in range(len(links) // 2):
            parent, sym = int(links[2 * i]), int(links[2 * i + 1])
            off = i * node_bytes
            log_pe, log_pw, log_children = struct.unpack_from("<ddd", payload, off)
            counts = unpack_ints(payload[off + 24 : off + node_bytes])
            if parent < 0:
                node = tree.root
            else:
                node = _Node(a_size, nodes[parent].depth + 1)
                nodes[parent].children[sym] = node
            node.log_pe, node.log_pw, node.log_children = log_pe, log_pw, log_children
            node.counts = [int(c) for c in counts]
            node.total = int(sum(counts))
            nodes.append(node)
        return tree


class CtwModel(SequentialModel):
    """Sequential model whose context is its own recent history,
    most recent symbol first, zero-padded before the history fills."""

    kind = "ctw"

    def __init__(self, alphabet: Alphabet, depth: int = 2, alpha: float = 0.5):
        super().__init__(alphabet)
        self.tree = ContextTree(alphabet.size, depth, alpha)
        self.recent: list[int] = []

    def _context(self):
        ctx = self.recent[-self.tree.depth :][::-1]
        ctx += [0] * (self.tree.depth - len(ctx))
        return ctx

    def prob(self, symbol: int) -> float:
        return math.exp(self.log_prob(symbol))

    def log_prob(self, symbol: int) -> float:
        self.alphabet.check(symbol)
        return self.tree.log_prob(symbol, self._context())

    def update(self, symbol: int) -> None:
        self.alphabet.check(symbol)
        self.tree.update(symbol, self._context())
        self.recent.append(symbol)
        if len(self.recent) > self.tree.depth:
            del self.recent[: -self.tree.depth or None]
        self.n_updates += 1

    def _state_records(self):
        return [pack_ints([self.n_updates]), pack_ints(self.recent)] + self.tree.dump_records()

    def _load_state_records(self, records):
        self.n_updates = int(unpack_ints(records[0])[0])
        self.recent = [int(x) for x in unpack_ints(records[1])]
        self.tree = ContextTree.from_records(records[2:])
        self.alphabet = Alphabet(self.tree.alphabet_size)
