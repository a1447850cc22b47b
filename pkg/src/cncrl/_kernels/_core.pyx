"""Compiled twins of the hot kernels (see pure.py for the reference
semantics).  Arithmetic follows the pure implementations operation for
operation, so results agree to the last ulp wherever summation order is
shared."""

import numpy as np

cimport numpy as cnp  # noqa: F401  (buffer protocol)
from libc.math cimport log, INFINITY
from libc.stdlib cimport calloc, free, malloc
from libc.string cimport memset

BACKEND = "compiled"

DEF CHUNK = 65536
DEF EXACT_LIMIT = 9007199254740992.0  # 2^53

cdef double LN2 = log(2.0)


def simulate_chain(double[:, ::1] policy_cum, long long[::1] offsets,
                   long long[::1] next_flat, long long[::1] reward_flat,
                   double[::1] cum_flat, int n_actions, long long start,
                   long long steps, seed):
    rng = np.random.default_rng(seed)
    actions = np.empty(steps, dtype=np.int64)
    states = np.empty(steps, dtype=np.int64)
    rewards = np.empty(steps, dtype=np.int64)
    cdef long long[::1] actions_v = actions
    cdef long long[::1] states_v = states
    cdef long long[::1] rewards_v = rewards
    cdef long long s = start
    cdef long long t = 0
    cdef long long pos = CHUNK
    cdef long long lo, hi, i
    cdef int a
    cdef double u_a, u_t
    cdef double[::1] uniforms = np.empty(0)
    while t < steps:
        if pos >= CHUNK:
            uniforms = rng.random(2 * CHUNK)
            pos = 0
        u_a = uniforms[2 * pos]
        u_t = uniforms[2 * pos + 1]
        pos += 1
        a = 0
        while a < n_actions - 1 and u_a >= policy_cum[s, a]:
            a += 1
        lo = offsets[s * n_actions + a]
        hi = offsets[s * n_actions + a + 1]
        i = lo
        while i < hi - 1 and u_t >= cum_flat[i]:
            i += 1
        actions_v[t] = a
        states_v[t] = next_flat[i]
        rewards_v[t] = reward_flat[i]
        s = next_flat[i]
        t += 1
    return actions, states, rewards


def sad_block_logscores(double[:, ::1] count_rows, double[::1] totals,
                        double[:, ::1] mseen, double[::1] sizes,
                        double[::1] log_sizes, double[::1] out):
    cdef Py_ssize_t k = count_rows.shape[0]
    cdef Py_ssize_t n_z = count_rows.shape[1]
    cdef Py_ssize_t z, r
    cdef double acc, tot, m, beta, denom, c, unseen
    cdef bint exact
    for z in range(n_z):
        acc = 0.0
        tot = totals[z]
        for r in range(k):
            m = mseen[r, z]
            exact = sizes[r] <= EXACT_LIMIT
            if exact and sizes[r] - m <= 0.0:
                beta = 0.0  # everything seen: pure empirical shares
            elif m >= 2.0:
                beta = m / 2.0
            else:
                beta = 0.5
            denom = log(tot + beta)
            c = count_rows[r, z]
            if c > 0.0:
                acc += log(c) - denom
            elif exact:
                unseen = sizes[r] - m
                if unseen > 0.0:
                    acc += log(beta) - denom - log(unseen)
                else:
                    acc += -INFINITY
            else:
                acc += log(beta) - denom - log_sizes[r]
        out[z] = acc
    return np.asarray(out)


# -- incremental-parse dictionaries --

cdef struct HashMap:
    long long *keys
    int *vals
    long long capacity   # power of two
    long long count
    int shift            # 64 - log2(capacity)

cdef long long EMPTY_KEY = -1


cdef void hm_init(HashMap *hm, long long capacity) noexcept:
    hm.capacity = capacity
    hm.count = 0
    hm.shift = 64
    cdef long long c = capacity
    while c > 1:
        c >>= 1
        hm.shift -= 1
    hm.keys = <long long *> malloc(capacity * sizeof(long long))
    hm.vals = <int *> malloc(capacity * sizeof(int))
    cdef long long i
    for i in range(capacity):
        hm.keys[i] = EMPTY_KEY


cdef void hm_free(HashMap *hm) noexcept:
    if hm.keys != NULL:
        free(hm.keys)
        free(hm.vals)
        hm.keys = NULL
        hm.vals = NULL


cdef inline long long hm_slot(HashMap *hm, long long key) noexcept:
    # Fibonacci hashing; the high product bits carry the mixing.
    cdef unsigned long long h = (<unsigned long long> key) * 11400714819323198485ULL
    return <long long> (h >> hm.shift)


cdef int hm_get(HashMap *hm, long long key) noexcept:
    cdef long long slot = hm_slot(hm, key)
    while True:
        if hm.keys[slot] == key:
            return hm.vals[slot]
        if hm.keys[slot] == EMPTY_KEY:
            return -1
        slot = (slot + 1) & (hm.capacity - 1)


cdef void hm_grow(HashMap *hm) noexcept:
    cdef HashMap grown
    hm_init(&grown, hm.capacity * 2)
    cdef long long i, slot
    for i in range(hm.capacity):
        if hm.keys[i] != EMPTY_KEY:
            slot = hm_slot(&grown, hm.keys[i])
            while grown.keys[slot] != EMPTY_KEY:
                slot = (slot + 1) & (grown.capacity - 1)
            grown.keys[slot] = hm.keys[i]
            grown.vals[slot] = hm.vals[i]
    grown.count = hm.count
    hm_free(hm)
    hm[0] = grown


cdef void hm_put(HashMap *hm, long long key, int val) noexcept:
    if 2 * (hm.count + 1) >= hm.capacity:
        hm_grow(hm)
    cdef long long slot = hm_slot(hm, key)
    while hm.keys[slot] != EMPTY_KEY and hm.keys[slot] != key:
        slot = (slot + 1) & (hm.capacity - 1)
    if hm.keys[slot] == EMPTY_KEY:
        hm.count += 1
    hm.keys[slot] = key
    hm.vals[slot] = val


cdef inline int ceil_log2(long long n) noexcept:
    cdef int bits = 0
    cdef long long v
    if n <= 1:
        return 0
    v = n - 1
    while v > 0:
        v >>= 1
        bits += 1
    return bits


# Symbols must fit 21 bits so (node, symbol) packs into one int64 key.
DEF SYM_BITS = 21
DEF SYM_LIMIT = 2097152


cdef class LzTrieSet:
    """Bank of LZ78 dictionaries with what-if block costing; see the
    pure twin for the cost rule."""

    cdef HashMap *tries
    cdef long long *dict_sizes
    cdef long long *cursors
    cdef long long *closed
    cdef readonly int n_buckets
    cdef readonly int symbol_bits
    # generation-tagged scratch hash for what-if overlays
    cdef long long *ov_keys
    cdef int *ov_vals
    cdef long long *ov_gen
    cdef long long ov_cap
    cdef int ov_shift
    cdef long long ov_generation
    cdef long long *sym_buf
    cdef long long sym_cap

    cdef void _set_ov_shift(self) noexcept:
        cdef long long c = self.ov_cap
        self.ov_shift = 64
        while c > 1:
            c >>= 1
            self.ov_shift -= 1

    def __cinit__(self, int n_buckets, int symbol_bits):
        self.n_buckets = n_buckets
        self.symbol_bits = symbol_bits
        self.tries = <HashMap *> calloc(n_buckets, sizeof(HashMap))
        self.dict_sizes = <long long *> calloc(n_buckets, sizeof(long long))
        self.cursors = <long long *> calloc(n_buckets, sizeof(long long))
        self.closed = <long long *> calloc(n_buckets, sizeof(long long))
        cdef int b
        for b in range(n_buckets):
            hm_init(&self.tries[b], 64)
        self.ov_cap = 512
        self.ov_keys = <long long *> malloc(self.ov_cap * sizeof(long long))
        self.ov_vals = <int *> malloc(self.ov_cap * sizeof(int))
        self.ov_gen = <long long *> calloc(self.ov_cap, sizeof(long long))
        self.ov_generation = 0
        self._set_ov_shift()
        self.sym_cap = 64
        self.sym_buf = <long long *> malloc(self.sym_cap * sizeof(long long))

    def __dealloc__(self):
        cdef int b
        if self.tries != NULL:
            for b in range(self.n_buckets):
                hm_free(&self.tries[b])
            free(self.tries)
        free(self.dict_sizes)
        free(self.cursors)
        free(self.closed)
        free(self.ov_keys)
        free(self.ov_vals)
        free(self.ov_gen)
        free(self.sym_buf)

    cdef long long _load_syms(self, syms) except -1:
        cdef long long n = len(syms)
        cdef long long i, v
        if n > self.sym_cap:
            free(self.sym_buf)
            self.sym_cap = 2 * n
            self.sym_buf = <long long *> malloc(self.sym_cap * sizeof(long long))
        # Keep the overlay at most quarter-full for any block length.
        while 4 * n >= self.ov_cap:
            free(self.ov_keys)
            free(self.ov_vals)
            free(self.ov_gen)
            self.ov_cap *= 2
            self.ov_keys = <long long *> malloc(self.ov_cap * sizeof(long long))
            self.ov_vals = <int *> malloc(self.ov_cap * sizeof(int))
            self.ov_gen = <long long *> calloc(self.ov_cap, sizeof(long long))
            self.ov_generation = 0
            self._set_ov_shift()
        for i in range(n):
            v = syms[i]
            if v < 0 or v >= SYM_LIMIT:
                raise ValueError(f"symbol {v} out of range for the compiled trie")
            self.sym_buf[i] = v
        return n

    cdef inline long long _phrase_cost(self, long long dict_size) noexcept:
        return ceil_log2(dict_size + 1) + self.symbol_bits

    def total_bits(self, int bucket):
        cdef long long open_cost = 0
        if self.cursors[bucket] != 0:
            open_cost = self._phrase_cost(self.dict_sizes[bucket])
        return self.closed[bucket] + open_cost

    cdef long long _delta(self, int bucket, long long n_syms) noexcept:
        cdef HashMap *trie = &self.tries[bucket]
        cdef long long node = self.cursors[bucket]
        cdef long long dict_size = self.dict_sizes[bucket]
        cdef long long added = 0
        cdef long long next_id = dict_size + 1
        cdef long long i, key, slot, mask, gen
        cdef int child
        self.ov_generation += 1
        gen = self.ov_generation
        mask = self.ov_cap - 1
        for i in range(n_syms):
            key = (node << SYM_BITS) | self.sym_buf[i]
            child = hm_get(trie, key)
            if child < 0:
                slot = <long long> (((<unsigned long long> key)
                                     * 11400714819323198485ULL) >> self.ov_shift)
                while self.ov_gen[slot] == gen:
                    if self.ov_keys[slot] == key:
                        child = self.ov_vals[slot]
                        break
                    slot = (slot + 1) & mask
            if child >= 0:
                node = child
            else:
                added += self._phrase_cost(dict_size)
                # `slot` still points at the first free probe position.
                self.ov_gen[slot] = gen
                self.ov_keys[slot] = key
                self.ov_vals[slot] = <int> next_id
                next_id += 1
                dict_size += 1
                node = 0
        cdef long long open_cost = self._phrase_cost(dict_size) if node != 0 else 0
        cdef long long old_open = 0
        if self.cursors[bucket] != 0:
            old_open = self._phrase_cost(self.dict_sizes[bucket])
        return added + open_cost - old_open

    def delta_bits(self, int bucket, syms):
        cdef long long n = self._load_syms(syms)
        return self._delta(bucket, n)

    def delta_bits_range(self, int start, int count, syms):
        cdef long long n = self._load_syms(syms)
        out = np.empty(count, dtype=np.int64)
        cdef long long[::1] out_v = out
        cdef int i
        for i in range(count):
            out_v[i] = self._delta(start + i, n)
        return out

    def update(self, int bucket, syms):
        cdef long long n = self._load_syms(syms)
        cdef HashMap *trie = &self.tries[bucket]
        cdef long long node = self.cursors[bucket]
        cdef long long i, key
        cdef int child
        for i in range(n):
            key = (node << SYM_BITS) | self.sym_buf[i]
            child = hm_get(trie, key)
            if child >= 0:
                node = child
            else:
                self.closed[bucket] += self._phrase_cost(self.dict_sizes[bucket])
                self.dict_sizes[bucket] += 1
                hm_put(trie, key, <int> self.dict_sizes[bucket])
                node = 0
        self.cursors[bucket] = node

    def export_state(self, int bucket):
        cdef HashMap *trie = &self.tries[bucket]
        edges = []
        cdef long long i
        for i in range(trie.capacity):
            if trie.keys[i] != EMPTY_KEY:
                edges.append((trie.keys[i] >> SYM_BITS,
                              trie.keys[i] & (SYM_LIMIT - 1),
                              trie.vals[i]))
        edges.sort(key=lambda e: e[2])
        flat = []
        for parent, sym, child in edges:
            flat.extend((parent, sym, child))
        return (self.dict_sizes[bucket], self.cursors[bucket],
                self.closed[bucket], flat)

    def load_state(self, int bucket, dict_size, cursor, closed_bits, flat):
        self.dict_sizes[bucket] = dict_size
        self.cursors[bucket] = cursor
        self.closed[bucket] = closed_bits
        hm_free(&self.tries[bucket])
        hm_init(&self.tries[bucket], 64)
        cdef long long i
        for i in range(0, len(flat), 3):
            hm_put(&self.tries[bucket],
                   (<long long> flat[i] << SYM_BITS) | <long long> flat[i + 1],
                   <int> flat[i + 2])
