"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the same workload through both backends, checks the outputs agree,
and reports wall time per backend plus the speedup.
"""

from __future__ import annotations

import time

import numpy as np

from ..errors import InputError
from .._kernels import pure as pure_impl

try:
    from .._kernels import _core as compiled_impl
except ImportError:
    compiled_impl = None


def _time(fn, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _bench_simulate(impl, steps: int):
    # Tiny 3-state, 2-action chain.
    policy_cum = np.array([[0.5, 1.0]] * 3)
    offsets = np.arange(0, 13, 2, dtype=np.int64)
    next_flat = np.array([1, 2, 0, 2, 2, 0, 1, 1, 0, 1, 2, 0], dtype=np.int64)[:12]
    reward_flat = np.array([0, 1] * 6, dtype=np.int64)
    cum_flat = np.tile([0.5, 1.0], 6)
    return impl.simulate_chain(policy_cum, offsets, next_flat, reward_flat,
                               cum_flat, 2, 0, steps, 12345)


def _bench_sad(impl, calls: int, k: int = 16, n_z: int = 33):
    rng = np.random.default_rng(0)
    counts = rng.integers(0, 50, size=(k, n_z)).astype(np.float64)
    totals = counts.sum(axis=0) + 10.0
    mseen = rng.integers(0, 30, size=(k, n_z)).astype(np.float64)
    sizes = np.full(k, 4.0**16)
    log_sizes = np.log(sizes)
    out = np.empty(n_z)
    acc = 0.0
    for _ in range(calls):
        impl.sad_block_logscores(counts, totals, mseen, sizes, log_sizes, out)
        acc += out[0]
    return acc


def _bench_lz(impl, queries: int, n_buckets: int = 99, block: int = 64):
    rng = np.random.default_rng(1)
    tries = impl.LzTrieSet(n_buckets, 2)
    blocks = [tuple(int(x) for x in rng.integers(0, 4, block)) for _ in range(64)]
    for i in range(256):
        tries.update(i % n_buckets, blocks[i % len(blocks)])
    acc = 0
    for i in range(queries):
        out = tries.delta_bits_range(0, n_buckets, blocks[i % len(blocks)])
        acc += int(out[0])
    return acc


def run_benchmark():
    """Rows of (kernel, pure seconds, compiled seconds, speedup)."""
    if compiled_impl is None:
        raise InputError(
            "compiled kernels are not built; run `python setup.py build_ext --inplace`")
    cases = [
        ("simulate_chain(200k steps)",
         lambda impl: _bench_simulate(impl, 200_000)),
        ("sad_block_logscores(20k calls, 16x33)",
         lambda impl: _bench_sad(impl, 20_000)),
        ("lz_delta_range(2k queries, 99 buckets, 64 syms)",
         lambda impl: _bench_lz(impl, 2_000)),
    ]
    rows = []
    for name, fn in cases:
        ref = fn(pure_impl)
        got = fn(compiled_impl)
        if isinstance(ref, tuple):
            agree = all(np.array_equal(a, b) for a, b in zip(ref, got))
        else:
            agree = bool(np.isclose(ref, got, rtol=1e-9, atol=1e-9))
        pure_t = _time(lambda: fn(pure_impl))
        comp_t = _time(lambda: fn(compiled_impl))
        rows.append([name, pure_t, comp_t, pure_t / comp_t, agree])
    return rows
