"""Backend parity: the compiled kernels must match the pure fallback."""

import numpy as np
import pytest

from cncrl import _kernels
from cncrl._kernels import pure

compiled = pytest.importorskip("cncrl._kernels._core", reason="extension not built")


def _chain_args(steps, seed):
    policy_cum = np.array([[0.5, 1.0]] * 3)
    offsets = np.arange(0, 13, 2, dtype=np.int64)
    next_flat = np.array([1, 2, 0, 2, 2, 0, 1, 1, 0, 1, 2, 0], dtype=np.int64)
    reward_flat = np.array([0, 1] * 6, dtype=np.int64)
    cum_flat = np.tile([0.5, 1.0], 6)
    return (policy_cum, offsets, next_flat, reward_flat, cum_flat, 2, 0, steps, seed)


def test_backend_is_reported():
    assert _kernels.backend_name() in ("pure", "compiled")


def test_simulate_chain_identical_streams():
    for seed in (0, 99, 31415):
        ref = pure.simulate_chain(*_chain_args(70_000, seed))
        got = compiled.simulate_chain(*_chain_args(70_000, seed))
        for a, b in zip(ref, got):
            assert np.array_equal(a, b)


def test_sad_logscores_identical():
    rng = np.random.default_rng(1)
    for _ in range(20):
        k, n_z = int(rng.integers(1, 20)), int(rng.integers(1, 40))
        counts = rng.integers(0, 60, (k, n_z)).astype(float)
        totals = counts.sum(axis=0) + rng.integers(0, 5, n_z)
        mseen = np.minimum(rng.integers(0, 40, (k, n_z)).astype(float), counts.sum(0))
        sizes = np.where(rng.random(k) < 0.5, 4.0 ** 16, 50.0)
        log_sizes = np.log(sizes)
        o1, o2 = np.empty(n_z), np.empty(n_z)
        pure.sad_block_logscores(counts, totals, mseen, sizes, log_sizes, o1)
        compiled.sad_block_logscores(counts, totals, mseen, sizes, log_sizes, o2)
        assert np.array_equal(o1, o2)


def test_lz_tries_identical_behavior():
    rng = np.random.default_rng(2)
    p, c = pure.LzTrieSet(12, 3), compiled.LzTrieSet(12, 3)
    blocks = [tuple(int(x) for x in rng.integers(0, 7, int(rng.integers(1, 90))))
              for _ in range(120)]
    for i, b in enumerate(blocks):
        bucket = i % 12
        assert p.delta_bits(bucket, b) == c.delta_bits(bucket, b)
        p.update(bucket, b)
        c.update(bucket, b)
    for b in blocks[:30]:
        assert np.array_equal(p.delta_bits_range(0, 12, b),
                              c.delta_bits_range(0, 12, b))
    for bucket in range(12):
        assert p.export_state(bucket) == c.export_state(bucket)
        assert p.total_bits(bucket) == c.total_bits(bucket)


def test_lz_snapshot_cross_backend():
    rng = np.random.default_rng(3)
    p = pure.LzTrieSet(4, 2)
    for i in range(40):
        p.update(i % 4, tuple(int(x) for x in rng.integers(0, 4, 30)))
    c = compiled.LzTrieSet(4, 2)
    for bucket in range(4):
        c.load_state(bucket, *p.export_state(bucket))
    probe = tuple(int(x) for x in rng.integers(0, 4, 50))
    assert np.array_equal(p.delta_bits_range(0, 4, probe),
                          c.delta_bits_range(0, 4, probe))


def test_lz_matches_reference_model():
    from cncrl.coding import Alphabet, Lz78Model

    rng = np.random.default_rng(4)
    model = Lz78Model(Alphabet(5))
    tries = _kernels.LzTrieSet(1, model.symbol_bits)
    for _ in range(60):
        block = [int(x) for x in rng.integers(0, 5, int(rng.integers(1, 40)))]
        assert tries.delta_bits(0, block) == model.delta_bits(block)
        tries.update(0, block)
        model.update_block(block)
        assert tries.total_bits(0) == model.total_bits()


def test_compiled_symbol_range_guard():
    t = compiled.LzTrieSet(1, 21)
    with pytest.raises(ValueError):
        t.delta_bits(0, (2_097_152,))
