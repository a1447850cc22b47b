"""Context-tree weighting: mixture recursion, source coding, consistency."""

import math

import numpy as np
import pytest

from cncrl.coding import Alphabet, CtwModel, DirichletModel

pytestmark = []


def markov_entropy_rate(P):
    """Bits per symbol of a two-state chain with transition matrix P."""
    stat0 = P[1][0] / (P[0][1] + P[1][0])
    pi = np.array([stat0, 1 - stat0])

    def h(row):
        return -sum(p * math.log2(p) for p in row if p > 0)

    return pi[0] * h(P[0]) + pi[1] * h(P[1])


def sample_markov(P, n, seed):
    rng = np.random.default_rng(seed)
    s = 0
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        s = int(rng.random() < P[s][1])
        out[i] = s
    return out


def test_depth_zero_equals_dirichlet():
    c = CtwModel(Alphabet(2), depth=0)
    d = DirichletModel(Alphabet(2))
    for x in [0, 1, 0]:
        assert c.prob(0) == pytest.approx(d.prob(0), abs=1e-12)
        c.update(x)
        d.update(x)
    assert c.prob(0) == pytest.approx(2.5 / 4, abs=1e-12)


def test_mixture_recursion_after_every_update():
    rng = np.random.default_rng(1)
    c = CtwModel(Alphabet(3), depth=3)
    for x in rng.integers(0, 3, 400):
        c.update(int(x))
        assert c.tree.mixture_deviation() <= 1e-9


def test_normalization_over_fuzzed_histories():
    rng = np.random.default_rng(2)
    c = CtwModel(Alphabet(4), depth=2)
    for x in rng.integers(0, 4, 500):
        c.update(int(x))
        total = sum(c.prob(s) for s in range(4))
        assert total == pytest.approx(1.0, abs=1e-9)


def test_markov_source_logloss_near_entropy_rate():
    # Order-1 binary source; a depth-2 tree contains it, so the per-symbol
    # redundancy at 10k symbols must be far below 0.05 bits.
    P = [[0.9, 0.1], [0.2, 0.8]]
    seq = sample_markov(P, 10_000, seed=7)
    c = CtwModel(Alphabet(2), depth=2)
    bits = c.logloss_bits(seq)
    rate = bits / len(seq)
    assert abs(rate - markov_entropy_rate(P)) < 0.05


def test_iid_logloss_beats_uniform():
    rng = np.random.default_rng(3)
    seq = (rng.random(4000) < 0.2).astype(int)
    c = CtwModel(Alphabet(2), depth=4)
    rate = c.logloss_bits(seq) / len(seq)
    assert rate < 0.85  # uniform coding costs 1 bit/symbol


def _rate_medians(checkpoints, trials, seed0, iid):
    """Median one-step-predictive error ratios per sample quadrupling.
    The per-checkpoint error is stationary-weighted over contexts to tame
    the single-sample noise."""
    P = [[0.7, 0.3], [0.4, 0.6]]
    stat0 = P[1][0] / (P[0][1] + P[1][0])
    ratios = []
    for t in range(trials):
        rng = np.random.default_rng(seed0 + t)
        if iid:
            seq = (rng.random(checkpoints[-1]) < 0.3).astype(int)
        else:
            seq = sample_markov(P, checkpoints[-1], seed=seed0 + t)
        c = CtwModel(Alphabet(2), depth=2)
        errs = []
        n_done = 0
        for cp in checkpoints:
            for x in seq[n_done:cp]:
                c.update(int(x))
            n_done = cp
            if iid:
                errs.append(abs(c.prob(1) - 0.3))
            else:
                saved = c.recent[-1]
                err = 0.0
                for s, wt in ((0, stat0), (1, 1 - stat0)):
                    c.recent[-1] = s
                    err += wt * abs(c.prob(1) - P[s][1])
                c.recent[-1] = saved
                errs.append(err)
        ratios.append([errs[i] / errs[i + 1] for i in range(len(errs) - 1)])
    return np.median(np.asarray(ratios), axis=0)


@pytest.mark.slow
@pytest.mark.parametrize("iid,seed", [(False, 500), (True, 900)])
def test_predictive_error_shrinks_like_root_n(iid, seed):
    """Median error ratio per sample quadrupling should sit near 2, the
    square root of 4."""
    med = _rate_medians((800, 3200, 12800), trials=60, seed0=seed, iid=iid)
    assert all(1.5 <= m <= 3.0 for m in med), med


def test_snapshot_roundtrip():
    rng = np.random.default_rng(5)
    c = CtwModel(Alphabet(3), depth=2)
    for x in rng.integers(0, 3, 200):
        c.update(int(x))
    blob = c.to_bytes()
    c2 = CtwModel(Alphabet(3), depth=2)
    c2.restore(blob)
    assert c2.to_bytes() == blob
    for s in range(3):
        assert c2.prob(s) == pytest.approx(c.prob(s), abs=1e-13)
    c.update(1)
    c2.update(1)
    assert c2.prob(0) == pytest.approx(c.prob(0), abs=1e-13)
