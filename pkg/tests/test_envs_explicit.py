"""Explicit-MDP files: parsing, validation, round trips, rollouts."""

import numpy as np
import pytest

from cncrl.envs import (
    ExplicitMdp,
    TabularPolicy,
    load_explicit_mdp,
    run_policy,
    save_explicit_mdp,
    simulate_policy,
)
from cncrl.errors import MdpParseError
from cncrl.harness.certify import bundled_mdp_path


def write(tmp_path, text):
    path = tmp_path / "m.mdp"
    path.write_text(text)
    return path


GOOD = """
# tiny two-state chain
states 2
actions 1
rewards 0.0 1.0
0 0 1 1.0 1.0
1 0 0 0.0 1.0
"""


def test_load_good_file(tmp_path):
    mdp = load_explicit_mdp(write(tmp_path, GOOD))
    assert mdp.n_states == 2
    assert mdp.reward_values == (0.0, 1.0)
    assert mdp.kernel[0][0] == [(1, 1, 1.0)]


def test_row_not_summing_is_rejected(tmp_path):
    bad = GOOD.replace("0 0 1 1.0 1.0", "0 0 1 1.0 0.999")
    with pytest.raises(MdpParseError):
        load_explicit_mdp(write(tmp_path, bad))


def test_dangling_state_reports_line_number(tmp_path):
    bad = GOOD.replace("1 0 0 0.0 1.0", "1 0 7 0.0 1.0")
    with pytest.raises(MdpParseError) as err:
        load_explicit_mdp(write(tmp_path, bad))
    assert err.value.line_no == 7


def test_malformed_line_reports_line_number(tmp_path):
    bad = GOOD + "0 0 1\n"
    with pytest.raises(MdpParseError) as err:
        load_explicit_mdp(write(tmp_path, bad))
    assert err.value.line_no == 8


def test_undeclared_reward_rejected(tmp_path):
    bad = GOOD.replace("0 0 1 1.0 1.0", "0 0 1 0.5 1.0")
    with pytest.raises(MdpParseError):
        load_explicit_mdp(write(tmp_path, bad))


def test_roundtrip_reproduces_kernel_exactly(tmp_path):
    rng = np.random.default_rng(0)
    probs = rng.random(3)
    probs /= probs.sum()
    kernel = [[[(0, 0, float(probs[0])), (1, 1, float(probs[1])),
                (2, 0, float(probs[2]))] ,
               [(1, 0, 1.0)]] for _ in range(3)]
    mdp = ExplicitMdp(3, 2, (0.0, 1.0), kernel)
    path = tmp_path / "rt.mdp"
    save_explicit_mdp(path, mdp)
    again = load_explicit_mdp(path)
    assert again.kernel == mdp.kernel
    assert again.reward_values == mdp.reward_values


def test_run_policy_deterministic_given_seed():
    mdp = load_explicit_mdp(bundled_mdp_path("rate3"))
    pol = TabularPolicy(np.full((3, 2), 0.5))
    a = [(r.action, r.state, r.reward) for r in run_policy(mdp, pol, 300, seed=9)]
    b = [(r.action, r.state, r.reward) for r in run_policy(mdp, pol, 300, seed=9)]
    assert a == b
    c = [(r.action, r.state, r.reward) for r in run_policy(mdp, pol, 300, seed=10)]
    assert a != c


def test_simulate_policy_matches_kernel_frequencies():
    mdp = load_explicit_mdp(bundled_mdp_path("twostate"))
    pol = TabularPolicy(np.full((2, 2), 0.5))
    (actions, states, rewards), _ = simulate_policy(mdp, pol, 200_000, seed=3)
    # Conditional next-state frequencies from state 0, action 0.
    prev = np.concatenate(([mdp.start_state], states[:-1]))
    mask = (prev == 0) & (actions == 0)
    p_step = mdp.transition_probs(0, 0).sum(axis=1)
    freq = np.bincount(states[mask], minlength=2) / mask.sum()
    assert np.allclose(freq, p_step, atol=0.01)


def test_bundled_corpus_loads():
    for name in ("selfloop1", "cycle2", "twostate", "rate3", "chain5"):
        mdp = load_explicit_mdp(bundled_mdp_path(name))
        assert mdp.n_states >= 1
