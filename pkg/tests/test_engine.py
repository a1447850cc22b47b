"""Value engine: windowing, bucket bookkeeping, posteriors, control."""

import time

import numpy as np
import pytest

from cncrl.buckets import PerBucketTable, RegionSadTable, TabularCountTable
from cncrl.codec import StateCodec, ViewSpec
from cncrl.coding import Alphabet, DirichletModel, factored_sad
from cncrl.engine import CncEngine, EpsilonSchedule, ReturnAlphabet, make_engine
from cncrl.envs import TabularPolicy, load_explicit_mdp, run_policy
from cncrl.errors import ConfigError, InputError
from cncrl.harness.certify import bundled_mdp_path


class IdentityEnv:
    """Minimal atomic environment for direct engine construction."""

    episodic = False
    max_episode_steps = None
    factor_alphabets = None
    grid_shape = None

    def __init__(self, n_states=4, n_actions=2, rewards=(0.0, 1.0)):
        self.n_states = n_states
        self.n_actions = n_actions
        self.reward_values = rewards

    def state_index(self, state):
        return state

    def reset(self, rng):
        return 0

    def step(self, state, action, rng):
        raise NotImplementedError

    def return_alphabet(self, horizon):
        from cncrl.envs.base import achievable_window_sums

        return achievable_window_sums(self.reward_values, horizon)


class RecordingTable:
    """State table stub that records every bucket update."""

    grouped = False
    normalized = True

    def __init__(self, n_returns, n_actions):
        self.n_returns = n_returns
        self.n_actions = n_actions
        self.updates = []
        self.update_counts = np.zeros((n_returns, n_actions), dtype=np.int64)

    def log_scores(self, action, block):
        return np.zeros(self.n_returns)

    def update(self, z_idx, action, block):
        self.updates.append((z_idx, action, block))
        self.update_counts[z_idx, action] += 1


def build_engine(env, horizon, table=None, seed=0):
    codec = StateCodec(env, ViewSpec("atomic"))
    returns = env.return_alphabet(horizon)
    if table is None:
        table = RecordingTable(len(returns), env.n_actions)
    return_models = [DirichletModel(Alphabet(len(returns)))
                     for _ in range(env.n_actions)]
    return CncEngine(
        n_actions=env.n_actions, return_values=returns,
        reward_values=env.reward_values, state_table=table,
        return_models=return_models, codec=codec, horizon=horizon,
        truncate_at_episode_end=False, seed=seed)


class TestWindowing:
    def test_m1_updates_every_step(self):
        env = IdentityEnv()
        eng = build_engine(env, horizon=1)
        eng.begin_episode(0)
        eng.step(1, 2, 1.0)
        assert eng.state_table.updates == [(eng.returns.idx(1.0), 1, (0,))]
        eng.step(0, 3, 0.0)
        assert eng.state_table.updates[-1] == (eng.returns.idx(0.0), 0, (2,))

    def test_m2_lagged_returns(self):
        env = IdentityEnv()
        eng = build_engine(env, horizon=2)
        eng.begin_episode(0)
        rewards = [1.0, 0.0, 1.0, 1.0]
        for i, r in enumerate(rewards):
            eng.step(0, i + 1, r)
        got = [eng.returns.values[z] for (z, _, _) in eng.state_table.updates]
        assert got == [1.0, 1.0, 2.0]

    def test_update_count_t_minus_m_plus_1(self):
        env = IdentityEnv()
        eng = build_engine(env, horizon=5)
        eng.begin_episode(0)
        rng = np.random.default_rng(0)
        t = 137
        for i in range(t):
            eng.step(int(rng.integers(2)), int(rng.integers(4)), float(rng.integers(2)))
            # running window sum stays exactly the sum of buffered rewards
            assert eng.window_sum == sum(r for (_, _, r) in eng.window)
        assert eng.consumed == t - 5 + 1
        assert eng.state_table.update_counts.sum() == t - 5 + 1

    def test_episode_flush_uses_suffix_sums(self):
        env = IdentityEnv()
        codec = StateCodec(env, ViewSpec("atomic"))
        table = RecordingTable(3, env.n_actions)
        return_models = [DirichletModel(Alphabet(3)) for _ in range(2)]
        eng = CncEngine(
            n_actions=2, return_values=(0.0, 1.0, 2.0), reward_values=(0.0, 1.0),
            state_table=table, return_models=return_models, codec=codec,
            horizon=10, truncate_at_episode_end=True, seed=0)
        eng.begin_episode(0)
        eng.step(0, 1, 1.0)
        eng.step(1, 2, 0.0)
        eng.step(0, 3, 1.0, episode_end=True)
        got = [(eng.returns.values[z], a, blk) for (z, a, blk) in table.updates]
        assert got == [(2.0, 0, (0,)), (1.0, 1, (1,)), (1.0, 0, (2,))]
        assert len(eng.window) == 0

    def test_bucket_sequences_match_filtering_rule(self):
        mdp = load_explicit_mdp(bundled_mdp_path("rate3"))
        pol = TabularPolicy(np.full((3, 2), 0.5))
        horizon = 3
        eng = build_engine(mdp, horizon)
        eng.begin_episode(mdp.reset(np.random.default_rng(0)))
        traj = []
        for rec in run_policy(mdp, pol, 400, seed=5):
            eng.step(rec.action, rec.state, rec.reward)
            traj.append((rec.prev_state, rec.action, rec.reward))
        # Reconstruct per-bucket state subsequences from the raw trajectory.
        expected = {}
        rewards = [r for (_, _, r) in traj]
        for i in range(len(traj) - horizon + 1):
            z = sum(rewards[i:i + horizon])
            s_pred, a, _ = traj[i]
            expected.setdefault((eng.returns.idx(z), a), []).append(s_pred)
        got = {}
        for z_idx, a, block in eng.state_table.updates:
            got.setdefault((z_idx, a), []).append(block[0])
        assert got == expected

    def test_reward_outside_declared_set_rejected(self):
        eng = build_engine(IdentityEnv(), horizon=2)
        eng.begin_episode(0)
        with pytest.raises(InputError):
            eng.step(0, 1, 0.5)

    def test_return_outside_alphabet_rejected(self):
        env = IdentityEnv()
        codec = StateCodec(env, ViewSpec("atomic"))
        table = RecordingTable(1, 2)
        eng = CncEngine(
            n_actions=2, return_values=(0.0,), reward_values=(0.0, 1.0),
            state_table=table, return_models=[DirichletModel(Alphabet(1))] * 2,
            codec=codec, horizon=1, truncate_at_episode_end=False, seed=0)
        eng.begin_episode(0)
        with pytest.raises(InputError, match="mis-declared"):
            eng.step(0, 1, 1.0)


class TestPosterior:
    def test_single_return_posterior_is_one(self):
        env = IdentityEnv(rewards=(1.0,))
        eng = build_engine(env, horizon=3)
        assert np.array_equal(eng.return_posterior(0, 0), [1.0])

    def test_identical_state_scores_recover_return_model(self):
        env = IdentityEnv()
        eng = build_engine(env, horizon=2)  # RecordingTable scores all zeros
        for z_idx in [0, 1, 1, 2, 1]:
            eng.return_models[0].update(z_idx)
        w = eng.return_posterior(0, 0)
        assert np.allclose(w, eng.return_models[0].probs(), atol=1e-12)

    def test_posterior_normalized_under_fuzz(self):
        mdp = load_explicit_mdp(bundled_mdp_path("rate3"))
        eng = make_engine(mdp, horizon=2, state_model="dirichlet",
                          return_model="dirichlet", seed=1)
        pol = TabularPolicy(np.full((3, 2), 0.5))
        eng.begin_episode(mdp.reset(np.random.default_rng(0)))
        z = np.asarray(eng.returns.values)
        for rec in run_policy(mdp, pol, 500, seed=6):
            eng.step(rec.action, rec.state, rec.reward)
            w = eng.return_posterior(rec.state, rec.action)
            assert w.sum() == pytest.approx(1.0, abs=1e-9)
            q = eng.q_value(rec.state, rec.action)
            assert z.min() - 1e-9 <= q.value <= z.max() + 1e-9

    def test_q_value_trivial_expectations(self):
        env = IdentityEnv(rewards=(-1.0, 1.0))
        codec = StateCodec(env, ViewSpec("atomic"))
        table = RecordingTable(2, 2)
        eng = CncEngine(
            n_actions=2, return_values=(-1.0, 1.0), reward_values=(-1.0, 1.0),
            state_table=table, return_models=[DirichletModel(Alphabet(2))
                                              for _ in range(2)],
            codec=codec, horizon=1, truncate_at_episode_end=False, seed=0)
        q = eng.q_value(0, 0)
        assert np.allclose(q.weights, [0.5, 0.5])
        assert q.value == pytest.approx(0.0)
        for _ in range(200):
            eng.return_models[1].update(1)
        assert eng.q_value(0, 1).value == pytest.approx(1.0, abs=0.02)

    def test_degenerate_posterior_falls_back_to_return_model(self):
        env = IdentityEnv()
        codec = StateCodec(env, ViewSpec("atomic"))

        class MinusInfTable(RecordingTable):
            def log_scores(self, action, block):
                return np.full(self.n_returns, -np.inf)

        table = MinusInfTable(3, 2)
        eng = CncEngine(
            n_actions=2, return_values=(0.0, 1.0, 2.0), reward_values=(0.0, 1.0),
            state_table=table, return_models=[DirichletModel(Alphabet(3))
                                              for _ in range(2)],
            codec=codec, horizon=2, truncate_at_episode_end=False, seed=0)
        eng.return_models[0].update(2)
        w = eng.return_posterior(0, 0)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert eng.degenerate_posteriors == 1
        assert np.allclose(w, eng.return_models[0].probs())


class TestControl:
    def test_greedy_tie_breaking_uniform(self):
        env = IdentityEnv()
        eng = build_engine(env, horizon=2, seed=42)
        counts = np.zeros(2)
        for _ in range(10_000):
            counts[eng.greedy_action(0)] += 1
        freq = counts / counts.sum()
        se = np.sqrt(0.25 / 10_000)
        assert np.all(np.abs(freq - 0.5) <= 3 * se + 1e-3)

    def test_greedy_prefers_dominant_action(self):
        env = IdentityEnv(rewards=(-1.0, 1.0))
        codec = StateCodec(env, ViewSpec("atomic"))
        table = RecordingTable(2, 2)
        eng = CncEngine(
            n_actions=2, return_values=(-1.0, 1.0), reward_values=(-1.0, 1.0),
            state_table=table, return_models=[DirichletModel(Alphabet(2))
                                              for _ in range(2)],
            codec=codec, horizon=1, truncate_at_episode_end=False, seed=0)
        for _ in range(50):
            eng.return_models[0].update(0)  # action 0 yields -1
            eng.return_models[1].update(1)  # action 1 yields +1
        assert all(eng.greedy_action(0) == 1 for _ in range(20))

    def test_epsilon_schedule_values(self):
        sched = EpsilonSchedule(start=1.0, floor=0.02, decay_steps=200_000)
        assert sched.value(0) == 1.0
        assert sched.value(200_000) == pytest.approx(0.02)
        assert sched.value(400_000) == pytest.approx(0.02)
        assert sched.value(100_000) == pytest.approx(0.51)

    def test_greedy_deterministic_from_snapshot(self):
        mdp = load_explicit_mdp(bundled_mdp_path("rate3"))
        eng = make_engine(mdp, horizon=2, state_model="dirichlet",
                          return_model="dirichlet", seed=3)
        pol = TabularPolicy(np.full((3, 2), 0.5))
        eng.begin_episode(mdp.reset(np.random.default_rng(0)))
        for rec in run_policy(mdp, pol, 200, seed=8):
            eng.step(rec.action, rec.state, rec.reward)
        blob = eng.snapshot()
        seq1 = [eng.epsilon_greedy_action(s % 3, t) for t, s in enumerate(range(40))]
        eng.restore(blob)
        seq2 = [eng.epsilon_greedy_action(s % 3, t) for t, s in enumerate(range(40))]
        assert seq1 == seq2


class TestReturnAlphabet:
    def test_distinct_values_required(self):
        with pytest.raises(InputError):
            ReturnAlphabet([1.0, 1.0])

    def test_drift_tolerance(self):
        ra = ReturnAlphabet([0.0, 1.0, 2.0])
        assert ra.idx(1.0 + 1e-12) == 1
        with pytest.raises(InputError):
            ra.idx(1.5)


class TestMakeEngine:
    def test_horizon_below_max_episode_rejected(self):
        from cncrl.envs import blackjack_env

        with pytest.raises(ConfigError):
            make_engine(blackjack_env(), horizon=12)

    def test_grouped_matches_generic_tabular(self):
        mdp = load_explicit_mdp(bundled_mdp_path("rate3"))
        pol = TabularPolicy(np.full((3, 2), 0.5))
        fast = make_engine(mdp, horizon=2, state_model="dirichlet",
                           return_model="dirichlet", seed=1)
        slow = make_engine(mdp, horizon=2, state_model="dirichlet",
                           return_model="dirichlet", seed=1, force_generic=True)
        assert isinstance(fast.state_table, TabularCountTable)
        assert isinstance(slow.state_table, PerBucketTable)
        for eng in (fast, slow):
            eng.begin_episode(mdp.reset(np.random.default_rng(0)))
        for rec in run_policy(mdp, pol, 300, seed=9):
            fast.step(rec.action, rec.state, rec.reward)
            slow.step(rec.action, rec.state, rec.reward)
        for s in range(3):
            for a in range(2):
                np.testing.assert_allclose(
                    fast.return_posterior(s, a), slow.return_posterior(s, a),
                    rtol=1e-12)

    def test_grouped_matches_generic_region_sad(self):
        from cncrl.envs.minipong import MiniPongEnv

        env = MiniPongEnv(8, 8)
        rng = np.random.default_rng(4)
        fast = make_engine(env, horizon=4, state_model="factored-sad",
                           return_model="sad", view={"kind": "patches", "patch": [2, 8]},
                           seed=2)
        slow = make_engine(env, horizon=4, state_model="factored-sad",
                           return_model="sad", view={"kind": "patches", "patch": [2, 8]},
                           seed=2, force_generic=True)
        assert isinstance(fast.state_table, RegionSadTable)
        state = env.reset(rng)
        fast.begin_episode(state)
        slow.begin_episode(state)
        for _ in range(300):
            a = int(rng.integers(3))
            nxt, r, _ = env.step(state, a, rng)
            fast.step(a, nxt, r)
            slow.step(a, nxt, r)
            state = nxt
        for a in range(3):
            np.testing.assert_allclose(fast.return_posterior(state, a),
                                       slow.return_posterior(state, a), rtol=1e-9)


@pytest.mark.slow
def test_posterior_converges_to_oracle_conditionals():
    from cncrl.oracle import (
        build_augmented_chain,
        build_snake_chain,
        return_conditionals,
        solve_snake_stationary,
    )

    mdp = load_explicit_mdp(bundled_mdp_path("twostate"))
    pol = TabularPolicy(np.full((2, 2), 0.5))
    horizon = 2
    chain = build_augmented_chain(mdp, pol)
    snake = build_snake_chain(chain, horizon)
    cond = return_conditionals(snake, solve_snake_stationary(snake).dist)

    eng = make_engine(mdp, horizon=horizon, state_model="frequency",
                      return_model="frequency", seed=0)
    eng.begin_episode(mdp.reset(np.random.default_rng(0)))
    for rec in run_policy(mdp, pol, 1_000_000, seed=17):
        eng.step(rec.action, rec.state, rec.reward)
    sup = 0.0
    for s in range(2):
        for a in range(2):
            w = eng.return_posterior(s, a)
            sup = max(sup, float(np.max(np.abs(w - cond.z_given_sa[:, s, a]))))
    assert sup <= 1e-2


@pytest.mark.slow
def test_query_cost_linear_in_return_count():
    """Doubling the return alphabet should not much more than double the
    per-query cost of a value estimate."""

    def engine_with_nz(n_z):
        env = IdentityEnv(n_states=6, n_actions=2, rewards=(0.0, 1.0))
        codec = StateCodec(env, ViewSpec("atomic"))
        values = tuple(float(v) for v in range(n_z))
        table = PerBucketTable(lambda: DirichletModel(Alphabet(6)), n_z, 2)
        return CncEngine(
            n_actions=2, return_values=values, reward_values=(0.0, 1.0),
            state_table=table, return_models=[DirichletModel(Alphabet(n_z))
                                              for _ in range(2)],
            codec=codec, horizon=3, truncate_at_episode_end=False, seed=0)

    def time_queries(eng, n=4000):
        best = float("inf")
        for _ in range(5):
            t0 = time.perf_counter()
            for i in range(n):
                eng.q_value(i % 6, i % 2)
            best = min(best, time.perf_counter() - t0)
        return best

    small = engine_with_nz(8)
    large = engine_with_nz(16)
    time_queries(small, 200)  # warm-up
    ratio = time_queries(large) / time_queries(small)
    assert ratio <= 2.5, ratio
