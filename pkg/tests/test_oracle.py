"""Chain constructions, stationary solves, and the two-oracle value check."""

import numpy as np
import pytest

from cncrl.envs import ExplicitMdp, TabularPolicy, load_explicit_mdp
from cncrl.errors import ResourceLimitError
from cncrl.harness.certify import bundled_mdp_path
from cncrl.oracle import (
    block_marginal,
    build_augmented_chain,
    build_base_chain,
    build_snake_chain,
    check_properties,
    episode_return_distribution,
    q_via_dp,
    q_via_stationary,
    random_certified_case,
    random_mdp,
    random_policy,
    return_conditionals,
    snake_product_form,
    solve_snake_stationary,
    solve_stationary,
)


def uniform_policy(mdp):
    return TabularPolicy(np.full((mdp.n_states, mdp.n_actions), 1.0))


@pytest.fixture(scope="module")
def twostate():
    return load_explicit_mdp(bundled_mdp_path("twostate"))


class TestAugmentedChain:
    def test_single_state_selfloop(self):
        mdp = load_explicit_mdp(bundled_mdp_path("selfloop1"))
        chain = build_augmented_chain(mdp, uniform_policy(mdp))
        assert chain.n == 1
        assert chain.matrix[0, 0] == 1.0
        props = check_properties(chain)
        assert props.irreducible and props.aperiodic and props.positive_recurrent

    def test_two_cycle_detected_periodic(self):
        mdp = load_explicit_mdp(bundled_mdp_path("cycle2"))
        chain = build_augmented_chain(mdp, uniform_policy(mdp))
        props = check_properties(chain)
        assert props.irreducible
        assert not props.aperiodic

    def test_rows_stochastic(self, twostate):
        chain = build_augmented_chain(twostate, uniform_policy(twostate))
        sums = np.asarray(chain.matrix.sum(axis=1)).ravel()
        assert np.max(np.abs(sums - 1)) <= 1e-12

    def test_labels_are_positive_probability_triples(self, twostate):
        pol = uniform_policy(twostate)
        chain = build_augmented_chain(twostate, pol)
        for a, s, ri in chain.labels:
            reachable = any(
                twostate.transition_probs(sp, a)[s, ri] > 0
                for sp in range(twostate.n_states))
            assert reachable


class TestProperties:
    def test_disconnected_components_not_irreducible(self):
        import scipy.sparse as sp

        from cncrl.oracle import MarkovChain

        chain = MarkovChain(["a", "b"], sp.csr_matrix(np.eye(2)))
        props = check_properties(chain)
        assert not props.irreducible
        assert not props.positive_recurrent

    def test_reachable_restriction_hides_unreachable_component(self):
        # Construction restricts to the start state's reachable closure,
        # so an unreachable absorbing state never enters the chain.
        kernel = [[[(0, 0, 1.0)]], [[(1, 0, 1.0)]]]
        mdp = ExplicitMdp(2, 1, (0.0,), kernel)
        chain = build_augmented_chain(mdp, uniform_policy(mdp))
        assert chain.n == 1
        assert check_properties(chain).irreducible

    def test_selfloop_makes_aperiodic(self):
        kernel = [[[(0, 0, 0.5), (1, 0, 0.5)]], [[(0, 0, 1.0)]]]
        mdp = ExplicitMdp(2, 1, (0.0,), kernel)
        chain = build_augmented_chain(mdp, uniform_policy(mdp))
        props = check_properties(chain)
        assert props.irreducible and props.aperiodic


class TestSnake:
    def test_window_count_single_chain(self):
        mdp = load_explicit_mdp(bundled_mdp_path("selfloop1"))
        chain = build_augmented_chain(mdp, uniform_policy(mdp))
        snake = build_snake_chain(chain, 3)
        assert snake.n == 1

    def test_window_count_matches_edges(self, twostate):
        chain = build_augmented_chain(twostate, uniform_policy(twostate))
        snake = build_snake_chain(chain, 1)
        expected = sum(len(chain.successors(i)) for i in range(chain.n))
        assert snake.n == expected

    def test_shift_structure(self, twostate):
        chain = build_augmented_chain(twostate, uniform_policy(twostate))
        snake = build_snake_chain(chain, 2)
        mat = snake.matrix.tocoo()
        for i, j in zip(mat.row, mat.col):
            assert snake.labels[i][1:] == snake.labels[j][:-1]

    def test_window_cap(self, twostate):
        chain = build_augmented_chain(twostate, uniform_policy(twostate))
        with pytest.raises(ResourceLimitError):
            build_snake_chain(chain, 4, max_windows=10)

    def test_block0_marginal_matches_base_stationary(self, twostate):
        chain = build_augmented_chain(twostate, uniform_policy(twostate))
        snake = build_snake_chain(chain, 2)
        res = solve_snake_stationary(snake)
        base = solve_stationary(chain)
        marg = block_marginal(snake, res.dist, 0)
        assert np.max(np.abs(marg - base.dist)) <= 1e-10


class TestStationary:
    def test_symmetric_two_state(self):
        kernel = [[[(0, 0, 0.5), (1, 0, 0.5)]], [[(0, 0, 0.5), (1, 0, 0.5)]]]
        mdp = ExplicitMdp(2, 1, (0.0,), kernel)
        chain = build_augmented_chain(mdp, uniform_policy(mdp))
        res = solve_stationary(chain)
        state_mass = np.zeros(2)
        for (a, s, ri), p in zip(chain.labels, res.dist):
            state_mass[s] += p
        assert np.allclose(state_mass, [0.5, 0.5], atol=1e-12)

    def test_residual_below_tolerance_random(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            mdp = random_mdp(rng, 5, 2, 2)
            chain = build_augmented_chain(mdp, random_policy(rng, 5, 2))
            res = solve_stationary(chain)
            assert res.residual <= 1e-12

    def test_periodic_chain_still_solvable_with_warning(self):
        mdp = load_explicit_mdp(bundled_mdp_path("cycle2"))
        chain = build_augmented_chain(mdp, uniform_policy(mdp))
        res = solve_stationary(chain)
        assert res.warned
        assert res.residual <= 1e-12
        assert np.allclose(res.dist, [0.5, 0.5])

    def test_product_form_is_stationary(self, twostate):
        chain = build_augmented_chain(twostate, uniform_policy(twostate))
        snake = build_snake_chain(chain, 3)
        base = solve_stationary(chain)
        prod = snake_product_form(snake, base.dist)
        prod /= prod.sum()
        assert np.abs(prod @ snake.matrix - prod).sum() <= 1e-12


class TestConditionals:
    def test_marginals_normalized(self, twostate):
        chain = build_augmented_chain(twostate, uniform_policy(twostate))
        snake = build_snake_chain(chain, 2)
        cond = return_conditionals(snake, solve_snake_stationary(snake).dist)
        assert np.allclose(cond.z_given_a.sum(axis=0), 1.0, atol=1e-9)
        za_mass = cond.joint.sum(axis=1)
        for k in range(len(cond.z_values)):
            for a in range(2):
                if za_mass[k, a] > 0:
                    assert cond.state_given_za[k, :, a].sum() == pytest.approx(1.0, abs=1e-9)

    def test_deterministic_reward_q_is_horizon_times_reward(self):
        mdp = load_explicit_mdp(bundled_mdp_path("selfloop1"))
        pol = uniform_policy(mdp)
        chain = build_augmented_chain(mdp, pol)
        for m in (1, 2, 4):
            snake = build_snake_chain(chain, m)
            cond = return_conditionals(snake, solve_snake_stationary(snake).dist)
            q = q_via_stationary(cond)
            assert q[0, 0] == pytest.approx(m * 1.0, abs=1e-12)
            assert np.allclose(q_via_dp(mdp, pol, m), m * 1.0)


class TestEquivalence:
    def test_dp_basecase_horizon_one(self, twostate):
        pol = uniform_policy(twostate)
        q1 = q_via_dp(twostate, pol, 1)
        for s in range(2):
            for a in range(2):
                expect = sum(p * twostate.reward_values[ri]
                             for (_, ri, p) in twostate.kernel[s][a])
                assert q1[s, a] == pytest.approx(expect, abs=1e-15)

    def test_random_corpus_equivalence(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(30):
            mdp, pol, horizon, chain = random_certified_case(rng)
            snake = build_snake_chain(chain, horizon)
            cond = return_conditionals(snake, solve_snake_stationary(snake).dist)
            gap = np.max(np.abs(
                q_via_stationary(cond)[cond.defined] - q_via_dp(mdp, pol, horizon)[cond.defined]))
            worst = max(worst, gap)
        assert worst <= 1e-9

    def test_constant_reward_shift_moves_q_by_horizon_times_c(self, twostate):
        # Continuing chains always collect exactly m rewards per window,
        # so shifting every reward by c shifts every value by m*c.
        pol = uniform_policy(twostate)
        c, m = 0.5, 3
        shifted = ExplicitMdp(2, 2, tuple(r + c for r in twostate.reward_values),
                              twostate.kernel, twostate.start_state)
        q0 = q_via_dp(twostate, pol, m)
        q1 = q_via_dp(shifted, pol, m)
        assert np.max(np.abs(q1 - q0 - m * c)) <= 1e-12

    def test_reward_scaling_doubles_q(self):
        rng = np.random.default_rng(7)
        mdp, pol, horizon, chain = random_certified_case(rng)
        snake = build_snake_chain(chain, horizon)
        cond = return_conditionals(snake, solve_snake_stationary(snake).dist)
        q = q_via_stationary(cond)

        doubled = ExplicitMdp(mdp.n_states, mdp.n_actions,
                              tuple(2 * r for r in mdp.reward_values),
                              mdp.kernel, mdp.start_state)
        chain2 = build_augmented_chain(doubled, pol)
        snake2 = build_snake_chain(chain2, horizon)
        cond2 = return_conditionals(snake2, solve_snake_stationary(snake2).dist)
        q2 = q_via_stationary(cond2)
        mask = cond.defined & cond2.defined
        assert np.max(np.abs(q2[mask] - 2 * q[mask])) <= 1e-9


class TestLemmaPropagation:
    def test_base_properties_propagate_to_augmented_and_snake(self):
        rng = np.random.default_rng(11)
        checked = 0
        while checked < 10:
            mdp = random_mdp(rng, int(rng.integers(2, 6)), int(rng.integers(1, 3)), 2)
            pol = random_policy(rng, mdp.n_states, mdp.n_actions)
            base = build_base_chain(mdp, pol)
            props = check_properties(base)
            if not (props.irreducible and props.aperiodic):
                continue
            aug = build_augmented_chain(mdp, pol)
            aug_props = check_properties(aug)
            assert aug_props.irreducible and aug_props.aperiodic
            snake = build_snake_chain(aug, int(rng.integers(1, 4)))
            snake_props = check_properties(snake)
            assert snake_props.irreducible and snake_props.aperiodic
            checked += 1


@pytest.mark.slow
def test_simulated_frequencies_converge_to_stationary_marginals(twostate):
    """Long-run frequencies of (window return, state, next action) from a
    rollout must match the stationary window law.  Uses the fast rollout
    path (distributionally identical to run_policy) for the 1e7 steps."""
    from cncrl.envs import simulate_policy

    pol = TabularPolicy(np.full((2, 2), 0.5))
    horizon = 2
    chain = build_augmented_chain(twostate, pol)
    snake = build_snake_chain(chain, horizon)
    cond = return_conditionals(snake, solve_snake_stationary(snake).dist)

    steps = 10_000_000
    (actions, states, rewards_idx), _ = simulate_policy(twostate, pol, steps, seed=123)
    rewards = np.asarray(twostate.reward_values)[rewards_idx]
    window = np.convolve(rewards, np.ones(horizon), mode="valid")  # z_i, i=0..n-m
    prev_states = np.concatenate(([twostate.start_state], states[:-1]))
    s_pred = prev_states[: len(window)]
    act = actions[: len(window)]
    z_idx = np.searchsorted(np.asarray(cond.z_values), np.round(window))
    counts = np.zeros_like(cond.joint)
    np.add.at(counts, (z_idx, s_pred, act), 1.0)
    freq = counts / counts.sum()
    sup = float(np.max(np.abs(freq - cond.joint)))
    assert sup <= 5e-3


def test_blackjack_outcome_distribution_exact_vs_simulated():
    from cncrl.envs import blackjack_env, target_policy_blackjack
    from cncrl.harness.blackjack_eval import _LiftedPolicy

    env = blackjack_env()
    explicit = env.to_explicit()
    pol = _LiftedPolicy(target_policy_blackjack(), 200)
    start = np.zeros(201)
    start[:200] = env.start_distribution()
    dist = episode_return_distribution(explicit, pol, env.max_episode_steps, start)
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    # The stay-at-20 policy loses well over half its games.
    assert dist[-1.0] > 0.5 > dist[1.0]
