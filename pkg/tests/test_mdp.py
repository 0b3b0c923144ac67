"""Transition rows, induced MDP construction, and the RVI solver."""

import itertools

import numpy as np
import pytest

from gotkit.errors import NoConvergence, NotStochastic
from gotkit.mdp import (
    InducedMdp,
    bellman_residual,
    dec_pomdp_transition,
    induce_mdp,
    observation_maps,
    reward,
    rvi_solve,
)
from gotkit.metrics import GotParams
from gotkit.model import (
    GlobalState,
    recurrent_classes,
    stationary_distribution,
    validate_model,
)
from gotkit.policies import DecisionPolicy, SamplingPolicy

from conftest import random_model


def two_state_model(p_success=0.6):
    """|S|=2, |V|=1, one actuation, source rows [[0.7,0.3],[0.4,0.6]]."""
    return validate_model(
        num_semantics=2,
        num_contexts=1,
        num_actuations=1,
        source_dynamics=[[[[0.7, 0.3], [0.4, 0.6]]]],
        context_dynamics=[[1.0]],
        channel_success=p_success,
        status_inherent=[[0.0, 1.0]],
        actuation_gain=[0.0],
        actuation_inherent=[0.0],
        sampling_cost=0.5,
    )


class TestTransitionRow:
    def test_hand_multiplied_row(self):
        model = two_state_model(p_success=0.6)
        row = dec_pomdp_transition(GlobalState(x=0, x_hat=1, phi=0), 1, 0, model)
        # Flat order (x', x_hat', phi'): source factor 0.7/0.3, estimate
        # snaps to the sampled x=0 w.p. 0.6, stays at x_hat=1 otherwise.
        expected = np.array([0.7 * 0.6, 0.7 * 0.4, 0.3 * 0.6, 0.3 * 0.4])
        np.testing.assert_allclose(row, expected, atol=1e-15)
        assert row.sum() == pytest.approx(1.0, abs=1e-12)

    def test_skip_freezes_estimate(self, rng):
        model = random_model(rng, num_semantics=3, num_contexts=2, num_actuations=2)
        space = model.space
        w = GlobalState(x=1, x_hat=2, phi=0)
        row = dec_pomdp_transition(w, 0, 1, model)
        for target in space.states():
            if target.x_hat != w.x_hat:
                assert row[space.flat(target)] == 0.0
        # Marginal over (x', phi') is the source row times the context row.
        marginal = row.reshape(3, 3, 2)[:, w.x_hat, :]
        expected = np.outer(
            model.source_dynamics[w.phi, 1, w.x], model.context_dynamics[w.phi]
        )
        np.testing.assert_allclose(marginal, expected, atol=1e-15)

    def test_perfect_channel_snaps_estimate(self):
        model = two_state_model(p_success=1.0)
        space = model.space
        w = GlobalState(x=0, x_hat=1, phi=0)
        row = dec_pomdp_transition(w, 1, 0, model)
        for target in space.states():
            if target.x_hat != w.x:
                assert row[space.flat(target)] == 0.0

    def test_rows_stochastic_and_factorized(self, rng):
        for _ in range(20):
            model = random_model(
                rng, num_semantics=3, num_contexts=2, num_actuations=2
            )
            space = model.space
            w = space.unflat(int(rng.integers(space.size)))
            a_s = int(rng.integers(2))
            a_m = int(rng.integers(2))
            row = dec_pomdp_transition(w, a_s, a_m, model)
            assert row.sum() == pytest.approx(1.0, abs=1e-9)
            cube = row.reshape(3, 3, 2)
            src = cube.sum(axis=(1, 2))
            ctx = cube.sum(axis=(0, 1))
            est = cube.sum(axis=(0, 2))
            np.testing.assert_allclose(
                src, model.source_dynamics[w.phi, a_m, w.x], atol=1e-12
            )
            np.testing.assert_allclose(ctx, model.context_dynamics[w.phi], atol=1e-12)
            np.testing.assert_allclose(
                np.outer(src, est)[:, :, None] * ctx[None, None, :],
                cube,
                atol=1e-12,
            )

    def test_sampling_mixes_estimate_between_truth_and_hold(self):
        model = two_state_model(p_success=0.6)
        w = GlobalState(x=0, x_hat=1, phi=0)
        row = dec_pomdp_transition(w, 1, 0, model).reshape(2, 2, 1)
        est = row.sum(axis=(0, 2))
        np.testing.assert_allclose(est, [0.6, 0.4], atol=1e-12)


class TestObservationMaps:
    def test_views(self):
        w = GlobalState(x=0, x_hat=1, phi=0)
        sampler_view, actuator_view = observation_maps(w)
        assert sampler_view == w
        assert actuator_view == 1

    def test_actuator_blind_to_truth(self):
        a = observation_maps(GlobalState(x=0, x_hat=2, phi=1))[1]
        b = observation_maps(GlobalState(x=1, x_hat=2, phi=1))[1]
        assert a == b


class TestReward:
    def params(self):
        from test_metrics import three_state_params

        return three_state_params()

    def test_zero_cost_slot(self):
        assert reward(GlobalState(0, 0, 0), 0, self.params(), 2.0) == 0.0

    def test_goal_cost_plus_surcharge(self):
        # got_value(x=2, phi=1, x_hat=0) = 5 under these parameters.
        assert reward(GlobalState(2, 0, 1), 1, self.params(), 2.0) == -7.0

    def test_surcharge_is_additive(self, rng):
        params = self.params()
        for _ in range(10):
            w = GlobalState(
                int(rng.integers(3)), int(rng.integers(3)), int(rng.integers(2))
            )
            delta = reward(w, 1, params, 2.5) - reward(w, 0, params, 2.5)
            assert delta == -2.5


class TestInduceMdp:
    def test_shapes_and_row_sums(self, reference_model):
        mdp = induce_mdp(reference_model, DecisionPolicy([0, 3, 7]))
        assert mdp.num_states == 18
        assert mdp.transition.shape == (18, 2, 18)
        sums = mdp.transition.sum(axis=2)
        assert np.all(np.abs(sums - 1.0) <= 1e-9)

    def test_rows_equal_single_row_builder_exactly(self, rng):
        model = random_model(rng, num_semantics=2, num_contexts=2, num_actuations=2)
        policy = DecisionPolicy([1, 0])
        mdp = induce_mdp(model, policy)
        space = model.space
        for w in space.states():
            i = space.flat(w)
            for a_s in (0, 1):
                expected = dec_pomdp_transition(w, a_s, policy(w.x_hat), model)
                assert np.array_equal(mdp.transition[i, a_s], expected)

    def test_rows_depend_on_policy_only_through_x_hat(self, rng):
        model = random_model(rng, num_semantics=3, num_contexts=1, num_actuations=2)
        a = induce_mdp(model, DecisionPolicy([0, 1, 0]))
        b = induce_mdp(model, DecisionPolicy([1, 1, 1]))
        space = model.space
        for w in space.states():
            if w.x_hat == 1:
                i = space.flat(w)
                assert np.array_equal(a.transition[i], b.transition[i])

    def test_reward_policy_independent_when_actuation_free(self, rng):
        model = random_model(rng, num_semantics=2, num_contexts=1, num_actuations=2)
        free = validate_model(
            num_semantics=2,
            num_contexts=1,
            num_actuations=2,
            source_dynamics=model.source_dynamics,
            context_dynamics=model.context_dynamics,
            channel_success=model.channel_success,
            status_inherent=model.costs.status_inherent,
            actuation_gain=[0.0, 0.0],
            actuation_inherent=[0.0, 0.0],
            sampling_cost=model.sampling_cost,
        )
        for pi in ([0, 0], [0, 1], [1, 0], [1, 1]):
            m = induce_mdp(free, DecisionPolicy(pi))
            base = induce_mdp(free, DecisionPolicy([0, 0]))
            assert np.array_equal(m.reward_matrix, base.reward_matrix)

    def test_bad_rows_rejected(self):
        transition = np.full((1, 2, 1), 0.9)
        with pytest.raises(NotStochastic):
            InducedMdp(transition=transition, reward_matrix=np.zeros((1, 2)))


def enumerate_samplers(num_states):
    for bits in itertools.product((0, 1), repeat=num_states):
        yield SamplingPolicy(list(bits))


def exact_policy_reward(mdp, sampler):
    """Stationary-chain scoring: average reward of a fixed sampler."""
    chain = mdp.policy_chain(sampler)
    mu = stationary_distribution(chain)
    idx = np.arange(mdp.num_states)
    r = mdp.reward_matrix[idx, sampler.table[idx].astype(np.int64)]
    return float(mu @ r)


class TestRviSolve:
    def test_single_state(self):
        mdp = InducedMdp(
            transition=np.ones((1, 2, 1)),
            reward_matrix=np.array([[-1.0, -3.0]]),
        )
        sol = rvi_solve(mdp)
        assert sol.theta_star == pytest.approx(-1.0, abs=1e-9)
        assert sol.sampler.as_tuple() == (0,)
        assert sol.iterations <= 2

    def test_matches_sampler_enumeration_on_random_mdps(self, rng):
        for _ in range(8):
            n = 2
            transition = rng.dirichlet(np.ones(n) * 2.0, size=(n, 2))
            reward_matrix = rng.uniform(-5.0, 0.0, size=(n, 2))
            mdp = InducedMdp(transition=transition, reward_matrix=reward_matrix)
            sol = rvi_solve(mdp, epsilon=1e-10)
            best = max(
                exact_policy_reward(mdp, pol) for pol in enumerate_samplers(n)
            )
            assert sol.theta_star == pytest.approx(best, abs=1e-6)

    def test_huge_surcharge_silences_inert_estimate(self, rng):
        # With a single actuation the estimate steers nothing, so no future
        # benefit can ever repay the surcharge: the sampler goes silent.
        model = random_model(
            rng, num_semantics=2, num_contexts=1, num_actuations=1, sampling_cost=1e4
        )
        mdp = induce_mdp(model, DecisionPolicy([0, 0]))
        sol = rvi_solve(mdp)
        assert not sol.sampler.table.any()

    def test_huge_surcharge_sampling_rate_is_zero(self, rng):
        # When the estimate does matter, a finite surcharge can still be
        # worth paying once to escape a bad frozen estimate (the one-time
        # cost vanishes from the long-run average), but the solved policy
        # must never sample recurrently.
        model = random_model(
            rng, num_semantics=2, num_contexts=1, num_actuations=2, sampling_cost=1e4
        )
        mdp = induce_mdp(model, DecisionPolicy([0, 1]))
        sol = rvi_solve(mdp)
        chain = mdp.policy_chain(sol.sampler)
        for members in recurrent_classes(chain):
            assert not sol.sampler.table[members].any()

    def test_reference_state_invariance(self, rng):
        model = random_model(rng, num_semantics=2, num_contexts=1, num_actuations=2)
        mdp = induce_mdp(model, DecisionPolicy([1, 0]))
        eps = 1e-9
        thetas = [
            rvi_solve(mdp, epsilon=eps, ref_state=ref).theta_star
            for ref in range(mdp.num_states)
        ]
        assert max(thetas) - min(thetas) <= 2 * eps

    def test_residual_bound(self, rng):
        for _ in range(5):
            model = random_model(
                rng, num_semantics=2, num_contexts=2, num_actuations=2
            )
            mdp = induce_mdp(model, DecisionPolicy([0, 1]))
            eps = 1e-8
            sol = rvi_solve(mdp, epsilon=eps)
            assert bellman_residual(mdp, sol) <= 2 * eps

    def periodic_mdp(self):
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        transition = np.stack([swap, swap], axis=1)
        reward_matrix = np.array([[0.0, 0.0], [-1.0, -1.0]])
        return InducedMdp(transition=transition, reward_matrix=reward_matrix)

    def test_periodic_chain_converges_via_damping(self):
        # A deterministic swap never contracts the span; the solver must
        # detect the stall and finish on the damped kernel.
        eps = 1e-8
        sol = rvi_solve(self.periodic_mdp(), epsilon=eps)
        assert sol.theta_star == pytest.approx(-0.5, abs=1e-7)
        assert sol.iterations > 1000
        assert bellman_residual(self.periodic_mdp(), sol) <= 2 * eps

    def test_budget_exhaustion_raises(self):
        with pytest.raises(NoConvergence):
            rvi_solve(self.periodic_mdp(), max_iterations=500)

    def test_ref_state_bounds(self):
        mdp = InducedMdp(
            transition=np.ones((1, 2, 1)), reward_matrix=np.zeros((1, 2))
        )
        with pytest.raises(IndexError):
            rvi_solve(mdp, ref_state=5)
