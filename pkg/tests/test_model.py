from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gotkit.errors import (
    ChannelOutOfRange,
    DimensionMismatch,
    NegativeEntry,
    NotStochastic,
    NotUnichain,
)
from gotkit.model import (
    GlobalState,
    StateSpace,
    is_unichain,
    recurrent_classes,
    stationary_context_distribution,
    validate_model,
)

from conftest import identity_source, random_model


def make_valid_kwargs(s=3, v=2, a=2):
    return dict(
        num_semantics=s,
        num_contexts=v,
        num_actuations=a,
        source_dynamics=identity_source(s, v, a),
        context_dynamics=np.full((v, v), 1.0 / v),
        channel_success=0.5,
        status_inherent=np.zeros((v, s)),
        actuation_gain=np.zeros(a),
        actuation_inherent=np.zeros(a),
        sampling_cost=0.0,
    )


class TestValidateModel:
    def test_identity_source_accepted(self):
        model = validate_model(**make_valid_kwargs())
        assert model.num_semantics == 3
        assert model.source_dynamics.shape == (2, 2, 3, 3)

    def test_non_stochastic_context_row_rejected(self):
        kwargs = make_valid_kwargs(v=2)
        kwargs["context_dynamics"] = [[0.5, 0.4], [0.5, 0.5]]  # first row sums to 0.9
        with pytest.raises(NotStochastic):
            validate_model(**kwargs)

    def test_reference_cost_matrix_shape(self):
        # 2x3 status-inherent cost with two declared contexts is accepted ...
        kwargs = make_valid_kwargs(s=3, v=2, a=11)
        kwargs["status_inherent"] = [[0, 20, 50], [0, 10, 20]]
        kwargs["actuation_gain"] = [8 * i for i in range(11)]
        kwargs["actuation_inherent"] = list(range(11))
        model = validate_model(**kwargs)
        assert model.costs.status_inherent.shape == (2, 3)

        # ... while the same matrix under three declared contexts is not.
        kwargs3 = make_valid_kwargs(s=3, v=3, a=11)
        kwargs3["status_inherent"] = [[0, 20, 50], [0, 10, 20]]
        kwargs3["actuation_gain"] = [8 * i for i in range(11)]
        kwargs3["actuation_inherent"] = list(range(11))
        with pytest.raises(DimensionMismatch):
            validate_model(**kwargs3)

    def test_negative_entry_rejected(self):
        kwargs = make_valid_kwargs()
        kwargs["status_inherent"] = [[0.0, -1.0, 0.0], [0.0, 0.0, 0.0]]
        with pytest.raises(NegativeEntry):
            validate_model(**kwargs)

    def test_channel_out_of_range(self):
        for bad in (-0.1, 1.1):
            kwargs = make_valid_kwargs()
            kwargs["channel_success"] = bad
            with pytest.raises(ChannelOutOfRange):
                validate_model(**kwargs)

    def test_source_shape_mismatch(self):
        kwargs = make_valid_kwargs(s=3)
        kwargs["source_dynamics"] = identity_source(2, 2, 2)
        with pytest.raises(DimensionMismatch):
            validate_model(**kwargs)

    def test_arrays_frozen(self):
        model = validate_model(**make_valid_kwargs())
        with pytest.raises(ValueError):
            model.source_dynamics[0, 0, 0, 0] = 0.5

    def test_row_sums_hold_for_random_models(self, rng):
        for _ in range(5):
            model = random_model(rng, num_semantics=3, num_contexts=2, num_actuations=3)
            sums = model.source_dynamics.sum(axis=-1)
            assert np.all(np.abs(sums - 1.0) <= 1e-9)


class TestStateSpace:
    @given(
        st.integers(min_value=1, max_value=6),
        st.integers(min_value=1, max_value=5),
    )
    @settings(max_examples=40, deadline=None)
    def test_flat_unflat_bijection(self, s, v):
        space = StateSpace(s, v)
        seen = set()
        for state in space.states():
            idx = space.flat(state)
            assert space.unflat(idx) == state
            seen.add(idx)
        assert seen == set(range(space.size))

    def test_bounds_checked(self):
        space = StateSpace(3, 2)
        with pytest.raises(IndexError):
            space.flat(GlobalState(3, 0, 0))
        with pytest.raises(IndexError):
            space.unflat(space.size)


class TestStationaryDistribution:
    def test_doubly_stochastic_two_state(self):
        mu = stationary_context_distribution(np.array([[0.5, 0.5], [0.5, 0.5]]))
        np.testing.assert_allclose(mu, [0.5, 0.5], atol=1e-12)

    def test_hand_solved_two_state(self):
        # Detailed balance across the cut: mu0 * 0.1 = mu1 * 0.3  =>  mu = (0.75, 0.25).
        p = np.array([[0.9, 0.1], [0.3, 0.7]])
        mu = stationary_context_distribution(p)
        np.testing.assert_allclose(mu, [0.75, 0.25], atol=1e-12)

        # Independent power-iteration oracle.
        oracle = np.full(2, 0.5)
        for _ in range(2000):
            oracle = oracle @ p
        np.testing.assert_allclose(mu, oracle, atol=1e-12)

    def test_identity_not_unichain(self):
        with pytest.raises(NotUnichain):
            stationary_context_distribution(np.eye(2))

    def test_residual_tolerances_on_random_chains(self, rng):
        for n in (2, 3, 5, 8):
            p = rng.dirichlet(np.ones(n), size=n)
            mu = stationary_context_distribution(p)
            assert np.max(np.abs(mu @ p - mu)) <= 1e-10
            assert abs(mu.sum() - 1.0) <= 1e-12

    def test_transient_states_get_zero_mass(self):
        # State 1 is absorbing; 0 and 2 are transient.
        p = np.array([[0.5, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.3, 0.7]])
        mu = stationary_context_distribution(p)
        np.testing.assert_allclose(mu, [0.0, 1.0, 0.0], atol=1e-12)


class TestRecurrentClasses:
    def test_identity_two_classes(self):
        assert recurrent_classes(np.eye(2)) == [[0], [1]]
        assert not is_unichain(np.eye(2))

    def test_strictly_positive_is_irreducible(self, rng):
        p = rng.dirichlet(np.ones(4), size=4)
        assert is_unichain(p)
        assert recurrent_classes(p) == [[0, 1, 2, 3]]

    def test_single_recurrent_class_with_transients(self):
        p = np.array([[0.5, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.3, 0.7]])
        assert recurrent_classes(p) == [[1]]
        assert is_unichain(p)
