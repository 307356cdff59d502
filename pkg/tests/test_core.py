import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffhmm.core import (
    FiniteAlphabetLikelihood,
    FiniteAlphabetTrueModel,
    Gaussian,
    GaussianLikelihood,
    GaussianTrueModel,
    StateSpace,
    bound_C,
    eval_log_likelihood,
    identifiability,
    kl_divergence,
    log_likelihood_matrix,
    log_likelihood_tensor,
    uniform_belief,
    validate_belief,
)
from diffhmm.errors import DomainError, InvalidInputError, UnsupportedModelError

from .conftest import STATE_VALUES, TABLE1_MEANS


# ---------------------------------------------------------------------------
# state space and beliefs
# ---------------------------------------------------------------------------

def test_state_space_requires_two_unique_states():
    with pytest.raises(InvalidInputError):
        StateSpace(labels=("only",))
    with pytest.raises(InvalidInputError):
        StateSpace(labels=("a", "a"))
    s = StateSpace(labels=("a", "b", "c"), values=[0, 1, 2])
    assert s.m_states == 3


def test_belief_validation():
    validate_belief(uniform_belief(4))
    with pytest.raises(InvalidInputError):
        validate_belief(np.array([0.5, 0.6]))
    with pytest.raises(InvalidInputError):
        validate_belief(np.array([-0.1, 1.1]))
    with pytest.raises(InvalidInputError):
        validate_belief(np.array([1.0, 0.0]), require_positive=True)


# ---------------------------------------------------------------------------
# log-likelihood evaluation
# ---------------------------------------------------------------------------

def test_gaussian_log_density_standard_normal_at_mean():
    model = GaussianLikelihood(means=np.array([[0.0, 1.0]]), sigma=1.0)
    assert eval_log_likelihood(model, 0, 0, 0.0) == pytest.approx(
        -0.5 * math.log(2 * math.pi), abs=1e-12
    )


def test_gaussian_log_density_narrow():
    model = GaussianLikelihood(means=np.array([[1.0, 2.0]]), sigma=0.5)
    expected = math.log(1.0 / (0.5 * math.sqrt(2 * math.pi)))
    assert eval_log_likelihood(model, 0, 0, 1.0) == pytest.approx(expected, abs=1e-12)


def test_finite_alphabet_log_mass():
    model = FiniteAlphabetLikelihood(tables=np.array([[[0.5, 0.5], [0.9, 0.1]]]))
    assert eval_log_likelihood(model, 0, 0, 0) == pytest.approx(math.log(0.5), abs=1e-12)
    with pytest.raises(DomainError):
        eval_log_likelihood(model, 0, 0, 2)
    with pytest.raises(DomainError):
        log_likelihood_tensor(model, np.array([[5]]))


def test_tensor_matches_scalar_evaluation():
    model = GaussianLikelihood(means=TABLE1_MEANS, sigma=0.3)
    obs = np.linspace(-1.0, 2.0, 5)
    mat = log_likelihood_matrix(model, obs)
    for k in range(5):
        for m in range(3):
            assert mat[k, m] == pytest.approx(
                eval_log_likelihood(model, k, m, obs[k]), abs=1e-14
            )


def test_likelihood_table_invariants():
    with pytest.raises(InvalidInputError):
        FiniteAlphabetLikelihood(tables=np.array([[[0.5, 0.5], [1.0, 0.0]]]))
    with pytest.raises(InvalidInputError):
        FiniteAlphabetLikelihood(tables=np.array([[[0.5, 0.4]]]))


# ---------------------------------------------------------------------------
# KL divergence
# ---------------------------------------------------------------------------

def test_kl_identical_gaussians_is_zero():
    g = Gaussian(0.0, 0.5)
    assert kl_divergence(g, g) == 0.0


def test_kl_gaussian_closed_form():
    # equal sigmas: (dmean)^2 / (2 sigma^2)
    assert kl_divergence(Gaussian(0.0, 0.5), Gaussian(1.0, 0.5)) == pytest.approx(2.0, abs=1e-12)


def test_kl_mass_two_term_sum():
    expected = 0.8 * math.log(4.0) + 0.2 * math.log(0.25)
    got = kl_divergence(np.array([0.8, 0.2]), np.array([0.2, 0.8]))
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(0.8317766166719343, abs=1e-12)


def test_kl_rejects_mixed_kinds():
    with pytest.raises(InvalidInputError):
        kl_divergence(Gaussian(0.0, 1.0), np.array([0.5, 0.5]))
    with pytest.raises(InvalidInputError):
        kl_divergence(np.array([0.5, 0.5]), np.array([0.3, 0.3, 0.4]))


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6),
    st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6),
)
def test_kl_nonnegative_and_zero_iff_equal(raw_p, raw_q):
    size = min(len(raw_p), len(raw_q))
    p = np.array(raw_p[:size]) / np.sum(raw_p[:size])
    q = np.array(raw_q[:size]) / np.sum(raw_q[:size])
    kl = kl_divergence(p, q)
    assert kl >= 0.0
    if np.allclose(p, q, atol=1e-15):
        assert kl == pytest.approx(0.0, abs=1e-12)
    assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-15)


# ---------------------------------------------------------------------------
# identifiability
# ---------------------------------------------------------------------------

def test_identifiability_benchmark_agents():
    true_model = GaussianTrueModel(STATE_VALUES, sigma=0.5)
    models = GaussianLikelihood(TABLE1_MEANS, sigma=0.5)
    table = identifiability(true_model, models, true_state=0)
    assert table.wrong_states == (1, 2)
    # agent 1 separates everything: (1-0)^2/(2*0.25) = 2, (2-0)^2/(2*0.25) = 8
    assert table.d[0] == pytest.approx([2.0, 8.0], abs=1e-12)
    # agent 5 has identical means everywhere
    assert table.d[4] == pytest.approx([0.0, 0.0], abs=1e-12)
    assert table.assumption2_ok
    assert not table.negative_entries


def test_identifiability_gaussian_closed_form_cross_check():
    rng = np.random.default_rng(3)
    means = rng.normal(size=(4, 3))
    sigma = 0.7
    values = np.array([0.3, -1.0, 2.0])
    table = identifiability(GaussianTrueModel(values, sigma), GaussianLikelihood(means, sigma), 1)
    theta0 = values[1]
    for k in range(4):
        for j, m in enumerate(table.wrong_states):
            expected = ((means[k, m] - theta0) ** 2 - (means[k, 1] - theta0) ** 2) / (
                2 * sigma**2
            )
            assert table.d[k, j] == pytest.approx(expected, abs=1e-10)


def test_identifiability_flags_indistinguishable_states():
    # every agent models every state identically: zero KL gap everywhere
    tables = np.tile(np.array([0.6, 0.4]), (3, 2, 1))
    models = FiniteAlphabetLikelihood(tables=tables)
    true_model = FiniteAlphabetTrueModel(table=np.array([[0.6, 0.4], [0.6, 0.4]]))
    table = identifiability(true_model, models, 0)
    assert not table.assumption2_ok
    assert table.assumption2_failures == (1,)
    assert np.all(table.d == 0.0)


def test_identifiability_reports_negative_entries():
    # agent's model for the true state is farther from the truth than its
    # model for the wrong state
    models = GaussianLikelihood(means=np.array([[5.0, 0.1]]), sigma=1.0)
    true_model = GaussianTrueModel(np.array([0.0, 1.0]), sigma=1.0)
    table = identifiability(true_model, models, 0)
    assert table.negative_entries == ((0, 1),)
    assert table.d[0, 0] < 0.0


# ---------------------------------------------------------------------------
# almost-sure ratio bound
# ---------------------------------------------------------------------------

def test_bound_c_zero_for_identical_rows():
    tables = np.tile(np.array([0.6, 0.4]), (2, 2, 1))
    true_model = FiniteAlphabetTrueModel(table=np.array([[0.6, 0.4], [0.6, 0.4]]))
    table = identifiability(true_model, FiniteAlphabetLikelihood(tables), 0)
    assert bound_C(true_model, FiniteAlphabetLikelihood(tables), table) == 0.0


def test_bound_c_binary_example():
    tables = np.array([[[0.8, 0.2], [0.2, 0.8]]])
    models = FiniteAlphabetLikelihood(tables)
    true_model = FiniteAlphabetTrueModel(table=np.array([[0.8, 0.2], [0.2, 0.8]]))
    table = identifiability(true_model, models, 0)
    d = 0.6 * math.log(4.0)
    assert table.d[0, 0] == pytest.approx(d, abs=1e-12)
    c = bound_C(true_model, models, table)
    assert c == pytest.approx(abs(math.log(4.0) + d), abs=1e-12)
    assert c == pytest.approx(2.218070977791825, abs=1e-9)


def test_bound_c_rejects_gaussians():
    true_model = GaussianTrueModel(STATE_VALUES, 0.5)
    models = GaussianLikelihood(TABLE1_MEANS, 0.5)
    table = identifiability(true_model, models, 0)
    with pytest.raises(UnsupportedModelError):
        bound_C(true_model, models, table)


def test_bound_c_restricted_to_observable_symbols():
    # the third symbol never occurs under the truth, so it cannot
    # constrain the almost-sure bound
    l0 = np.array([0.45, 0.45, 0.10])
    l1 = np.array([0.45 * math.exp(-1.2), 0.45 * math.exp(-0.8), 0.0])
    l1[2] = 1.0 - l1[0] - l1[1]
    models = FiniteAlphabetLikelihood(np.array([[l0, l1]]))
    true_model = FiniteAlphabetTrueModel(np.array([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0]]))
    table = identifiability(true_model, models, 0)
    assert table.d[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert bound_C(true_model, models, table) == pytest.approx(0.2, abs=1e-12)


def test_bound_c_holds_on_monte_carlo_draws():
    rng = np.random.default_rng(11)
    tables = rng.uniform(0.05, 1.0, size=(3, 2, 4))
    tables /= tables.sum(axis=2, keepdims=True)
    models = FiniteAlphabetLikelihood(tables)
    true_model = FiniteAlphabetTrueModel(tables[0])
    table = identifiability(true_model, models, 0)
    c = bound_C(true_model, models, table)
    draws = rng.choice(4, size=10**5, p=true_model.table[0])
    log_tables = np.log(tables)
    for k in range(3):
        ratio = log_tables[k, 1, draws] - log_tables[k, 0, draws]
        assert np.all(np.abs(ratio + table.d[k, 0]) <= c + 1e-12)
