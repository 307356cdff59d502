import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffhmm.errors import InvalidInputError, NonConvergenceError
from diffhmm.network import Network, generate, perron, validate


def test_uniform_full_network_passes_all_checks():
    net = generate("full", 5)
    diag = validate(net)
    assert diag.all_ok
    assert np.allclose(net.weights, 0.2)


def test_directed_cycle_without_self_loops_fails_self_loop_check():
    w = np.zeros((3, 3))
    w[0, 1] = w[1, 2] = w[2, 0] = 1.0
    diag = validate(Network(w))
    assert diag.strongly_connected
    assert not diag.has_self_loop
    assert not diag.all_ok


def test_column_sum_violation_detected():
    w = np.full((2, 2), 0.45)  # columns sum to 0.9
    diag = validate(Network(w))
    assert not diag.left_stochastic
    assert diag.max_column_sum_error == pytest.approx(0.1)


def test_disconnected_network_detected():
    w = np.eye(4)
    diag = validate(Network(w))
    assert not diag.strongly_connected


def test_non_square_rejected():
    with pytest.raises(InvalidInputError):
        Network(np.ones((2, 3)))


def test_neighbors_from_columns():
    w = np.array([[0.5, 0.0], [0.5, 1.0]])
    net = Network(w)
    assert list(net.neighbors(0)) == [0, 1]
    assert list(net.neighbors(1)) == [1]


# ---------------------------------------------------------------------------
# Perron vector
# ---------------------------------------------------------------------------

def test_perron_uniform_for_doubly_stochastic():
    pv = perron(generate("full", 5))
    assert pv.pi == pytest.approx(np.full(5, 0.2), abs=1e-12)

    # a random doubly stochastic primitive matrix: symmetrize a generated one
    rng = np.random.default_rng(0)
    w = rng.uniform(0.1, 1.0, (4, 4))
    w = w + w.T
    for _ in range(200):  # Sinkhorn to doubly stochastic
        w /= w.sum(axis=0, keepdims=True)
        w = (w / w.sum(axis=1, keepdims=True)).T
    pv = perron(Network(w / w.sum(axis=0, keepdims=True)))
    assert pv.pi == pytest.approx(np.full(4, 0.25), abs=1e-6)


def test_perron_residual_and_positivity_on_random_networks():
    for seed in range(100):
        net = generate("random-strongly-connected", 5, seed=seed)
        pv = perron(net)
        assert pv.residual < 1e-10
        assert np.min(pv.pi) > 0.0
        assert pv.pi.sum() == pytest.approx(1.0, abs=1e-12)


def test_perron_rejects_invalid_network():
    w = np.zeros((3, 3))
    w[0, 1] = w[1, 2] = w[2, 0] = 1.0  # no self-loop
    with pytest.raises(InvalidInputError):
        perron(Network(w))


def test_perron_iteration_cap():
    net = generate("random-strongly-connected", 6, seed=3)
    with pytest.raises(NonConvergenceError):
        perron(net, tol=1e-15, max_iters=2)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def test_generator_is_deterministic():
    a = generate("random-strongly-connected", 5, seed=42)
    b = generate("random-strongly-connected", 5, seed=42)
    assert np.array_equal(a.weights, b.weights)
    c = generate("random-strongly-connected", 5, seed=43)
    assert not np.array_equal(a.weights, c.weights)


def test_generated_networks_validate():
    for seed in (7, 11, 99):
        for n in (2, 5, 12):
            diag = validate(generate("random-strongly-connected", n, seed=seed))
            assert diag.all_ok


def test_ring_topology():
    net = generate("ring-with-self-loops", 4)
    diag = validate(net)
    assert diag.all_ok
    assert np.all(np.diag(net.weights) == 0.5)


def test_explicit_matrix_round_trip():
    m = [[0.5, 0.25], [0.5, 0.75]]
    net = generate("explicit", 2, matrix=m)
    assert np.allclose(net.weights, m)
    with pytest.raises(InvalidInputError):
        generate("explicit", 2, matrix=[[0.5, 0.5], [0.4, 0.5]])


def test_unknown_topology_rejected():
    with pytest.raises(InvalidInputError):
        generate("small-world", 5)


# ---------------------------------------------------------------------------
# averaging property
# ---------------------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.lists(st.floats(-50, 50), min_size=3, max_size=8))
def test_left_stochastic_average_never_exceeds_max(seed, values):
    v = np.array(values)
    net = generate("random-strongly-connected", len(v), seed=seed)
    averaged = net.weights.T @ v
    assert np.max(averaged) <= np.max(v) + 1e-12
    assert np.min(averaged) >= np.min(v) - 1e-12
