import numpy as np
import pytest

from diffhmm.core import GaussianLikelihood, GaussianTrueModel, StateSpace
from diffhmm.network import generate
from diffhmm.sim import SimConfig, TruthProcess
from diffhmm.strategies import Strategy

# the five-agent benchmark: agents 2-5 conflate some pair of states,
# agent 5 conflates all three
TABLE1_MEANS = np.array(
    [
        [0.0, 1.0, 2.0],
        [0.0, 1.0, 1.0],
        [0.0, 0.0, 2.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0],
    ]
)
STATE_VALUES = np.array([0.0, 1.0, 2.0])


@pytest.fixture
def table1_states():
    return StateSpace(labels=("0", "1", "2"), values=STATE_VALUES)


def make_table1_config(
    sigma=0.2,
    truth=None,
    strategies=(Strategy.alpha_hmm(0.1),),
    horizon=1000,
    seed=0,
    network=None,
    **kwargs,
):
    if truth is None:
        truth = TruthProcess.markov_equal_exit(0.1)
    if network is None:
        network = generate("random-strongly-connected", 5, seed=7)
    return SimConfig(
        states=StateSpace(labels=("0", "1", "2"), values=STATE_VALUES),
        network=network,
        models=GaussianLikelihood(TABLE1_MEANS, sigma),
        true_model=GaussianTrueModel(STATE_VALUES, sigma),
        truth=truth,
        strategies=tuple(strategies),
        horizon=horizon,
        seed=seed,
        **kwargs,
    )


@pytest.fixture
def table1_config():
    return make_table1_config
