"""Independent oracle implementations used to cross-check the fast paths.

Everything here deliberately avoids the simulation kernels: the naive
simulation composes the per-call reference operations in a plain Python
loop, and the scalar fixed point comes from bisection rather than map
iteration.
"""

from __future__ import annotations

import math

import numpy as np

from diffhmm.core import uniform_belief
from diffhmm.sim import SimConfig, _agent_streams, generate_truth, observe
from diffhmm.strategies import step


def naive_simulation(config: SimConfig, strategy_index: int = 0):
    """Plain loop over the reference strategy ops; single replication.

    Returns (accuracy per agent, belief trajectory (T, N, M), truth).
    """
    n = config.network.n_agents
    m = config.states.m_states
    strategy = config.strategies[strategy_index]
    truth_rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0, 0)))
    truth = generate_truth(config.truth, m, config.horizon, truth_rng)
    obs = observe(config.true_model, truth, n, _agent_streams(config.seed, 0, n))

    beliefs = np.tile(uniform_belief(m), (n, 1))
    correct = np.zeros((config.horizon, n), dtype=bool)
    traj = np.empty((config.horizon, n, m))
    for i in range(config.horizon):
        beliefs = step(strategy, beliefs, obs[i], config.models, config.network)
        traj[i] = beliefs
        t = truth[i]
        for k in range(n):
            correct[i, k] = all(
                beliefs[k, t] > beliefs[k, j] for j in range(m) if j != t
            )
    return correct.mean(axis=0), traj, truth


def scalar_fixed_point_bisect(alpha: float, d: float, m_states: int = 2,
                              lo: float = -60.0, hi: float = 0.0,
                              tol: float = 1e-13) -> float:
    """Root of x = F(x) - d for a single agent with M = 2, by bisection.

    Uses the raw ratio form of the map, independent of the library's
    log1p/expm1 formulation.
    """
    assert m_states == 2

    def g(x: float) -> float:
        num = (1.0 - 2.0 * alpha) * math.exp(x) + alpha + alpha * math.exp(x)
        den = 1.0 - 2.0 * alpha + alpha + alpha * math.exp(x)
        return math.log(num / den) - d - x

    glo, ghi = g(lo), g(hi)
    assert glo > 0.0 > ghi, "bisection bracket must straddle the root"
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
