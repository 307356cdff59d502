"""Decentralized social learning over agent networks.

Simulates belief-update strategies (alpha-HMM, full HMM filtering, Bayes,
adaptive social learning, and generalized discounted updates) diffused
over a weighted network, and analyzes the induced log-belief-ratio
dynamics: fixed points, contraction rates, and steady-state
error-probability bounds.
"""

__version__ = "0.1.0"

from . import backend, config, core, dynamics, network, sim, strategies

__all__ = [
    "__version__",
    "backend",
    "config",
    "core",
    "dynamics",
    "network",
    "sim",
    "strategies",
]
