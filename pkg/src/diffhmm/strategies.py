"""Belief-update strategies: inference rules plus geometric aggregation.

Every rule factors into a private inference step (prior belief + new
log-likelihoods -> intermediate belief) followed by a network-wide
geometric aggregation step.  All arithmetic runs in the log domain with a
max-subtraction before exponentiation, so 50k-step products cannot
underflow.  The inference functions accept batched inputs: any leading
dimensions are broadcast, with states along the last axis.

These are the reference implementations.  The simulation engine uses the
compiled/vectorized kernels in ``_kernel`` / ``_kernel_py``; agreement
between the two routes is enforced by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SIMPLEX_TOL
from .errors import InvalidInputError
from .network import Network

# kernel opcode per strategy family
CODE_BAYES = 0
CODE_ALPHA_HMM = 1
CODE_HMM = 2
CODE_GENERALIZED = 3


@dataclass(frozen=True)
class Strategy:
    """Tagged strategy configuration.

    kinds and parameters:
      - ``alpha-hmm``: exit probability ``alpha`` in (0, 1/M]
      - ``hmm``: full row-stochastic transition matrix ``transition``
      - ``bayes``: no parameters (static-environment update)
      - ``asl``: step size ``delta`` in (0, 1]
      - ``linearized-alpha-hmm``: ``alpha`` in (0, 1/M]; runs the
        first-order expansion of the alpha-HMM log-ratio recursion, i.e.
        a prior discount of alpha*M with unit likelihood weight
      - ``generalized``: prior discount ``delta1`` in [0, 1] and
        likelihood weight ``delta2`` >= 0
    """

    kind: str
    alpha: float | None = None
    delta: float | None = None
    delta1: float | None = None
    delta2: float | None = None
    transition: np.ndarray | None = None

    @classmethod
    def alpha_hmm(cls, alpha: float) -> "Strategy":
        return cls(kind="alpha-hmm", alpha=alpha)

    @classmethod
    def hmm(cls, transition: np.ndarray) -> "Strategy":
        return cls(kind="hmm", transition=np.asarray(transition, dtype=float))

    @classmethod
    def bayes(cls) -> "Strategy":
        return cls(kind="bayes")

    @classmethod
    def asl(cls, delta: float) -> "Strategy":
        return cls(kind="asl", delta=delta)

    @classmethod
    def linearized_alpha_hmm(cls, alpha: float) -> "Strategy":
        return cls(kind="linearized-alpha-hmm", alpha=alpha)

    @classmethod
    def generalized(cls, delta1: float, delta2: float) -> "Strategy":
        return cls(kind="generalized", delta1=delta1, delta2=delta2)

    def validate_for(self, m_states: int) -> None:
        if self.kind in ("alpha-hmm", "linearized-alpha-hmm"):
            if self.alpha is None or not (0.0 < self.alpha <= 1.0 / m_states):
                raise InvalidInputError(
                    f"{self.kind} needs 0 < alpha <= 1/M = {1.0 / m_states:g}, "
                    f"got {self.alpha!r}"
                )
        elif self.kind == "hmm":
            p = self.transition
            if p is None or p.shape != (m_states, m_states):
                raise InvalidInputError("hmm needs an MxM transition matrix")
            if np.any(p < 0.0) or np.any(np.abs(p.sum(axis=1) - 1.0) > SIMPLEX_TOL * m_states):
                raise InvalidInputError("transition matrix must be row-stochastic")
        elif self.kind == "asl":
            if self.delta is None or not (0.0 < self.delta <= 1.0):
                raise InvalidInputError(f"asl needs 0 < delta <= 1, got {self.delta!r}")
        elif self.kind == "generalized":
            if self.delta1 is None or not (0.0 <= self.delta1 <= 1.0):
                raise InvalidInputError(f"generalized needs 0 <= delta1 <= 1, got {self.delta1!r}")
            if self.delta2 is None or self.delta2 < 0.0:
                raise InvalidInputError(f"generalized needs delta2 >= 0, got {self.delta2!r}")
        elif self.kind != "bayes":
            raise InvalidInputError(f"unknown strategy kind {self.kind!r}")

    def label(self) -> str:
        return self.kind

    def kernel_params(self, m_states: int) -> tuple[int, float, float, np.ndarray]:
        """Lower to (opcode, p1, p2, transition) consumed by the kernels."""
        self.validate_for(m_states)
        no_p = np.zeros((m_states, m_states))
        if self.kind == "alpha-hmm":
            return CODE_ALPHA_HMM, float(self.alpha), 0.0, no_p
        if self.kind == "hmm":
            return CODE_HMM, 0.0, 0.0, np.ascontiguousarray(self.transition, dtype=float)
        if self.kind == "bayes":
            return CODE_BAYES, 0.0, 0.0, no_p
        if self.kind == "asl":
            return CODE_GENERALIZED, float(self.delta), float(self.delta), no_p
        if self.kind == "linearized-alpha-hmm":
            return CODE_GENERALIZED, float(self.alpha) * m_states, 1.0, no_p
        return CODE_GENERALIZED, float(self.delta1), float(self.delta2), no_p


def equal_exit_transition(m_states: int, h: float) -> np.ndarray:
    """Markov matrix that stays with probability 1-h and otherwise jumps
    uniformly to one of the other states."""
    if not (0.0 <= h <= 1.0):
        raise InvalidInputError("total exit probability h must lie in [0, 1]")
    p = np.full((m_states, m_states), h / (m_states - 1))
    np.fill_diagonal(p, 1.0 - h)
    return p


# ---------------------------------------------------------------------------
# inference rules
# ---------------------------------------------------------------------------

def _normalize_log(log_weights: np.ndarray) -> np.ndarray:
    """exp-and-normalize along the last axis, stable under large offsets."""
    shifted = log_weights - log_weights.max(axis=-1, keepdims=True)
    w = np.exp(shifted)
    return w / w.sum(axis=-1, keepdims=True)


def infer_alpha_hmm(prior: np.ndarray, log_liks: np.ndarray, alpha: float) -> np.ndarray:
    """Mix the prior with a uniform component, then reweight by likelihoods.

    psi_m is proportional to ((1 - alpha*M) * prior_m + alpha) * exp(ll_m).
    At alpha = 1/M the prior drops out entirely.
    """
    prior = np.asarray(prior, dtype=float)
    m = prior.shape[-1]
    if not (0.0 < alpha <= 1.0 / m):
        raise InvalidInputError(
            f"alpha must lie in (0, 1/M]; got {alpha} with M = {m} "
            "(the prior mixing weight 1 - alpha*M would be negative)"
        )
    mixed = (1.0 - alpha * m) * prior + alpha
    return _normalize_log(np.log(mixed) + np.asarray(log_liks, dtype=float))


def infer_hmm(prior: np.ndarray, log_liks: np.ndarray, transition: np.ndarray) -> np.ndarray:
    """One-step Markov prediction of the prior followed by Bayes reweighting."""
    prior = np.asarray(prior, dtype=float)
    p = np.asarray(transition, dtype=float)
    m = prior.shape[-1]
    if p.shape != (m, m) or np.any(p < 0.0) or np.any(np.abs(p.sum(axis=1) - 1.0) > SIMPLEX_TOL * m):
        raise InvalidInputError("transition matrix must be MxM row-stochastic")
    predicted = prior @ p  # sum_n prior_n p_{nm}
    with np.errstate(divide="ignore"):  # unreachable states predict log 0
        return _normalize_log(np.log(predicted) + np.asarray(log_liks, dtype=float))


def infer_generalized(
    prior: np.ndarray, log_liks: np.ndarray, delta1: float, delta2: float
) -> np.ndarray:
    """Discounted-prior update: psi_m proportional to prior_m^(1-delta1) * exp(delta2 * ll_m).

    delta1 = 0, delta2 = 1 recovers the Bayes update; delta1 = delta2 is the
    adaptive-social-learning step; delta1 = 1 ignores the prior entirely.
    """
    if not (0.0 <= delta1 <= 1.0):
        raise InvalidInputError(f"delta1 must lie in [0, 1], got {delta1}")
    if delta2 < 0.0:
        raise InvalidInputError(f"delta2 must be nonnegative, got {delta2}")
    prior = np.asarray(prior, dtype=float)
    log_liks = np.asarray(log_liks, dtype=float)
    if delta1 == 1.0:
        return _normalize_log(delta2 * log_liks + np.zeros_like(prior))
    with np.errstate(divide="ignore"):
        log_prior = np.log(prior)
    return _normalize_log((1.0 - delta1) * log_prior + delta2 * log_liks)


def infer_bayes(prior: np.ndarray, log_liks: np.ndarray) -> np.ndarray:
    return infer_generalized(prior, log_liks, 0.0, 1.0)


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def aggregate_geometric(psis: np.ndarray, network: Network, agent: int) -> np.ndarray:
    """Weighted geometric mean of the neighbors' intermediate beliefs.

    mu_k(m) is proportional to exp(sum_l a_{lk} log psi_l(m)).  Zero psi
    entries are rejected: the geometric mean is undefined there, and no
    strategy with a positive prior-mixing weight can produce them.
    """
    psis = np.asarray(psis, dtype=float)
    if psis.ndim != 2 or psis.shape[0] != network.n_agents:
        raise InvalidInputError("psis must have shape (agents, states)")
    if np.any(psis <= 0.0):
        raise InvalidInputError("aggregation requires strictly positive beliefs")
    weights = network.weights[:, agent]
    return _normalize_log(np.log(psis).T @ weights)


def _infer(strategy: Strategy, prior: np.ndarray, log_liks: np.ndarray) -> np.ndarray:
    if strategy.kind == "alpha-hmm":
        return infer_alpha_hmm(prior, log_liks, strategy.alpha)
    if strategy.kind == "hmm":
        return infer_hmm(prior, log_liks, strategy.transition)
    if strategy.kind == "bayes":
        return infer_bayes(prior, log_liks)
    if strategy.kind == "asl":
        return infer_generalized(prior, log_liks, strategy.delta, strategy.delta)
    if strategy.kind == "linearized-alpha-hmm":
        m = np.asarray(prior).shape[-1]
        return infer_generalized(prior, log_liks, strategy.alpha * m, 1.0)
    return infer_generalized(prior, log_liks, strategy.delta1, strategy.delta2)


def step(
    strategy: Strategy,
    beliefs: np.ndarray,
    observations: np.ndarray,
    models,
    network: Network,
) -> np.ndarray:
    """One synchronous round: every agent infers, then every agent aggregates.

    The round barrier is strict: aggregation only sees this round's
    intermediate beliefs, never a mixture of old and new.
    """
    from .core import log_likelihood_matrix

    beliefs = np.asarray(beliefs, dtype=float)
    n = network.n_agents
    if beliefs.shape != (n, models.m_states):
        raise InvalidInputError("beliefs must have shape (agents, states)")
    strategy.validate_for(models.m_states)
    log_liks = log_likelihood_matrix(models, observations)
    psis = np.vstack([_infer(strategy, beliefs[k], log_liks[k]) for k in range(n)])
    return np.vstack([aggregate_geometric(psis, network, k) for k in range(n)])
