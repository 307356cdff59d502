"""State spaces, beliefs, likelihood models, and information measures.

Beliefs are plain length-M numpy vectors on the probability simplex; the
helpers in this module validate them.  Likelihood models come in two
families: Gaussian location families with a shared standard deviation, and
finite-alphabet mass tables.  On top of these the module computes KL
divergences, per-agent identifiability gaps, and the almost-sure bound on
the centered log-likelihood ratio used by the error-probability analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, InvalidInputError, UnsupportedModelError

SIMPLEX_TOL = 1e-12
MIN_MASS = 1e-12
LOG_2PI = math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# state space and beliefs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateSpace:
    """Ordered set of candidate states, optionally with a numeric value each.

    The numeric values serve as the true observation means in the Gaussian
    experiments; they are irrelevant for finite-alphabet models.
    """

    labels: tuple[str, ...]
    values: np.ndarray | None = None

    def __post_init__(self):
        labels = tuple(str(l) for l in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise InvalidInputError("state space needs at least 2 states")
        if len(set(labels)) != len(labels):
            raise InvalidInputError("state labels must be unique")
        if self.values is not None:
            values = np.asarray(self.values, dtype=float)
            if values.shape != (len(labels),):
                raise InvalidInputError(
                    f"expected {len(labels)} state values, got shape {values.shape}"
                )
            values.setflags(write=False)
            object.__setattr__(self, "values", values)

    @property
    def m_states(self) -> int:
        return len(self.labels)


def uniform_belief(m_states: int) -> np.ndarray:
    return np.full(m_states, 1.0 / m_states)


def validate_belief(probs: np.ndarray, require_positive: bool = False) -> np.ndarray:
    """Check that ``probs`` lies on the simplex; returns it as a float array."""
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1:
        raise InvalidInputError("belief must be a 1-D vector")
    if np.any(probs < 0.0):
        raise InvalidInputError("belief entries must be nonnegative")
    if require_positive and np.any(probs <= 0.0):
        raise InvalidInputError("belief entries must be strictly positive")
    if abs(float(probs.sum()) - 1.0) > SIMPLEX_TOL:
        raise InvalidInputError(f"belief entries sum to {probs.sum()!r}, not 1")
    return probs


# ---------------------------------------------------------------------------
# likelihood models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianLikelihood:
    """Per-agent, per-state normal likelihoods with a shared std deviation.

    ``means[k, m]`` is agent k's model mean for state m.
    """

    means: np.ndarray
    sigma: float

    kind = "gaussian"

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        if means.ndim != 2:
            raise InvalidInputError("means must be an (agents, states) matrix")
        means.setflags(write=False)
        object.__setattr__(self, "means", means)
        if not (self.sigma > 0.0):
            raise InvalidInputError("sigma must be positive")

    @property
    def n_agents(self) -> int:
        return self.means.shape[0]

    @property
    def m_states(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class FiniteAlphabetLikelihood:
    """Per-agent, per-state probability mass tables over a shared alphabet.

    ``tables[k, m]`` is agent k's pmf over symbols given state m.  Every
    entry must be at least ``MIN_MASS`` so that all pairwise KL divergences
    between an agent's rows stay finite.
    """

    tables: np.ndarray

    kind = "finite-alphabet"

    def __post_init__(self):
        tables = np.asarray(self.tables, dtype=float)
        if tables.ndim != 3:
            raise InvalidInputError("tables must have shape (agents, states, symbols)")
        if np.any(tables < MIN_MASS):
            raise InvalidInputError(
                f"likelihood mass entries must be >= {MIN_MASS}"
            )
        if np.any(np.abs(tables.sum(axis=2) - 1.0) > SIMPLEX_TOL * tables.shape[2]):
            raise InvalidInputError("likelihood mass rows must sum to 1")
        tables.setflags(write=False)
        object.__setattr__(self, "tables", tables)

    @property
    def n_agents(self) -> int:
        return self.tables.shape[0]

    @property
    def m_states(self) -> int:
        return self.tables.shape[1]

    @property
    def n_symbols(self) -> int:
        return self.tables.shape[2]


LikelihoodModel = Union[GaussianLikelihood, FiniteAlphabetLikelihood]


@dataclass(frozen=True)
class GaussianTrueModel:
    """Observation law per true state: N(means[s], sigma^2), shared by agents."""

    means: np.ndarray
    sigma: float

    kind = "gaussian"

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        if means.ndim != 1:
            raise InvalidInputError("true-model means must be a length-M vector")
        means.setflags(write=False)
        object.__setattr__(self, "means", means)
        if not (self.sigma > 0.0):
            raise InvalidInputError("sigma must be positive")

    @property
    def m_states(self) -> int:
        return self.means.shape[0]


@dataclass(frozen=True)
class FiniteAlphabetTrueModel:
    """Observation pmf per true state over the shared alphabet.

    Rows must sum to 1 but may contain zeros: a zero marks a symbol the
    environment never emits in that state, which narrows the almost-sure
    support used by :func:`bound_C`.
    """

    table: np.ndarray

    kind = "finite-alphabet"

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        if table.ndim != 2:
            raise InvalidInputError("true-model table must have shape (states, symbols)")
        if np.any(table < 0.0):
            raise InvalidInputError("true-model mass entries must be nonnegative")
        if np.any(np.abs(table.sum(axis=1) - 1.0) > SIMPLEX_TOL * table.shape[1]):
            raise InvalidInputError("true-model mass rows must sum to 1")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def m_states(self) -> int:
        return self.table.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.table.shape[1]


TrueModel = Union[GaussianTrueModel, FiniteAlphabetTrueModel]


# ---------------------------------------------------------------------------
# log-likelihood evaluation
# ---------------------------------------------------------------------------

def _gaussian_log_density(x, mean, sigma):
    z = (x - mean) / sigma
    return -0.5 * z * z - math.log(sigma) - 0.5 * LOG_2PI


def eval_log_likelihood(model: LikelihoodModel, agent: int, state: int, obs) -> float:
    """log L_agent(obs | state) in nats."""
    if not (0 <= state < model.m_states):
        raise InvalidInputError(f"state index {state} out of range")
    if not (0 <= agent < model.n_agents):
        raise InvalidInputError(f"agent index {agent} out of range")
    if model.kind == "gaussian":
        return float(_gaussian_log_density(float(obs), model.means[agent, state], model.sigma))
    symbol = int(obs)
    if symbol != obs or not (0 <= symbol < model.n_symbols):
        raise DomainError(f"symbol {obs!r} outside alphabet of size {model.n_symbols}")
    return float(np.log(model.tables[agent, state, symbol]))


def log_likelihood_matrix(model: LikelihoodModel, observations: np.ndarray) -> np.ndarray:
    """Per-step log-likelihoods: (N,) observations -> (N, M) matrix."""
    return log_likelihood_tensor(model, np.asarray(observations)[None, :])[0]


def log_likelihood_tensor(model: LikelihoodModel, observations: np.ndarray) -> np.ndarray:
    """Batch log-likelihoods: (T, N) observations -> (T, N, M) tensor."""
    obs = np.asarray(observations)
    if obs.ndim != 2 or obs.shape[1] != model.n_agents:
        raise InvalidInputError(
            f"expected observations of shape (steps, {model.n_agents})"
        )
    if model.kind == "gaussian":
        return _gaussian_log_density(
            obs[:, :, None].astype(float), model.means[None, :, :], model.sigma
        )
    symbols = obs.astype(np.int64)
    if np.any(symbols < 0) or np.any(symbols >= model.n_symbols):
        raise DomainError("observation outside the finite alphabet")
    log_tables = np.log(model.tables)  # (N, M, K)
    n = model.n_agents
    return log_tables[np.arange(n)[None, :, None],
                      np.arange(model.m_states)[None, None, :],
                      symbols[:, :, None]]


# ---------------------------------------------------------------------------
# KL divergence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gaussian:
    """A single normal distribution, for KL arithmetic."""

    mean: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0.0):
            raise InvalidInputError("sigma must be positive")


def kl_divergence(p, q) -> float:
    """D_KL(p || q) in nats.

    Both arguments must be of the same family: two :class:`Gaussian`
    instances (closed form; reduces to (dmean)^2 / (2 sigma^2) for equal
    sigmas) or two mass vectors over the same alphabet (exact sum, with
    the 0 * log 0 = 0 convention for zero entries of ``p``).
    """
    p_gauss = isinstance(p, Gaussian)
    q_gauss = isinstance(q, Gaussian)
    if p_gauss != q_gauss:
        raise InvalidInputError("cannot mix Gaussian and finite-alphabet distributions")
    if p_gauss:
        var_ratio = (p.sigma / q.sigma) ** 2
        dm = p.mean - q.mean
        return float(
            math.log(q.sigma / p.sigma) + 0.5 * (var_ratio - 1.0) + dm * dm / (2.0 * q.sigma**2)
        )
    pv = np.asarray(p, dtype=float)
    qv = np.asarray(q, dtype=float)
    if pv.shape != qv.shape or pv.ndim != 1:
        raise InvalidInputError("mass vectors must share one support")
    if np.any(pv < 0) or np.any(qv < 0):
        raise InvalidInputError("mass vectors must be nonnegative")
    if abs(pv.sum() - 1.0) > 1e-9 or abs(qv.sum() - 1.0) > 1e-9:
        raise InvalidInputError("mass vectors must sum to 1")
    support = pv > 0.0
    if np.any(qv[support] == 0.0):
        return math.inf
    s = float(np.sum(pv[support] * np.log(pv[support] / qv[support])))
    # Gibbs' inequality guarantees nonnegativity; rounding of the sum can
    # undershoot by a few ulps for nearly identical inputs
    return max(s, 0.0) if s > -1e-12 else s


# ---------------------------------------------------------------------------
# identifiability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentifiabilityTable:
    """KL gaps d[k, j] for each agent k and wrong state wrong_states[j].

    ``assumption2_failures`` lists wrong states that no agent can
    distinguish from the true one (no strictly positive column entry).
    ``negative_entries`` lists (agent, wrong_state) pairs where the agent's
    model for the true state is KL-farther from the truth than its model
    for the wrong state; these are diagnostics, not errors.
    """

    d: np.ndarray
    true_state: int
    wrong_states: tuple[int, ...]
    assumption2_failures: tuple[int, ...] = ()
    negative_entries: tuple[tuple[int, int], ...] = ()

    @property
    def assumption2_ok(self) -> bool:
        return not self.assumption2_failures

    def column(self, wrong_state: int) -> np.ndarray:
        return self.d[:, self.wrong_states.index(wrong_state)]


def _true_distribution(true_model: TrueModel, state: int):
    if true_model.kind == "gaussian":
        return Gaussian(float(true_model.means[state]), true_model.sigma)
    return true_model.table[state]


def _agent_distribution(model: LikelihoodModel, agent: int, state: int):
    if model.kind == "gaussian":
        return Gaussian(float(model.means[agent, state]), model.sigma)
    return model.tables[agent, state]


def identifiability(
    true_model: TrueModel, models: LikelihoodModel, true_state: int
) -> IdentifiabilityTable:
    """Per-agent KL advantage of the true state over each wrong state.

    d_k(m) = D_KL(f || L_k(.|m)) - D_KL(f || L_k(.|true)), where f is the
    observation law under ``true_state``.  Positive entries mean agent k's
    model prefers the true state.
    """
    if models.kind != true_model.kind:
        raise InvalidInputError("true model and likelihood model families differ")
    m_states = models.m_states
    if true_model.m_states != m_states:
        raise InvalidInputError("state-count mismatch between models")
    if not (0 <= true_state < m_states):
        raise InvalidInputError(f"true state {true_state} out of range")
    n = models.n_agents
    wrong = tuple(m for m in range(m_states) if m != true_state)
    f = _true_distribution(true_model, true_state)
    d = np.empty((n, m_states - 1))
    for k in range(n):
        base = kl_divergence(f, _agent_distribution(models, k, true_state))
        for j, m in enumerate(wrong):
            d[k, j] = kl_divergence(f, _agent_distribution(models, k, m)) - base
    failures = tuple(int(wrong[j]) for j in range(m_states - 1) if not np.any(d[:, j] > 0.0))
    negatives = tuple(
        (int(k), int(wrong[j])) for k, j in zip(*np.nonzero(d < 0.0))
    )
    d.setflags(write=False)
    return IdentifiabilityTable(
        d=d,
        true_state=true_state,
        wrong_states=wrong,
        assumption2_failures=failures,
        negative_entries=negatives,
    )


# ---------------------------------------------------------------------------
# bounded log-likelihood ratio
# ---------------------------------------------------------------------------

def bound_C(
    true_model: TrueModel, models: LikelihoodModel, d: IdentifiabilityTable
) -> float:
    """Smallest almost-sure bound on |log(L_k(xi|m)/L_k(xi|true)) + d_k(m)|.

    Enumerates every agent, wrong state, and alphabet symbol that the true
    observation law can actually emit (symbols with zero true-model mass
    occur with probability zero and do not constrain the bound).  Only
    finite-alphabet models admit a finite bound; Gaussian likelihood ratios
    are unbounded.
    """
    if models.kind == "gaussian" or true_model.kind == "gaussian":
        raise UnsupportedModelError(
            "the log-likelihood ratio of Gaussian models is unbounded; "
            "a finite almost-sure bound requires finite-alphabet models"
        )
    support = true_model.table[d.true_state] > 0.0
    if not np.any(support):
        raise InvalidInputError("true model has empty support in the true state")
    log_tables = np.log(models.tables)  # (N, M, K)
    ratios = log_tables[:, list(d.wrong_states), :] - log_tables[:, [d.true_state], :]
    centered = ratios + d.d[:, :, None]
    return float(np.max(np.abs(centered[:, :, support])))
