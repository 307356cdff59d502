"""Combination-weight matrices, their validation, and Perron vectors.

Weights follow the column convention: ``weights[l, k]`` is the weight agent
k assigns to neighbor l, so every column sums to one.  Primitivity is
certified structurally (strong connectivity of the support graph plus at
least one self-loop) rather than by checking positivity of matrix powers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NonConvergenceError

COLUMN_SUM_TOL = 1e-12
PERRON_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class Network:
    """Static directed network with a left-stochastic weight matrix."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvalidInputError(f"weight matrix must be square, got {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_agents(self) -> int:
        return self.weights.shape[0]

    def neighbors(self, agent: int) -> np.ndarray:
        """Indices of agents whose weight into ``agent`` is nonzero."""
        return np.nonzero(self.weights[:, agent] > 0.0)[0]


@dataclass(frozen=True)
class NetworkDiagnostics:
    nonnegative: bool
    left_stochastic: bool
    strongly_connected: bool
    has_self_loop: bool
    max_column_sum_error: float

    @property
    def all_ok(self) -> bool:
        return (
            self.nonnegative
            and self.left_stochastic
            and self.strongly_connected
            and self.has_self_loop
        )

    def as_dict(self) -> dict:
        return {
            "nonnegative": self.nonnegative,
            "left_stochastic": self.left_stochastic,
            "strongly_connected": self.strongly_connected,
            "has_self_loop": self.has_self_loop,
            "max_column_sum_error": self.max_column_sum_error,
            "all_ok": self.all_ok,
        }


@dataclass(frozen=True)
class PerronVector:
    pi: np.ndarray
    iterations: int
    residual: float


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    """Boolean reachability from ``start`` following edges adj[i, j]: i -> j."""
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    frontier = [start]
    while frontier:
        i = frontier.pop()
        for j in np.nonzero(adj[i])[0]:
            if not seen[j]:
                seen[j] = True
                frontier.append(j)
    return seen


def validate(network: Network) -> NetworkDiagnostics:
    """Check nonnegativity, column sums, strong connectivity, and self-loops."""
    w = network.weights
    support = w > 0.0
    col_err = float(np.max(np.abs(w.sum(axis=0) - 1.0))) if w.size else 0.0
    # information flows l -> k when a_{lk} > 0; strong connectivity of that
    # directed graph == everything reachable from node 0 both ways
    forward = _reachable(support, 0)
    backward = _reachable(support.T, 0)
    return NetworkDiagnostics(
        nonnegative=bool(np.all(w >= 0.0)) and bool(np.all(w <= 1.0)),
        left_stochastic=col_err <= COLUMN_SUM_TOL,
        strongly_connected=bool(forward.all() and backward.all()),
        has_self_loop=bool(np.any(np.diag(w) > 0.0)),
        max_column_sum_error=col_err,
    )


def perron(network: Network, tol: float = 1e-12, max_iters: int = 10**5) -> PerronVector:
    """Positive eigenvector pi with A pi = pi, normalized to sum 1.

    Plain power iteration; a left-stochastic matrix preserves the entrywise
    sum, so no renormalization is needed between iterates.
    """
    diag = validate(network)
    if not diag.all_ok:
        raise InvalidInputError(f"network fails validation: {diag.as_dict()}")
    a = network.weights
    n = network.n_agents
    pi = np.full(n, 1.0 / n)
    for it in range(1, max_iters + 1):
        nxt = a @ pi
        delta = float(np.max(np.abs(nxt - pi)))
        pi = nxt
        if delta < tol:
            residual = float(np.max(np.abs(a @ pi - pi)))
            if residual > PERRON_RESIDUAL_TOL:
                raise NonConvergenceError(
                    f"power iteration stalled at residual {residual:g}", it, residual
                )
            pi = pi / pi.sum()
            pi.setflags(write=False)
            return PerronVector(pi=pi, iterations=it, residual=residual)
    raise NonConvergenceError(
        f"power iteration did not converge in {max_iters} iterations",
        max_iters,
        float(np.max(np.abs(a @ pi - pi))),
    )


TOPOLOGIES = ("full", "random-strongly-connected", "ring-with-self-loops", "explicit")


def generate(
    topology: str,
    n: int,
    seed: int = 0,
    matrix: np.ndarray | None = None,
    extra_edge_prob: float = 0.3,
) -> Network:
    """Build a validated network, deterministically in (topology, n, seed).

    The random topology starts from a directed Hamiltonian cycle on a
    shuffled agent order (which already guarantees strong connectivity),
    adds every remaining edge independently with ``extra_edge_prob``,
    forces a self-loop on agent 0, draws weights uniform(0.1, 1), and
    normalizes columns.
    """
    if topology not in TOPOLOGIES:
        raise InvalidInputError(f"unknown topology {topology!r}")
    if topology == "explicit":
        if matrix is None:
            raise InvalidInputError("explicit topology requires a matrix")
        net = Network(np.asarray(matrix, dtype=float))
        diag = validate(net)
        if not diag.all_ok:
            raise InvalidInputError(f"explicit matrix fails validation: {diag.as_dict()}")
        return net
    if n < 2:
        raise InvalidInputError("need at least 2 agents")
    if topology == "full":
        return Network(np.full((n, n), 1.0 / n))
    if topology == "ring-with-self-loops":
        w = 0.5 * np.eye(n)
        for k in range(n):
            w[(k - 1) % n, k] = 0.5
        return Network(w)

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    support = np.zeros((n, n), dtype=bool)
    for i in range(n):
        support[order[i], order[(i + 1) % n]] = True
    extra = rng.random((n, n)) < extra_edge_prob
    support |= extra
    support[0, 0] = True
    w = np.where(support, rng.uniform(0.1, 1.0, (n, n)), 0.0)
    w = w / w.sum(axis=0, keepdims=True)
    net = Network(w)
    diag = validate(net)
    if not diag.all_ok:  # the recipe guarantees this; guard against regressions
        raise InvalidInputError(f"generated matrix fails validation: {diag.as_dict()}")
    return net
