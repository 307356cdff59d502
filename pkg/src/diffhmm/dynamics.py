"""Log-belief-ratio dynamics of the diffusion alpha-HMM strategy.

With a designated true state, the per-agent vector of log-ratios between
wrong-state and true-state beliefs evolves through a nonlinear coordinate
map followed by the network's weighted average.  This module implements
that map, its closed-form Jacobian, the deterministic reference system
obtained by replacing the random log-likelihood ratios with their means,
and solvers/certificates for the reference system's fixed point, its
contraction rate, and the resulting steady-state error-probability bound.

Shapes: per-agent ratio vectors have length M-1 (one entry per wrong
state); network states are (N, M-1) matrices.  The map functions accept
arbitrary leading batch dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NonConvergenceError
from .network import Network

# past this magnitude exp() over/underflows; the map's analytic limits are
# exact to machine precision anyway
EXP_CLIP = 700.0


def _check_alpha(alpha: float, m_states: int, allow_boundary: bool = False) -> None:
    hi_ok = alpha <= 1.0 / m_states if allow_boundary else alpha < 1.0 / m_states
    if not (0.0 < alpha and hi_ok):
        raise InvalidInputError(
            f"alpha must lie in (0, 1/M{']' if allow_boundary else ')'} "
            f"with M = {m_states}; got {alpha}"
        )


def f_map(x: np.ndarray, alpha: float, m_states: int) -> np.ndarray:
    """Coordinate map of the log-ratio recursion.

    Component m of the output is
    log(((1-aM) e^{x_m} + a + a S) / (1-aM + a + a S)),  S = sum_n e^{x_n}.

    Evaluated as log1p((1-aM) expm1(x_m) / (1-aM + a + a S)), which keeps
    the output's sign exactly equal to the sign of x_m even when S is
    astronomically larger than e^{x_m}.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m_states - 1:
        raise InvalidInputError(f"expected {m_states - 1} components, got {x.shape[-1]}")
    _check_alpha(alpha, m_states, allow_boundary=True)
    xc = np.clip(x, -EXP_CLIP, EXP_CLIP)
    gamma = 1.0 - alpha * m_states + alpha + alpha * np.exp(xc).sum(axis=-1, keepdims=True)
    return np.log1p((1.0 - alpha * m_states) * np.expm1(xc) / gamma)


def f_range_bound(alpha: float, m_states: int) -> float:
    """Half-width of the closed interval the map's components land in."""
    _check_alpha(alpha, m_states, allow_boundary=True)
    return float(np.log((1.0 - alpha * m_states + alpha) / alpha))


def f_jacobian(x: np.ndarray, alpha: float, m_states: int) -> np.ndarray:
    """Closed-form partial derivatives of :func:`f_map`.

    Writing L_m = (1-aM) e^{x_m} + a + a S and G = 1-aM + a + a S:

      dF_m/dx_m = (1-aM) e^{x_m} (a + G - a e^{x_m}) / (L_m G)
      dF_m/dx_l = a (1-aM) e^{x_l} (1 - e^{x_m}) / (L_m G),  l != m

    At the origin this is (1-aM) times the identity.  Factors are grouped
    as products of bounded ratios so nothing overflows under the clip.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m_states - 1:
        raise InvalidInputError(f"expected {m_states - 1} components, got {x.shape[-1]}")
    _check_alpha(alpha, m_states, allow_boundary=True)
    one_less = 1.0 - alpha * m_states
    e = np.exp(np.clip(x, -EXP_CLIP, EXP_CLIP))  # (..., M-1)
    s = e.sum(axis=-1, keepdims=True)
    gamma = one_less + alpha + alpha * s  # (..., 1)
    lam = one_less * e + alpha + alpha * s  # (..., M-1): L_m per output row
    # off-diagonal template: rows m, columns l
    off = (alpha * one_less) * (e[..., None, :] / lam[..., :, None]) \
        * ((1.0 - e[..., :, None]) / gamma[..., None])
    diag = (one_less * e / lam) * ((alpha + gamma - alpha * e) / gamma)
    jac = off
    idx = np.arange(m_states - 1)
    jac[..., idx, idx] = diag
    return jac


def log_ratio_step(
    x: np.ndarray, log_lik_ratios: np.ndarray, network: Network, alpha: float
) -> np.ndarray:
    """One step of the networked log-ratio recursion.

    x'[k, m] = sum_l a_{lk} (F_m(x[l]) + log_lik_ratios[l, m]).
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(log_lik_ratios, dtype=float)
    n = network.n_agents
    if x.ndim != 2 or x.shape[0] != n or r.shape != x.shape:
        raise InvalidInputError("x and log_lik_ratios must both be (agents, M-1)")
    m_states = x.shape[1] + 1
    return network.weights.T @ (f_map(x, alpha, m_states) + r)


@dataclass(frozen=True)
class ReferenceSystem:
    """Deterministic stand-in for the stochastic recursion: the random
    log-likelihood ratios are replaced by their means, -d."""

    network: Network
    d: np.ndarray  # (N, M-1) identifiability entries
    alpha: float

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != self.network.n_agents:
            raise InvalidInputError("d must have shape (agents, M-1)")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)
        _check_alpha(self.alpha, self.m_states)

    @property
    def m_states(self) -> int:
        return self.d.shape[1] + 1

    @property
    def neighborhood_identifiability(self) -> np.ndarray:
        """(N, M-1) matrix of sum_l a_{lk} d_l(m)."""
        return self.network.weights.T @ self.d


def reference_step(x: np.ndarray, system: ReferenceSystem) -> np.ndarray:
    return log_ratio_step(x, -system.d, system.network, system.alpha)


@dataclass(frozen=True)
class FixedPoint:
    x_inf: np.ndarray  # (N, M-1)
    x_bar_inf: float  # max entry
    iterations: int
    residual: float
    lemma1_margins: np.ndarray  # -neighborhood identifiability minus x_inf


def solve_fixed_point(
    system: ReferenceSystem,
    x0: np.ndarray | None = None,
    tol: float = 1e-12,
    max_iters: int = 10**6,
) -> FixedPoint:
    """Iterate the reference system to its fixed point.

    Plain iteration of the map itself: for 0 < alpha < 1/M the recursion
    contracts at rate at most 1 - alpha once the iterate enters the
    negative orthant, so no Newton step is warranted.  Raises
    NonConvergenceError if the max-norm residual fails to drop below
    ``tol`` within ``max_iters``.
    """
    if tol <= 0.0:
        raise InvalidInputError("tol must be positive")
    if max_iters < 1:
        raise InvalidInputError("max_iters must be at least 1")
    n, mm1 = system.d.shape
    x = np.zeros((n, mm1)) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (n, mm1):
        raise InvalidInputError(f"x0 must have shape {(n, mm1)}")
    for it in range(1, max_iters + 1):
        nxt = reference_step(x, system)
        residual = float(np.max(np.abs(nxt - x)))
        x = nxt
        if residual < tol:
            # the margin is strictly positive whenever some agent can
            # distinguish each wrong state; it degenerates to exactly 0 in
            # each column where d vanishes identically (flagged upstream by
            # the global-identifiability validator)
            margins = -system.neighborhood_identifiability - x
            if np.any(margins < -10.0 * tol):
                raise NonConvergenceError(
                    "fixed point violates the neighborhood-identifiability bound",
                    it,
                    residual,
                )
            x.setflags(write=False)
            margins.setflags(write=False)
            return FixedPoint(
                x_inf=x,
                x_bar_inf=float(x.max()),
                iterations=it,
                residual=residual,
                lemma1_margins=margins,
            )
    raise NonConvergenceError(
        f"fixed-point iteration did not reach tol={tol:g} in {max_iters} steps",
        max_iters,
        residual,
    )


@dataclass(frozen=True)
class ContractionReport:
    passed: bool
    samples: int
    rate_bound: float  # 1 - alpha
    max_ratio: float
    violations: tuple[tuple[np.ndarray, np.ndarray, float], ...] = ()

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "samples": self.samples,
            "rate_bound": self.rate_bound,
            "max_ratio": self.max_ratio,
            "violations": [
                {"x": v[0].tolist(), "x_prime": v[1].tolist(), "ratio": v[2]}
                for v in self.violations
            ],
        }


def contraction_certificate(
    system: ReferenceSystem, samples: int = 10**5, seed: int = 0,
    low: float = -20.0,
) -> ContractionReport:
    """Monte Carlo check that the map contracts the negative orthant.

    Draws ``samples`` pairs uniformly from [low, 0)^(M-1) and verifies
    ||F(x) - F(x')||_inf <= (1 - alpha) ||x - x'||_inf on each.  Coincident
    pairs are skipped.  Violations are collected into the report rather
    than raised, so a failed certificate is inspectable.
    """
    if samples < 1:
        raise InvalidInputError("need at least one sample pair")
    rng = np.random.default_rng(seed)
    mm1 = system.m_states - 1
    xs = rng.uniform(low, 0.0, (samples, mm1))
    ys = rng.uniform(low, 0.0, (samples, mm1))
    dist = np.max(np.abs(xs - ys), axis=1)
    keep = dist > 0.0
    fx = f_map(xs[keep], system.alpha, system.m_states)
    fy = f_map(ys[keep], system.alpha, system.m_states)
    ratios = np.max(np.abs(fx - fy), axis=1) / dist[keep]
    bound = 1.0 - system.alpha
    bad = np.nonzero(ratios > bound)[0]
    violations = tuple(
        (xs[keep][i].copy(), ys[keep][i].copy(), float(ratios[i])) for i in bad[:10]
    )
    return ContractionReport(
        passed=bad.size == 0,
        samples=samples,
        rate_bound=bound,
        max_ratio=float(ratios.max()) if ratios.size else 0.0,
        violations=violations,
    )


@dataclass(frozen=True)
class Theorem2Report:
    """Steady-state error-probability bound C / (-alpha * x_bar_inf).

    ``condition_holds`` records whether every agent's neighborhood
    identifiability strictly exceeds C; the bound is only guaranteed in
    that regime but is reported regardless for diagnostics.  ``vacuous``
    flags a bound >= 1.
    """

    condition_holds: bool
    bound: float
    vacuous: bool
    c: float
    x_bar_inf: float
    min_neighborhood_identifiability: float
    fixed_point: FixedPoint

    def as_dict(self) -> dict:
        return {
            "condition_holds": self.condition_holds,
            "bound": self.bound,
            "vacuous": self.vacuous,
            "C": self.c,
            "x_bar_inf": self.x_bar_inf,
            "min_neighborhood_identifiability": self.min_neighborhood_identifiability,
        }


def theorem2_bound(system: ReferenceSystem, c: float) -> Theorem2Report:
    """Evaluate the error-probability bound for a given almost-sure ratio bound c."""
    if c < 0.0:
        raise InvalidInputError("C must be nonnegative")
    fp = solve_fixed_point(system)
    nbhd = system.neighborhood_identifiability
    min_nbhd = float(nbhd.min())
    bound = c / (-system.alpha * fp.x_bar_inf)
    return Theorem2Report(
        condition_holds=bool(min_nbhd > c),
        bound=float(bound),
        vacuous=bool(bound >= 1.0),
        c=float(c),
        x_bar_inf=fp.x_bar_inf,
        min_neighborhood_identifiability=min_nbhd,
        fixed_point=fp,
    )
