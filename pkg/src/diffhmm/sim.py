"""True-state processes, observation sampling, the simulation engine,
and parameter sweeps.

Randomness discipline: one master seed per run.  Every purpose draws from
its own child stream, derived with ``SeedSequence(seed, spawn_key=...)``:
(rep, 0) for the true-state trajectory and (rep, 1, k) for agent k's
observations.  Sweep cells derive an independent master seed per cell from
(sweep seed, cell index), so results never depend on execution order or
worker count.  All strategies within one run consume the identical
observation stream (paired comparison).
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import backend as backend_mod
from .core import (
    FiniteAlphabetLikelihood,
    FiniteAlphabetTrueModel,
    GaussianLikelihood,
    GaussianTrueModel,
    LikelihoodModel,
    StateSpace,
    TrueModel,
    log_likelihood_tensor,
)
from .errors import InvalidInputError
from .network import Network, validate
from .strategies import Strategy

TRUTH_KINDS = ("constant", "markov-equal-exit", "periodic-switch")


@dataclass(frozen=True)
class TruthProcess:
    """Generator for the true-state trajectory."""

    kind: str
    state: int | None = None  # constant
    alpha0: float | None = None  # markov-equal-exit: per-alternative exit probability
    t0: int | None = None  # periodic-switch interval

    @classmethod
    def constant(cls, state: int) -> "TruthProcess":
        return cls(kind="constant", state=state)

    @classmethod
    def markov_equal_exit(cls, alpha0: float) -> "TruthProcess":
        return cls(kind="markov-equal-exit", alpha0=alpha0)

    @classmethod
    def periodic_switch(cls, t0: int) -> "TruthProcess":
        return cls(kind="periodic-switch", t0=t0)

    def validate_for(self, m_states: int) -> None:
        if self.kind == "constant":
            if self.state is None or not (0 <= self.state < m_states):
                raise InvalidInputError(f"constant truth needs a state in [0, {m_states})")
        elif self.kind == "markov-equal-exit":
            if self.alpha0 is None or not (0.0 <= self.alpha0 <= 1.0 / (m_states - 1)):
                raise InvalidInputError(
                    f"exit probability must lie in [0, 1/(M-1)]; got {self.alpha0!r}"
                )
        elif self.kind == "periodic-switch":
            if self.t0 is None or self.t0 < 1:
                raise InvalidInputError("switch interval must be >= 1")
        else:
            raise InvalidInputError(f"unknown truth kind {self.kind!r}")


def truth_step(process: TruthProcess, current: int, rng, m_states: int, step: int = 1) -> int:
    """Advance the true state by one step.

    The equal-exit chain stays with probability 1 - alpha0*(M-1) and
    otherwise moves to one of the other states uniformly.  The periodic
    process redraws uniformly over all states (possibly the same one)
    whenever ``step`` is a multiple of its interval.
    """
    if not (0 <= current < m_states):
        raise InvalidInputError(f"current state {current} out of range")
    if process.kind == "constant":
        return current
    if process.kind == "markov-equal-exit":
        if rng.random() < process.alpha0 * (m_states - 1):
            other = int(rng.integers(m_states - 1))
            return other if other < current else other + 1
        return current
    if step % process.t0 == 0:
        return int(rng.integers(m_states))
    return current


def generate_truth(process: TruthProcess, m_states: int, horizon: int, rng) -> np.ndarray:
    """Length-``horizon`` trajectory; entry i generates the step-i observations.

    Non-constant processes draw their initial state uniformly.
    """
    process.validate_for(m_states)
    out = np.empty(horizon, dtype=np.int64)
    if process.kind == "constant":
        out[:] = process.state
        return out
    if process.kind == "periodic-switch":
        n_blocks = -(-horizon // process.t0)
        draws = rng.integers(m_states, size=n_blocks)
        return np.repeat(draws, process.t0)[:horizon].astype(np.int64)
    # markov-equal-exit: pre-draw, then scan
    cur = int(rng.integers(m_states))
    leave = process.alpha0 * (m_states - 1)
    jumps = rng.random(horizon) < leave
    others = rng.integers(m_states - 1, size=horizon)
    for i in range(horizon):
        if i > 0 and jumps[i]:
            o = others[i]
            cur = o if o < cur else o + 1
        out[i] = cur
    return out


def observe(true_model: TrueModel, truth: np.ndarray, n_agents: int, agent_rngs) -> np.ndarray:
    """Independent per-agent observations along a true-state trajectory.

    Gaussian models return a float array, finite-alphabet models an int64
    symbol array; both have shape (len(truth), n_agents).
    """
    horizon = len(truth)
    if true_model.kind == "gaussian":
        obs = np.empty((horizon, n_agents))
        loc = true_model.means[truth]
        for k in range(n_agents):
            obs[:, k] = loc + true_model.sigma * agent_rngs[k].standard_normal(horizon)
        return obs
    cdf = np.cumsum(true_model.table, axis=1)[truth]  # (T, K)
    obs = np.empty((horizon, n_agents), dtype=np.int64)
    n_symbols = true_model.n_symbols
    for k in range(n_agents):
        u = agent_rngs[k].random(horizon)
        obs[:, k] = np.minimum((u[:, None] >= cdf[:, :-1]).sum(axis=1), n_symbols - 1)
    return obs


# ---------------------------------------------------------------------------
# configuration and results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    states: StateSpace
    network: Network
    models: LikelihoodModel
    true_model: TrueModel
    truth: TruthProcess
    strategies: tuple[Strategy, ...]
    horizon: int
    replications: int = 1
    seed: int = 0
    burn_in: int | None = None  # default: 10% of horizon, capped at 5000
    record_trajectories: bool = False

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))
        if self.horizon < 1:
            raise InvalidInputError("horizon must be >= 1")
        if self.replications < 1:
            raise InvalidInputError("replications must be >= 1")
        if self.burn_in is not None and not (0 <= self.burn_in < self.horizon):
            raise InvalidInputError("burn_in must lie in [0, horizon)")

    @property
    def effective_burn_in(self) -> int:
        if self.burn_in is not None:
            return self.burn_in
        return min(self.horizon // 10, 5000)

    def validate(self) -> None:
        m = self.states.m_states
        if self.models.m_states != m or self.true_model.m_states != m:
            raise InvalidInputError("state-count mismatch between models and state space")
        if self.models.n_agents != self.network.n_agents:
            raise InvalidInputError("agent-count mismatch between models and network")
        if self.models.kind != self.true_model.kind:
            raise InvalidInputError("likelihood and true model families differ")
        if (
            self.models.kind == "finite-alphabet"
            and self.models.n_symbols != self.true_model.n_symbols
        ):
            raise InvalidInputError("alphabet-size mismatch between models")
        if not self.strategies:
            raise InvalidInputError("need at least one strategy")
        diag = validate(self.network)
        if not diag.all_ok:
            raise InvalidInputError(f"network fails validation: {diag.as_dict()}")
        self.truth.validate_for(m)
        for s in self.strategies:
            s.validate_for(m)


@dataclass(frozen=True)
class StrategyResult:
    strategy: Strategy
    accuracy: np.ndarray  # (N,) fraction of steps with strict argmax at the true state
    correct: np.ndarray  # (R, T, N) uint8
    error_events: np.ndarray  # (R, T) uint8
    final_log_beliefs: np.ndarray  # (R, N, M)
    log_belief_trajectories: np.ndarray | None = None  # (R, T, N, M)

    def belief_trajectories(self) -> np.ndarray:
        if self.log_belief_trajectories is None:
            raise InvalidInputError("run was configured without trajectory recording")
        return np.exp(self.log_belief_trajectories)


@dataclass(frozen=True)
class SimResult:
    seed: int
    horizon: int
    replications: int
    burn_in: int
    backend: str
    truth: np.ndarray  # (R, T) int64
    observation_hashes: tuple[str, ...]  # one per replication
    results: tuple[StrategyResult, ...]
    elapsed_seconds: float

    def strategy_result(self, index: int) -> StrategyResult:
        return self.results[index]


def _agent_streams(seed: int, rep: int, n_agents: int):
    return [
        np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep, 1, k)))
        for k in range(n_agents)
    ]


def run(config: SimConfig, backend: str | None = None) -> SimResult:
    """Execute one simulation: all strategies against the same observations.

    Deterministic given (config, backend): the truth process, observations,
    belief recursions, and metrics reproduce bit-for-bit.
    """
    config.validate()
    kern = backend_mod.get_backend(backend)
    n = config.network.n_agents
    m = config.states.m_states
    t_steps = config.horizon
    started = time.perf_counter()

    kernel_params = [s.kernel_params(m) for s in config.strategies]
    truths = np.empty((config.replications, t_steps), dtype=np.int64)
    obs_hashes = []
    per_strategy = [
        {
            "correct": np.empty((config.replications, t_steps, n), dtype=np.uint8),
            "error": np.empty((config.replications, t_steps), dtype=np.uint8),
            "final": np.empty((config.replications, n, m)),
            "traj": (
                np.empty((config.replications, t_steps, n, m))
                if config.record_trajectories
                else None
            ),
        }
        for _ in config.strategies
    ]

    for rep in range(config.replications):
        truth_rng = np.random.default_rng(
            np.random.SeedSequence(config.seed, spawn_key=(rep, 0))
        )
        truth = generate_truth(config.truth, m, t_steps, truth_rng)
        truths[rep] = truth
        obs = observe(config.true_model, truth, n, _agent_streams(config.seed, rep, n))
        obs_hashes.append(hashlib.sha256(np.ascontiguousarray(obs).tobytes()).hexdigest())
        loglik = np.ascontiguousarray(log_likelihood_tensor(config.models, obs))
        for s_idx, (code, p1, p2, trans) in enumerate(kernel_params):
            correct, error, final_lb, traj = kern.run_chain(
                loglik, truth, config.network.weights, code, p1, p2, trans,
                config.record_trajectories,
            )
            slot = per_strategy[s_idx]
            slot["correct"][rep] = correct
            slot["error"][rep] = error
            slot["final"][rep] = final_lb
            if config.record_trajectories:
                slot["traj"][rep] = traj

    results = []
    for s_idx, strat in enumerate(config.strategies):
        slot = per_strategy[s_idx]
        results.append(
            StrategyResult(
                strategy=strat,
                accuracy=slot["correct"].mean(axis=(0, 1)),
                correct=slot["correct"],
                error_events=slot["error"],
                final_log_beliefs=slot["final"],
                log_belief_trajectories=slot["traj"],
            )
        )
    return SimResult(
        seed=config.seed,
        horizon=t_steps,
        replications=config.replications,
        burn_in=config.effective_burn_in,
        backend=kern.name,
        truth=truths,
        observation_hashes=tuple(obs_hashes),
        results=tuple(results),
        elapsed_seconds=time.perf_counter() - started,
    )


def estimate_error_probability(
    result: SimResult,
    burn_in: int | None = None,
    strategy_index: int = 0,
    per_replication: bool = False,
):
    """Post-burn-in rate of the network error event.

    The event fires at a step when any agent weighs any wrong state at
    least as heavily as the true one (ties count as errors).
    """
    if burn_in is None:
        burn_in = result.burn_in
    if not (0 <= burn_in < result.horizon):
        raise InvalidInputError("burn_in must lie in [0, horizon)")
    events = result.results[strategy_index].error_events[:, burn_in:]
    if per_replication:
        return events.mean(axis=1)
    return float(events.mean())


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

SWEEPABLE_KINDS = ("alpha-hmm", "linearized-alpha-hmm", "asl", "hmm")


@dataclass(frozen=True)
class SweepCell:
    strategy_kind: str
    alpha: float
    sigma: float
    cell_index: int
    seed: int


@dataclass(frozen=True)
class SweepRow:
    strategy: str
    alpha: float
    sigma: float
    agent: int
    accuracy: float
    error_prob: float
    horizon: int
    seed: int


@dataclass(frozen=True)
class SweepFailure:
    strategy: str
    alpha: float
    sigma: float
    message: str


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    failures: tuple[SweepFailure, ...]


def _with_sigma(config: SimConfig, sigma: float) -> SimConfig:
    if config.models.kind != "gaussian":
        raise InvalidInputError("sigma sweeps require Gaussian models")
    if not (sigma > 0.0):
        raise InvalidInputError("sigma must be positive")
    return replace(
        config,
        models=GaussianLikelihood(config.models.means, sigma),
        true_model=GaussianTrueModel(config.true_model.means, sigma),
    )


def _cell_strategy(kind: str, alpha: float, m_states: int) -> Strategy:
    """Map the grid value onto the strategy's own parameter."""
    if kind == "alpha-hmm":
        return Strategy.alpha_hmm(alpha)
    if kind == "linearized-alpha-hmm":
        return Strategy.linearized_alpha_hmm(alpha)
    if kind == "asl":
        return Strategy.asl(alpha * m_states)
    if kind == "hmm":
        from .strategies import equal_exit_transition

        return Strategy.hmm(equal_exit_transition(m_states, alpha * (m_states - 1)))
    raise InvalidInputError(
        f"strategy kind {kind!r} has no alpha-grid parameterization; "
        f"sweepable kinds: {SWEEPABLE_KINDS}"
    )


def _derive_cell_seed(master_seed: int, cell_index: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(cell_index,))
    return int(ss.generate_state(1, np.uint64)[0])


def sweep(
    config: SimConfig,
    alpha_grid,
    sigma_list,
    strategy_kinds,
    backend: str | None = None,
    threads: int = 1,
) -> SweepResult:
    """Cartesian (strategy, sigma, alpha) sweep with per-cell derived seeds.

    Cells execute independently (optionally across threads); failed cells
    are recorded and skipped.  Output rows are sorted by (strategy, sigma,
    alpha, agent), so the result is identical for any worker count.
    """
    alpha_grid = [float(a) for a in alpha_grid]
    sigma_list = [float(s) for s in sigma_list]
    strategy_kinds = list(strategy_kinds)
    if not alpha_grid or not sigma_list or not strategy_kinds:
        raise InvalidInputError("alpha_grid, sigma_list, and strategies must be non-empty")
    m = config.states.m_states

    cells = []
    cell_index = 0
    for kind in strategy_kinds:
        for sigma in sigma_list:
            for alpha in alpha_grid:
                cells.append(
                    SweepCell(
                        strategy_kind=kind,
                        alpha=alpha,
                        sigma=sigma,
                        cell_index=cell_index,
                        seed=_derive_cell_seed(config.seed, cell_index),
                    )
                )
                cell_index += 1

    def run_cell(cell: SweepCell):
        strat = _cell_strategy(cell.strategy_kind, cell.alpha, m)
        cell_config = replace(
            _with_sigma(config, cell.sigma),
            strategies=(strat,),
            seed=cell.seed,
            record_trajectories=False,
        )
        result = run(cell_config, backend=backend)
        err = estimate_error_probability(result)
        acc = result.results[0].accuracy
        return [
            SweepRow(
                strategy=cell.strategy_kind,
                alpha=cell.alpha,
                sigma=cell.sigma,
                agent=agent,
                accuracy=float(acc[agent]),
                error_prob=err,
                horizon=config.horizon,
                seed=cell.seed,
            )
            for agent in range(config.network.n_agents)
        ]

    rows: list[SweepRow] = []
    failures: list[SweepFailure] = []

    def guarded(cell: SweepCell):
        try:
            return cell, run_cell(cell), None
        except Exception as exc:  # cell isolation: record and keep sweeping
            return cell, None, f"{type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(guarded, cells))
    else:
        outcomes = [guarded(c) for c in cells]

    for cell, cell_rows, message in outcomes:
        if message is None:
            rows.extend(cell_rows)
        else:
            failures.append(
                SweepFailure(
                    strategy=cell.strategy_kind,
                    alpha=cell.alpha,
                    sigma=cell.sigma,
                    message=message,
                )
            )

    rows.sort(key=lambda r: (r.strategy, r.sigma, r.alpha, r.agent))
    failures.sort(key=lambda f: (f.strategy, f.sigma, f.alpha))
    return SweepResult(rows=tuple(rows), failures=tuple(failures))
