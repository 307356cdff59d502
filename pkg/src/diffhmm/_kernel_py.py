"""Pure-numpy simulation kernel: the fallback when the compiled extension
is unavailable.

Semantics are identical to ``_kernel``: beliefs are carried in the log
domain and renormalized every round, one synchronous inference +
aggregation round per step, ties counting against the agent.  The two
kernels may differ in the last couple of floating-point bits because
numpy's reductions sum in a different order than the C loops.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericFailureError

name = "python"
compiled = False


def _lognormalize_rows(a: np.ndarray) -> np.ndarray:
    a -= a.max(axis=1, keepdims=True)
    a -= np.log(np.exp(a).sum(axis=1, keepdims=True))
    return a


def run_chain(
    loglik: np.ndarray,
    truth: np.ndarray,
    weights: np.ndarray,
    code: int,
    p1: float,
    p2: float,
    transition: np.ndarray,
    record_traj: bool,
):
    """Evolve all agents' beliefs over a precomputed observation stream.

    Parameters
    ----------
    loglik : (T, N, M) float64
        Per-step, per-agent log-likelihood of the realized observation
        under each candidate state.
    truth : (T,) int64
        True-state index at each step.
    weights : (N, N) float64
        Left-stochastic combination matrix, ``weights[l, k]`` = weight k
        places on l.
    code, p1, p2, transition
        Strategy opcode and parameters (see ``strategies.Strategy.kernel_params``).
    record_traj : bool
        Record the post-aggregation log-beliefs at every step.

    Returns
    -------
    correct : (T, N) uint8 -- strict-argmax correctness per agent per step
    net_error : (T,) uint8 -- 1 when any agent weighs a wrong state at
        least as heavily as the true one
    log_beliefs : (N, M) float64 -- final log-beliefs
    traj : (T, N, M) float64 or None
    """
    loglik = np.ascontiguousarray(loglik, dtype=np.float64)
    t_steps, n_agents, m_states = loglik.shape
    truth = np.asarray(truth, dtype=np.int64)
    w_t = np.ascontiguousarray(weights.T)

    lb = np.full((n_agents, m_states), -np.log(m_states))
    correct = np.zeros((t_steps, n_agents), dtype=np.uint8)
    net_error = np.zeros(t_steps, dtype=np.uint8)
    traj = np.empty((t_steps, n_agents, m_states)) if record_traj else None

    one_less = 1.0 - p1 * m_states  # alpha-hmm prior mixing weight
    keep = 1.0 - p1  # generalized prior exponent

    for i in range(t_steps):
        ll = loglik[i]
        if code == 0:  # bayes
            lpsi = lb + ll
        elif code == 1:  # alpha-hmm
            lpsi = np.log(one_less * np.exp(lb) + p1) + ll
        elif code == 2:  # hmm
            with np.errstate(divide="ignore"):
                lpsi = np.log(np.exp(lb) @ transition) + ll
        else:  # generalized
            lpsi = keep * lb + p2 * ll
        _lognormalize_rows(lpsi)
        lb = w_t @ lpsi
        _lognormalize_rows(lb)
        if not np.all(np.isfinite(lb.max(axis=1))):
            raise NumericFailureError(f"non-finite belief at step {i}", step=i)

        t = truth[i]
        ge = lb >= lb[:, t][:, None]
        ge[:, t] = False
        agent_err = ge.any(axis=1)
        correct[i] = ~agent_err
        net_error[i] = agent_err.any()
        if record_traj:
            traj[i] = lb

    return correct, net_error, lb, traj
