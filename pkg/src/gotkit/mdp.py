"""Transition kernels and the average-reward solver.

The sampler sees the full global state (x, x_hat, phi); the decision
maker sees only x_hat.  Fixing a deterministic decision policy therefore
collapses the two-agent problem into an ordinary fully observed MDP over
flat global states with the binary sample/skip action, which relative
value iteration solves for the long-run average reward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NotStochastic
from .metrics import GotParams, got_table, got_value
from .model import GlobalState, SystemModel, is_unichain  # noqa: F401  (re-export)
from .policies import DecisionPolicy, SamplingPolicy

DEFAULT_EPSILON = 1e-8
DEFAULT_MAX_ITERATIONS = 10**6
_DAMPING = 0.99
_STALL_WINDOW = 1000

# Sweep-kernel status codes.
_CONVERGED = 0
_STALLED = 1
_EXHAUSTED = 2


def dec_pomdp_transition(
    w: GlobalState, a_s: int, a_m: int, model: SystemModel
) -> np.ndarray:
    """One transition row, flat-indexed over (x', x_hat', phi').

    The row factorizes: the source advances from w.x under (phi, a_m), the
    context advances from w.phi, and the estimate either freezes at w.x_hat
    (no sample, or the channel erased it) or snaps to the sampled w.x.
    """
    s = model.num_semantics
    src_row = model.source_dynamics[w.phi, a_m, w.x]
    ctx_row = model.context_dynamics[w.phi]
    estimate = np.zeros(s)
    if a_s:
        estimate[w.x] += model.channel_success
        estimate[w.x_hat] += 1.0 - model.channel_success
    else:
        estimate[w.x_hat] = 1.0
    # C-order ravel of (x', x_hat', phi') matches StateSpace.flat.
    return np.einsum("u,e,r->uer", src_row, estimate, ctx_row).reshape(-1)


def observation_maps(w: GlobalState) -> tuple[GlobalState, int]:
    """What each agent sees in state w: (sampler view, decision-maker view)."""
    return w, w.x_hat


def reward(w: GlobalState, a_s: int, params: GotParams, sampling_cost: float) -> float:
    """Per-slot reward: negative goal cost minus the sampling surcharge."""
    return -got_value(w.x, w.phi, w.x_hat, params) - sampling_cost * a_s


@dataclass(frozen=True)
class InducedMdp:
    """Fully observed MDP over flat global states with actions {skip, sample}.

    transition has shape (N, 2, N), reward_matrix shape (N, 2).
    """

    transition: np.ndarray
    reward_matrix: np.ndarray

    def __post_init__(self) -> None:
        n = self.reward_matrix.shape[0]
        if self.transition.shape != (n, 2, n) or self.reward_matrix.shape != (n, 2):
            raise ValueError(
                f"inconsistent shapes: transition {self.transition.shape}, "
                f"reward {self.reward_matrix.shape}"
            )
        row_sums = self.transition.sum(axis=2)
        if np.any(np.abs(row_sums - 1.0) > 1e-9):
            worst = np.unravel_index(np.argmax(np.abs(row_sums - 1.0)), row_sums.shape)
            raise NotStochastic(
                f"transition row (state={worst[0]}, action={worst[1]}) "
                f"sums to {row_sums[worst]!r}"
            )

    @property
    def num_states(self) -> int:
        return self.reward_matrix.shape[0]

    def policy_chain(self, sampler: SamplingPolicy) -> np.ndarray:
        """Closed-loop chain matrix under a fixed sampling policy."""
        idx = np.arange(self.num_states)
        return self.transition[idx, sampler.table[idx].astype(np.int64), :]


def induce_mdp(model: SystemModel, pi_a: DecisionPolicy) -> InducedMdp:
    """Collapse the two-agent problem for a fixed decision policy.

    Because the decision maker's observation is exactly x_hat, its action in
    state w is pi_a(w.x_hat); each transition row below is literally
    dec_pomdp_transition evaluated at that action.
    """
    if pi_a.table.shape[0] != model.num_semantics:
        raise ValueError(
            f"decision policy covers {pi_a.table.shape[0]} estimates, "
            f"model has {model.num_semantics}"
        )
    space = model.space
    n = space.size
    transition = np.empty((n, 2, n))
    for w in space.states():
        i = space.flat(w)
        a_m = pi_a(w.x_hat)
        transition[i, 0] = dec_pomdp_transition(w, 0, a_m, model)
        transition[i, 1] = dec_pomdp_transition(w, 1, a_m, model)

    params = GotParams(costs=model.costs, decision_policy=pi_a)
    got_flat = got_table(params).reshape(-1)
    reward_matrix = np.stack([-got_flat, -got_flat - model.sampling_cost], axis=1)
    return InducedMdp(transition=transition, reward_matrix=reward_matrix)


@dataclass(frozen=True)
class RviSolution:
    """Output of rvi_solve: optimal sampler and its long-run average reward.

    theta_star is the average REWARD (non-positive here); the average cost
    is -theta_star.  values is the relative value vector with the reference
    state pinned at zero (up to the convergence tolerance).
    """

    sampler: SamplingPolicy
    theta_star: float
    values: np.ndarray
    iterations: int


def _sweep_kernel_source(t0, t1, r0, r1, v, ref, epsilon, max_sweeps, stall_window):
    """Relative-value-iteration sweeps until convergence, stall, or budget.

    Returns (v, g, sweeps_used, status).  Stall means the span seminorm has
    not improved for stall_window consecutive sweeps (a periodicity
    symptom); stall_window <= 0 disables detection.
    """
    g = 0.0
    best_span = np.inf
    since_improved = 0
    for it in range(max_sweeps):
        q0 = r0 + t0 @ v
        q1 = r1 + t1 @ v
        backup = np.maximum(q0, q1)
        g = backup[ref]
        v_new = backup - g
        diff = v_new - v
        span = diff.max() - diff.min()
        v = v_new
        if span <= epsilon:
            return v, g, it + 1, _CONVERGED
        if span < best_span:
            best_span = span
            since_improved = 0
        else:
            since_improved += 1
            if 0 < stall_window <= since_improved:
                return v, g, it + 1, _STALLED
    return v, g, max_sweeps, _EXHAUSTED


try:  # pragma: no cover - exercised via whichever kernel is active
    import numba

    _sweep_kernel = numba.njit(cache=True)(_sweep_kernel_source)
except ImportError:  # pragma: no cover
    _sweep_kernel = _sweep_kernel_source


def _action_values(mdp: InducedMdp, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q0 = mdp.reward_matrix[:, 0] + mdp.transition[:, 0, :] @ values
    q1 = mdp.reward_matrix[:, 1] + mdp.transition[:, 1, :] @ values
    return q0, q1


def rvi_solve(
    mdp: InducedMdp,
    epsilon: float = DEFAULT_EPSILON,
    ref_state: int = 0,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> RviSolution:
    """Solve the induced MDP for the average-reward-optimal sampler.

    Iterates the relative value backup with the reference state pinned at
    zero until the span of successive differences falls below epsilon.  If
    the span stalls (periodic structure), the remaining budget runs on the
    damped kernel tau*T + (1-tau)*I, which keeps the same average reward
    and greedy actions; the returned values are rescaled by tau so they
    satisfy the ORIGINAL optimality equation to the same residual.
    """
    n = mdp.num_states
    if not 0 <= ref_state < n:
        raise IndexError(f"ref_state {ref_state} out of range for {n} states")
    t0 = np.ascontiguousarray(mdp.transition[:, 0, :])
    t1 = np.ascontiguousarray(mdp.transition[:, 1, :])
    r0 = np.ascontiguousarray(mdp.reward_matrix[:, 0])
    r1 = np.ascontiguousarray(mdp.reward_matrix[:, 1])
    v = np.zeros(n)

    v, g, used, status = _sweep_kernel(
        t0, t1, r0, r1, v, ref_state, epsilon, max_iterations, _STALL_WINDOW
    )
    iterations = used
    if status == _STALLED and iterations < max_iterations:
        tau = _DAMPING
        eye = np.eye(n)
        t0d = np.ascontiguousarray(tau * t0 + (1.0 - tau) * eye)
        t1d = np.ascontiguousarray(tau * t1 + (1.0 - tau) * eye)
        v, g, used, status = _sweep_kernel(
            t0d, t1d, r0, r1, v, ref_state, epsilon, max_iterations - iterations, 0
        )
        iterations += used
        v = tau * v
    if status != _CONVERGED:
        raise NoConvergence(
            f"relative value iteration did not reach span {epsilon:g} within "
            f"{max_iterations} sweeps (periodic or disconnected chain structure?)"
        )

    q0, q1 = _action_values(mdp, v)
    # Sample only on strict improvement: ties keep the radio quiet.
    table = (q1 > q0).astype(np.int8)
    return RviSolution(
        sampler=SamplingPolicy(table),
        theta_star=float(g),
        values=v,
        iterations=iterations,
    )


def bellman_residual(mdp: InducedMdp, solution: RviSolution) -> float:
    """Sup-norm residual of the average-reward optimality equation."""
    q0, q1 = _action_values(mdp, solution.values)
    backup = np.maximum(q0, q1)
    return float(np.max(np.abs(solution.theta_star + solution.values - backup)))
