"""Joint optimization of the decision policy and the sampling policy.

The decision-policy space is tiny (|A|^|S| tables), so the joint optimum
is found by brute force: solve the induced MDP for every candidate table
and keep the best average reward.  A greedy single-slot policy built from
the expected goal cost serves as the benchmark decision maker.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Iterator

import numpy as np

from .errors import EnumerationTooLarge, NoConvergence
from .mdp import DEFAULT_EPSILON, DEFAULT_MAX_ITERATIONS, induce_mdp, rvi_solve
from .model import CostModel, SystemModel
from .policies import DecisionPolicy, SamplingPolicy

DEFAULT_ENUMERATION_CAP = 10**6


def greedy_decision_policy(costs: CostModel, context_dist) -> DecisionPolicy:
    """Minimize the expected single-slot goal cost for each estimate value.

    Acts as if the estimate were the truth and the context were drawn from
    context_dist; ignores dynamics entirely.  Ties go to the LARGER
    actuation index (the more aggressive response).
    """
    dist = np.asarray(context_dist, dtype=np.float64)
    num_contexts, num_semantics = costs.status_inherent.shape
    if dist.shape != (num_contexts,):
        raise ValueError(
            f"context_dist has shape {dist.shape}, expected ({num_contexts},)"
        )
    if np.any(dist < 0) or abs(dist.sum() - 1.0) > 1e-9:
        raise ValueError("context_dist must be a probability vector")

    # expected[x_hat, a] = sum_phi dist[phi] * ([C1[phi][x_hat] - C2[a]]^+ + C3[a])
    margin = costs.status_inherent.T[:, None, :] - costs.actuation_gain[None, :, None]
    per_context = np.maximum(margin, 0.0) + costs.actuation_inherent[None, :, None]
    expected = per_context @ dist

    num_actuations = costs.actuation_gain.shape[0]
    table = [
        num_actuations - 1 - int(np.argmin(expected[x_hat][::-1]))
        for x_hat in range(num_semantics)
    ]
    return DecisionPolicy(table)


def enumerate_decision_policies(
    num_semantics: int,
    num_actuations: int,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> Iterator[DecisionPolicy]:
    """All |A|^|S| deterministic tables in lexicographic order."""
    count = num_actuations**num_semantics
    if count > cap:
        raise EnumerationTooLarge(
            f"{num_actuations}^{num_semantics} = {count} decision policies "
            f"exceeds the cap of {cap}"
        )
    for table in product(range(num_actuations), repeat=num_semantics):
        yield DecisionPolicy(table)


@dataclass(frozen=True)
class CandidateRecord:
    """Audit row for one enumerated decision policy."""

    decision: DecisionPolicy
    theta_star: float
    iterations: int


@dataclass(frozen=True)
class CodesignResult:
    """Jointly optimal pair plus the full per-candidate audit trail.

    theta_star is the best average REWARD over all candidates; the
    minimized average cost is -theta_star.  Candidate ties are resolved
    toward the lexicographically smallest decision table.
    """

    best_decision: DecisionPolicy
    best_sampler: SamplingPolicy
    theta_star: float
    per_candidate: list[CandidateRecord]


def _solve_candidate(args) -> tuple[float, int, np.ndarray]:
    model, table, epsilon, max_iterations = args
    solution = rvi_solve(
        induce_mdp(model, DecisionPolicy(table)),
        epsilon=epsilon,
        max_iterations=max_iterations,
    )
    return solution.theta_star, solution.iterations, np.asarray(solution.sampler.table)


def brute_force_codesign(
    model: SystemModel,
    epsilon: float = DEFAULT_EPSILON,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    cap: int = DEFAULT_ENUMERATION_CAP,
    workers: int = 1,
) -> CodesignResult:
    """Solve the induced MDP for every decision table and keep the best.

    workers > 1 fans candidates out to a process pool; results are reduced
    in enumeration order, so the output is identical to a sequential run.
    """
    candidates = list(
        enumerate_decision_policies(model.num_semantics, model.num_actuations, cap=cap)
    )
    tasks = [(model, pi.as_tuple(), epsilon, max_iterations) for pi in candidates]

    solved: list[tuple[float, int, np.ndarray]] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(tasks) // (workers * 4))
            iterator = pool.map(_solve_candidate, tasks, chunksize=chunk)
            solved = _collect(iterator, candidates)
    else:
        solved = _collect(map(_solve_candidate, tasks), candidates)

    per_candidate = [
        CandidateRecord(decision=pi, theta_star=theta, iterations=iters)
        for pi, (theta, iters, _) in zip(candidates, solved)
    ]
    best_index = 0
    for i in range(1, len(solved)):
        if solved[i][0] > solved[best_index][0]:
            best_index = i
    return CodesignResult(
        best_decision=candidates[best_index],
        best_sampler=SamplingPolicy(solved[best_index][2]),
        theta_star=solved[best_index][0],
        per_candidate=per_candidate,
    )


def _collect(iterator, candidates) -> list[tuple[float, int, np.ndarray]]:
    out: list[tuple[float, int, np.ndarray]] = []
    index = 0
    iterator = iter(iterator)
    while True:
        try:
            result = next(iterator)
        except StopIteration:
            return out
        except NoConvergence as exc:
            table = candidates[index].as_tuple()
            raise NoConvergence(
                f"candidate {index} with decision table {table} failed: {exc}"
            ) from exc
        out.append(result)
        index += 1
