"""Closed-loop Monte Carlo simulation and exact policy evaluation.

Simulation follows a fixed within-slot order: the sampler acts, the
channel fires, the delivered content becomes NEXT slot's estimate, the
decision and the slot cost both use the current estimate, then source
and context advance and the age trackers step.  That order makes the
per-slot cost agree with the induced MDP's reward on the current global
state, which is what lets the exact evaluator serve as an oracle for
long simulations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from . import _engine
from .errors import NotUnichain
from .mdp import induce_mdp
from .metrics import GotParams, got_table
from .model import SystemModel, recurrent_classes, stationary_distribution
from .policies import DecisionPolicy, SamplingPolicy


@dataclass(frozen=True)
class Uniform:
    """Sample every delta-th slot, starting at slot 0."""

    delta: int

    def __post_init__(self) -> None:
        if self.delta < 1:
            raise ValueError("delta must be >= 1")


@dataclass(frozen=True)
class AgeAware:
    """Sample whenever the age of information exceeds the threshold."""

    threshold: int

    def __post_init__(self) -> None:
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")


@dataclass(frozen=True)
class ChangeAware:
    """Sample whenever the source state differs from the previous slot's."""


@dataclass(frozen=True)
class AoiiOptimal:
    """Sample whenever the true state and the estimate disagree."""


@dataclass(frozen=True)
class Tabular:
    """Sample per an explicit table over flat global states."""

    policy: SamplingPolicy


SamplerKind = Union[Uniform, AgeAware, ChangeAware, AoiiOptimal, Tabular]


@dataclass(frozen=True)
class SlotObservation:
    """What a sampling rule may look at in one slot."""

    t: int
    x: int
    x_hat: int
    phi: int
    aoi: int
    flat: int


class _UniformRule:
    def __init__(self, delta: int) -> None:
        self.delta = delta

    def decide(self, obs: SlotObservation) -> int:
        return 1 if obs.t % self.delta == 0 else 0


class _AgeAwareRule:
    def __init__(self, threshold: int) -> None:
        self.threshold = threshold

    def decide(self, obs: SlotObservation) -> int:
        return 1 if obs.aoi > self.threshold else 0


class _ChangeAwareRule:
    def __init__(self) -> None:
        self.prev_x: int | None = None

    def decide(self, obs: SlotObservation) -> int:
        fire = self.prev_x is not None and obs.x != self.prev_x
        self.prev_x = obs.x
        return 1 if fire else 0


class _MismatchRule:
    def decide(self, obs: SlotObservation) -> int:
        return 1 if obs.x != obs.x_hat else 0


class _TabularRule:
    def __init__(self, policy: SamplingPolicy) -> None:
        self.policy = policy

    def decide(self, obs: SlotObservation) -> int:
        return self.policy(obs.flat)


def make_benchmark(kind: SamplerKind):
    """Stateful per-slot sampling rule for the given kind."""
    if isinstance(kind, Uniform):
        return _UniformRule(kind.delta)
    if isinstance(kind, AgeAware):
        return _AgeAwareRule(kind.threshold)
    if isinstance(kind, ChangeAware):
        return _ChangeAwareRule()
    if isinstance(kind, AoiiOptimal):
        return _MismatchRule()
    if isinstance(kind, Tabular):
        return _TabularRule(kind.policy)
    raise TypeError(f"unknown sampler kind: {kind!r}")


@dataclass(frozen=True)
class Trace:
    """Per-slot record of the first trace_slots simulated slots."""

    t: np.ndarray
    x: np.ndarray
    x_hat: np.ndarray
    phi: np.ndarray
    a_s: np.ndarray
    a_a: np.ndarray
    h: np.ndarray
    aoi: np.ndarray
    aoci: np.ndarray
    aoii: np.ndarray
    got: np.ndarray
    slot_cost: np.ndarray

    def __len__(self) -> int:
        return self.t.shape[0]


@dataclass(frozen=True)
class TraceStats:
    """Summary of one simulated trajectory."""

    horizon: int
    avg_cost: float
    sampling_rate: float
    seed: int
    trace: Trace | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.sampling_rate <= 1.0:
            raise ValueError(f"sampling_rate {self.sampling_rate} outside [0, 1]")
        if self.avg_cost < 0.0:
            raise ValueError(f"avg_cost {self.avg_cost} negative")


def _sampler_dispatch(kind: SamplerKind, num_states: int):
    if isinstance(kind, Uniform):
        return _engine.UNIFORM, kind.delta, np.zeros(1, dtype=np.int8)
    if isinstance(kind, AgeAware):
        return _engine.AGE_AWARE, kind.threshold, np.zeros(1, dtype=np.int8)
    if isinstance(kind, ChangeAware):
        return _engine.CHANGE_AWARE, 0, np.zeros(1, dtype=np.int8)
    if isinstance(kind, AoiiOptimal):
        return _engine.MISMATCH, 0, np.zeros(1, dtype=np.int8)
    if isinstance(kind, Tabular):
        table = kind.policy.table
        if table.shape[0] != num_states:
            raise ValueError(
                f"tabular sampler covers {table.shape[0]} states, model has {num_states}"
            )
        return _engine.TABULAR, 0, np.ascontiguousarray(table, dtype=np.int8)
    raise TypeError(f"unknown sampler kind: {kind!r}")


def simulate(
    model: SystemModel,
    sampler: SamplerKind,
    pi_a: DecisionPolicy,
    horizon: int,
    seed: int,
    trace_slots: int = 0,
    engine: str = "auto",
) -> TraceStats:
    """Run the closed loop for `horizon` slots under one seed.

    The generator is counter-based (Philox keyed by the seed) and all
    uniforms are pre-drawn in a fixed layout (two initialization draws,
    then one channel/source/context triple per slot), so every sampler
    kind consumes identical randomness and reruns are bit-identical.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not 0 <= trace_slots <= horizon:
        raise ValueError("trace_slots must lie in [0, horizon]")
    if engine not in ("auto", "numba", "python"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "numba" and not _engine.HAS_NUMBA:
        raise RuntimeError("numba engine requested but numba is not importable")

    space = model.space
    code, param, table = _sampler_dispatch(sampler, space.size)
    if pi_a.table.shape[0] != model.num_semantics:
        raise ValueError("decision policy length does not match num_semantics")

    rng = np.random.Generator(np.random.Philox(key=seed))
    init = rng.random(2)
    u = rng.random((horizon, 3))

    if model.initial_state is not None:
        x0, x_hat0, phi0 = model.initial_state
    else:
        x0 = int(init[0] * model.num_semantics)
        phi0 = int(init[1] * model.num_contexts)
        x_hat0 = x0

    params = GotParams(costs=model.costs, decision_policy=pi_a)
    got_flat = np.ascontiguousarray(got_table(params).reshape(-1))
    src_cum = np.ascontiguousarray(np.cumsum(model.source_dynamics, axis=-1))
    ctx_cum = np.ascontiguousarray(np.cumsum(model.context_dynamics, axis=-1))

    n_trace = trace_slots
    trace_int = [np.empty(n_trace, dtype=np.int64) for _ in range(9)]
    trace_float = [np.empty(n_trace, dtype=np.float64) for _ in range(2)]

    kernel = _engine.run_slots_python
    if engine == "numba" or (engine == "auto" and _engine.HAS_NUMBA):
        kernel = _engine.run_slots_numba
    total_cost, total_samples = kernel(
        code,
        param,
        table,
        np.ascontiguousarray(pi_a.table, dtype=np.int64),
        src_cum,
        ctx_cum,
        got_flat,
        model.channel_success,
        model.sampling_cost,
        x0,
        x_hat0,
        phi0,
        u,
        *trace_int,
        *trace_float,
    )

    trace = None
    if trace_slots > 0:
        trace = Trace(
            t=np.arange(trace_slots, dtype=np.int64),
            x=trace_int[0],
            x_hat=trace_int[1],
            phi=trace_int[2],
            a_s=trace_int[3],
            a_a=trace_int[4],
            h=trace_int[5],
            aoi=trace_int[6],
            aoci=trace_int[7],
            aoii=trace_int[8],
            got=trace_float[0],
            slot_cost=trace_float[1],
        )
    return TraceStats(
        horizon=horizon,
        avg_cost=total_cost / horizon,
        sampling_rate=total_samples / horizon,
        seed=seed,
        trace=trace,
    )


def _reachable_subset(chain: np.ndarray, start: int) -> np.ndarray:
    order = breadth_first_order(
        csr_matrix(chain > 0.0), start, directed=True, return_predecessors=False
    )
    return np.sort(np.asarray(order))


def exact_average_cost(
    model: SystemModel,
    pi_s: SamplingPolicy,
    pi_a: DecisionPolicy,
    multichain: str = "error",
) -> tuple[float, float]:
    """Long-run (average cost, sampling rate) of a fixed tabular pair.

    Solves the stationary distribution of the closed-loop chain.  When the
    model carries an initial_state, the chain is first restricted to the
    states reachable from it (unreachable closed classes cannot matter).
    If several recurrent classes remain: multichain="error" raises
    NotUnichain; multichain="best" returns the cheapest class, which is the
    right scoring when comparing against an optimizer that may choose where
    to settle.
    """
    if multichain not in ("error", "best"):
        raise ValueError(f"unknown multichain mode {multichain!r}")
    induced = induce_mdp(model, pi_a)
    chain = induced.policy_chain(pi_s)
    got_flat = got_table(GotParams(model.costs, pi_a)).reshape(-1)
    sample_flag = pi_s.table.astype(np.float64)
    cost_vec = got_flat + model.sampling_cost * sample_flag

    if model.initial_state is not None:
        keep = _reachable_subset(chain, model.space.flat(model.initial_state))
        chain = chain[np.ix_(keep, keep)]
        cost_vec = cost_vec[keep]
        sample_flag = sample_flag[keep]

    classes = recurrent_classes(chain)
    if len(classes) == 1:
        mu = stationary_distribution(chain)
        return float(mu @ cost_vec), float(mu @ sample_flag)
    if multichain == "error":
        raise NotUnichain(
            f"closed loop has {len(classes)} recurrent classes; "
            "pass multichain='best' to score the cheapest one"
        )
    best: tuple[float, float] | None = None
    for members in classes:
        sub = chain[np.ix_(members, members)]
        mu = stationary_distribution(sub)
        cand = (float(mu @ cost_vec[members]), float(mu @ sample_flag[members]))
        if best is None or cand[0] < best[0]:
            best = cand
    assert best is not None
    return best


@dataclass(frozen=True)
class SweepSpec:
    """What to evaluate along the cost-versus-sampling-rate frontier."""

    uniform_deltas: tuple[int, ...] = ()
    age_thresholds: tuple[int, ...] = ()
    include_change_aware: bool = False
    include_mismatch: bool = False
    horizon: int = 10**6
    seeds: tuple[int, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class FrontierPoint:
    """One plotted point: a policy at one parameter setting.

    Monte Carlo rows carry the seed count and the standard error of the
    per-seed cost means; the exact co-design row has horizon=0, seeds=0,
    stderr 0.
    """

    label: str
    param: int | None
    sampling_rate: float
    avg_cost: float
    stderr_cost: float
    horizon: int
    seeds: int


def _monte_carlo_point(
    model: SystemModel,
    kind: SamplerKind,
    pi_a: DecisionPolicy,
    label: str,
    param: int | None,
    horizon: int,
    seeds: tuple[int, ...],
) -> FrontierPoint:
    costs = np.empty(len(seeds))
    rates = np.empty(len(seeds))
    for i, seed in enumerate(seeds):
        stats = simulate(model, kind, pi_a, horizon, seed)
        costs[i] = stats.avg_cost
        rates[i] = stats.sampling_rate
    stderr = float(np.std(costs, ddof=1) / np.sqrt(len(seeds))) if len(seeds) > 1 else 0.0
    return FrontierPoint(
        label=label,
        param=param,
        sampling_rate=float(rates.mean()),
        avg_cost=float(costs.mean()),
        stderr_cost=stderr,
        horizon=horizon,
        seeds=len(seeds),
    )


def frontier_sweep(
    model: SystemModel,
    pi_a: DecisionPolicy,
    spec: SweepSpec,
    codesign_pair: tuple[SamplingPolicy, DecisionPolicy] | None = None,
) -> list[FrontierPoint]:
    """Benchmark rows (Monte Carlo means over seeds) plus an exact co-design row.

    Benchmarks all use pi_a; the co-design row scores its own pair with the
    exact evaluator.  Row order: uniform sweeps, age sweeps, change-aware,
    mismatch-triggered, co-design.
    """
    points: list[FrontierPoint] = []
    mc_requested = (
        spec.uniform_deltas
        or spec.age_thresholds
        or spec.include_change_aware
        or spec.include_mismatch
    )
    if mc_requested and not spec.seeds:
        raise ValueError("sweep spec requests Monte Carlo rows but lists no seeds")

    for delta in spec.uniform_deltas:
        points.append(
            _monte_carlo_point(
                model, Uniform(delta), pi_a, "uniform", delta, spec.horizon, spec.seeds
            )
        )
    for threshold in spec.age_thresholds:
        points.append(
            _monte_carlo_point(
                model,
                AgeAware(threshold),
                pi_a,
                "age",
                threshold,
                spec.horizon,
                spec.seeds,
            )
        )
    if spec.include_change_aware:
        points.append(
            _monte_carlo_point(
                model, ChangeAware(), pi_a, "change", None, spec.horizon, spec.seeds
            )
        )
    if spec.include_mismatch:
        points.append(
            _monte_carlo_point(
                model, AoiiOptimal(), pi_a, "aoii", None, spec.horizon, spec.seeds
            )
        )
    if codesign_pair is not None:
        sampler, decision = codesign_pair
        cost, rate = exact_average_cost(model, sampler, decision, multichain="best")
        points.append(
            FrontierPoint(
                label="codesign",
                param=None,
                sampling_rate=rate,
                avg_cost=cost,
                stderr_cost=0.0,
                horizon=0,
                seeds=0,
            )
        )
    return points
