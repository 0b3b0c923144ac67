"""System description: state spaces, transition tensors, channel, and costs.

The validated :class:`SystemModel` is the single source of truth consumed by
every solver and simulator in this package.  All indices are 0-based: semantic
states ``0..num_semantics-1``, contexts ``0..num_contexts-1``, actuations
``0..num_actuations-1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    ChannelOutOfRange,
    DimensionMismatch,
    NegativeEntry,
    NotStochastic,
    NotUnichain,
)

ROW_SUM_TOL = 1e-9


class GlobalState(NamedTuple):
    """Global status triple: true semantics, receiver estimate, context."""

    x: int
    x_hat: int
    phi: int


@dataclass(frozen=True)
class StateSpace:
    """Canonical dense indexing of the global state space.

    The flat index is row-major over (x, x_hat, phi), i.e.
    ``flat = (x * S + x_hat) * V + phi`` for S semantic states and V contexts.
    """

    num_semantics: int
    num_contexts: int

    @property
    def size(self) -> int:
        return self.num_semantics * self.num_semantics * self.num_contexts

    def flat(self, state: GlobalState) -> int:
        x, x_hat, phi = state
        s, v = self.num_semantics, self.num_contexts
        if not (0 <= x < s and 0 <= x_hat < s and 0 <= phi < v):
            raise IndexError(f"state {state!r} out of bounds for {self}")
        return (x * s + x_hat) * v + phi

    def unflat(self, index: int) -> GlobalState:
        s, v = self.num_semantics, self.num_contexts
        if not 0 <= index < self.size:
            raise IndexError(f"flat index {index} out of bounds for {self}")
        index, phi = divmod(index, v)
        x, x_hat = divmod(index, s)
        return GlobalState(x, x_hat, phi)

    def states(self) -> Iterator[GlobalState]:
        for i in range(self.size):
            yield self.unflat(i)


@dataclass(frozen=True)
class CostModel:
    """Cost structure of the status-update loop.

    status_inherent    -- matrix C1[phi][x]: inherent cost of a semantics-
                          context pair before any actuation takes effect.
    actuation_gain     -- vector C2[a]: severity reduction bought by actuation a.
    actuation_inherent -- vector C3[a]: resources consumed by actuation a.
    """

    status_inherent: np.ndarray
    actuation_gain: np.ndarray
    actuation_inherent: np.ndarray


@dataclass(frozen=True)
class SystemModel:
    """Validated stochastic description of source, context, channel, and costs.

    Immutable after validation (all arrays are frozen); safe to share
    read-only across concurrent solver workers.
    """

    num_semantics: int
    num_contexts: int
    num_actuations: int
    source_dynamics: np.ndarray  # [context][actuation][from][to]
    context_dynamics: np.ndarray  # [context][context]
    channel_success: float
    costs: CostModel
    sampling_cost: float
    initial_state: GlobalState | None = None

    @property
    def space(self) -> StateSpace:
        return StateSpace(self.num_semantics, self.num_contexts)


def _as_float_array(name: str, value, shape: tuple[int, ...]) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f"{name}: not a numeric array ({exc})") from exc
    if arr.shape != shape:
        raise DimensionMismatch(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NegativeEntry(f"{name}: contains non-finite entries")
    if np.any(arr < 0):
        raise NegativeEntry(f"{name}: contains negative entries")
    return arr


def _check_stochastic(name: str, rows: np.ndarray) -> None:
    sums = rows.sum(axis=-1)
    worst = float(np.max(np.abs(sums - 1.0)))
    if worst > ROW_SUM_TOL:
        raise NotStochastic(
            f"{name}: row sums deviate from 1 by up to {worst:.3e} "
            f"(tolerance {ROW_SUM_TOL:.0e}); refusing to renormalize"
        )


def validate_model(
    *,
    num_semantics: int,
    num_contexts: int,
    num_actuations: int,
    source_dynamics,
    context_dynamics,
    channel_success: float,
    status_inherent,
    actuation_gain,
    actuation_inherent,
    sampling_cost: float,
    initial_state: GlobalState | None = None,
) -> SystemModel:
    """Validate raw model fields and return an immutable SystemModel.

    Raises DimensionMismatch, NotStochastic, NegativeEntry, or
    ChannelOutOfRange; never repairs input silently.
    """
    s, v, a = int(num_semantics), int(num_contexts), int(num_actuations)
    for label, n in (("num_semantics", s), ("num_contexts", v), ("num_actuations", a)):
        if n < 1:
            raise DimensionMismatch(f"{label} must be a positive integer, got {n}")

    p_src = _as_float_array("source_dynamics", source_dynamics, (v, a, s, s))
    p_ctx = _as_float_array("context_dynamics", context_dynamics, (v, v))
    _check_stochastic("source_dynamics", p_src)
    _check_stochastic("context_dynamics", p_ctx)

    p_s = float(channel_success)
    if not np.isfinite(p_s) or not 0.0 <= p_s <= 1.0:
        raise ChannelOutOfRange(f"channel_success must lie in [0, 1], got {p_s}")

    c1 = _as_float_array("status_inherent", status_inherent, (v, s))
    c2 = _as_float_array("actuation_gain", actuation_gain, (a,))
    c3 = _as_float_array("actuation_inherent", actuation_inherent, (a,))

    c_s = float(sampling_cost)
    if not np.isfinite(c_s) or c_s < 0:
        raise NegativeEntry(f"sampling_cost must be finite and >= 0, got {c_s}")

    if initial_state is not None:
        x0, xh0, ph0 = initial_state
        if not (0 <= x0 < s and 0 <= xh0 < s and 0 <= ph0 < v):
            raise DimensionMismatch(f"initial_state {initial_state!r} out of bounds")
        initial_state = GlobalState(int(x0), int(xh0), int(ph0))

    for arr in (p_src, p_ctx, c1, c2, c3):
        arr.setflags(write=False)

    return SystemModel(
        num_semantics=s,
        num_contexts=v,
        num_actuations=a,
        source_dynamics=p_src,
        context_dynamics=p_ctx,
        channel_success=p_s,
        costs=CostModel(c1, c2, c3),
        sampling_cost=c_s,
        initial_state=initial_state,
    )


def recurrent_classes(transition: np.ndarray) -> list[list[int]]:
    """Recurrent (closed communicating) classes of a row-stochastic matrix.

    Strongly-connected-component analysis on the positive-probability digraph;
    a class is recurrent iff no edge leaves it.  Classes are returned sorted by
    their smallest state index.
    """
    p = np.asarray(transition, dtype=np.float64)
    n = p.shape[0]
    if p.shape != (n, n):
        raise DimensionMismatch(f"transition must be square, got {p.shape}")
    n_comp, labels = connected_components(
        csr_matrix(p > 0.0), directed=True, connection="strong"
    )
    closed: list[list[int]] = []
    for comp in range(n_comp):
        members = np.flatnonzero(labels == comp)
        outside = labels != comp
        if not np.any(p[np.ix_(members, np.flatnonzero(outside))] > 0.0):
            closed.append([int(i) for i in members])
    closed.sort(key=lambda c: c[0])
    return closed


def is_unichain(transition: np.ndarray) -> bool:
    """True iff the chain has exactly one recurrent class."""
    return len(recurrent_classes(transition)) == 1


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """Stationary distribution of a unichain row-stochastic matrix.

    Solves the linear stationarity system mu @ P = mu, sum(mu) = 1.
    Raises NotUnichain when the chain has several recurrent classes (the
    stationary distribution would not be unique).
    """
    p = np.asarray(transition, dtype=np.float64)
    classes = recurrent_classes(p)
    if len(classes) != 1:
        raise NotUnichain(
            f"chain has {len(classes)} recurrent classes {classes}; "
            "stationary distribution is not unique"
        )
    members = classes[0]
    sub = p[np.ix_(members, members)]
    k = len(members)
    system = np.vstack([sub.T - np.eye(k), np.ones((1, k))])
    rhs = np.zeros(k + 1)
    rhs[-1] = 1.0
    mu_sub, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    mu_sub = np.where(np.abs(mu_sub) < 1e-15, 0.0, mu_sub)
    mu_sub = mu_sub / mu_sub.sum()
    mu = np.zeros(p.shape[0])
    mu[members] = mu_sub
    return mu


def stationary_context_distribution(context_dynamics: np.ndarray) -> np.ndarray:
    """Stationary law of the context chain; NotUnichain if it is not unique."""
    return stationary_distribution(context_dynamics)
