"""Deterministic policy tables for the sampler and the decision maker."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DecisionPolicy:
    """Deterministic map estimate -> actuation index, as a length-S table."""

    table: np.ndarray

    def __init__(self, table) -> None:
        arr = np.asarray(table, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError(f"decision policy table must be 1-D, got shape {arr.shape}")
        if np.any(arr < 0):
            raise ValueError("decision policy entries must be non-negative actuation indices")
        arr.setflags(write=False)
        object.__setattr__(self, "table", arr)

    def __call__(self, x_hat: int) -> int:
        return int(self.table[x_hat])

    def __eq__(self, other) -> bool:
        return isinstance(other, DecisionPolicy) and np.array_equal(self.table, other.table)

    def __hash__(self) -> int:
        return hash(self.as_tuple())

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(a) for a in self.table)


@dataclass(frozen=True)
class SamplingPolicy:
    """Deterministic map flat global state -> {0, 1}, as a length-S*S*V table."""

    table: np.ndarray

    def __init__(self, table) -> None:
        arr = np.asarray(table, dtype=np.int8)
        if arr.ndim != 1:
            raise ValueError(f"sampling policy table must be 1-D, got shape {arr.shape}")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("sampling policy entries must be binary")
        arr.setflags(write=False)
        object.__setattr__(self, "table", arr)

    def __call__(self, flat_state: int) -> int:
        return int(self.table[flat_state])

    def __eq__(self, other) -> bool:
        return isinstance(other, SamplingPolicy) and np.array_equal(self.table, other.table)

    def __hash__(self) -> int:
        return hash(self.as_tuple())

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(a) for a in self.table)
