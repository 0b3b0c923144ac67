"""Instantaneous goal cost and per-slot age trackers.

The goal cost charges the controller for leaving real-world status
unattended: the context-weighted severity of the true state, reduced by
however much the chosen actuation mitigates (floored at zero), plus the
inherent price of running that actuation at all.  Age trackers (AoI,
AoCI, AoII) are the classical freshness baselines kept alongside traces
for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CostModel
from .policies import DecisionPolicy


@dataclass(frozen=True)
class GotParams:
    """Cost tables plus the decision rule that turns estimates into actuations."""

    costs: CostModel
    decision_policy: DecisionPolicy

    def __post_init__(self) -> None:
        num_actuations = self.costs.actuation_gain.shape[0]
        if np.any(self.decision_policy.table >= num_actuations):
            raise ValueError(
                "decision policy selects actuation "
                f"{int(self.decision_policy.table.max())} but only "
                f"{num_actuations} actuations are defined"
            )


def got_value(x: int, phi: int, x_hat: int, params: GotParams) -> float:
    """Goal cost of one slot: true state (x, phi), receiver estimate x_hat.

    The actuation is whatever the decision policy picks from the estimate;
    its gain offsets the status severity but can never push the cost below
    the actuation's own inherent cost.
    """
    a = params.decision_policy(x_hat)
    c1 = params.costs.status_inherent[phi, x]
    c2 = params.costs.actuation_gain[a]
    c3 = params.costs.actuation_inherent[a]
    return float(max(c1 - c2, 0.0) + c3)


def got_table(params: GotParams) -> np.ndarray:
    """Goal cost for every (x, x_hat, phi) triple, shape (S, S, V).

    C-order raveling of the result matches the flat global-state layout of
    StateSpace, so ``got_table(p).reshape(-1)`` is the per-state cost vector.
    """
    actuation = params.decision_policy.table
    gain = params.costs.actuation_gain[actuation]          # (S,) by x_hat
    inherent = params.costs.actuation_inherent[actuation]  # (S,) by x_hat
    severity = params.costs.status_inherent.T              # (S, V) by (x, phi)
    margin = severity[:, None, :] - gain[None, :, None]
    return np.maximum(margin, 0.0) + inherent[None, :, None]


@dataclass(frozen=True)
class AgeTrackers:
    """Per-slot freshness counters carried along a simulation trace.

    aoi counts slots since the last successful reception; aoci counts slots
    since the last reception whose content differed from the one before it;
    aoii counts consecutive slots of estimate mismatch.  last_delivered
    remembers the content of the most recent reception so aoci can tell
    changed updates from repeats.
    """

    aoi: int
    aoci: int
    aoii: int
    last_delivered: int

    def __post_init__(self) -> None:
        if self.aoi < 0 or self.aoci < 0 or self.aoii < 0:
            raise ValueError("age trackers must be non-negative")


def initial_age_trackers(x0: int, x_hat0: int) -> AgeTrackers:
    """Trackers at slot 0, before any transmission has happened.

    The receiver holds an initial estimate, so ages start at 1 (the
    estimate is one slot old by convention) and the mismatch counter
    starts at 0 or 1 depending on whether that estimate happens to be
    correct.
    """
    return AgeTrackers(
        aoi=1,
        aoci=1,
        aoii=0 if x0 == x_hat0 else 1,
        last_delivered=x_hat0,
    )


def step_age_trackers(
    prev: AgeTrackers,
    delivered: bool,
    delivered_value: int | None,
    next_x: int,
    next_x_hat: int,
) -> AgeTrackers:
    """Advance trackers by one slot.

    delivered_value is the semantic content that arrived this slot and must
    be present exactly when delivered is true.  next_x / next_x_hat are the
    source state and estimate at the START of the next slot; the mismatch
    counter is defined on those, so a delivery that is stale on arrival
    (the source moved again) does not clear it.
    """
    if delivered and delivered_value is None:
        raise ValueError("delivered_value required when delivered is true")
    if not delivered and delivered_value is not None:
        raise ValueError("delivered_value must be omitted when nothing arrived")

    if delivered:
        aoi = 1
        # A reception only resets the change-aware age when it actually
        # carries new content; repeats age like silence.
        changed = delivered_value != prev.last_delivered
        aoci = 1 if changed else prev.aoci + 1
        last_delivered = int(delivered_value)  # type: ignore[arg-type]
    else:
        aoi = prev.aoi + 1
        aoci = prev.aoci + 1
        last_delivered = prev.last_delivered

    aoii = 0 if next_x == next_x_hat else prev.aoii + 1
    return AgeTrackers(aoi=aoi, aoci=aoci, aoii=aoii, last_delivered=last_delivered)
