"""Goal-oriented sampling and actuation toolkit.

Models a slotted status-update loop in which a sampler decides when to
spend transmissions and a decision maker turns the received estimate
into actuation.  The package evaluates the goal cost of any fixed pair
of policies (exactly or by simulation), solves for the optimal sampler
given a decision policy, and brute-forces the jointly optimal pair.
"""

__version__ = "0.1.0"

from .codesign import (
    CandidateRecord,
    CodesignResult,
    brute_force_codesign,
    enumerate_decision_policies,
    greedy_decision_policy,
)
from .config import load_model
from .errors import (
    ChannelOutOfRange,
    ConfigError,
    DimensionMismatch,
    EnumerationTooLarge,
    GotkitError,
    ModelValidationError,
    NegativeEntry,
    NoConvergence,
    NotStochastic,
    NotUnichain,
)
from .mdp import (
    InducedMdp,
    RviSolution,
    bellman_residual,
    dec_pomdp_transition,
    induce_mdp,
    observation_maps,
    reward,
    rvi_solve,
)
from .metrics import (
    AgeTrackers,
    GotParams,
    got_table,
    got_value,
    initial_age_trackers,
    step_age_trackers,
)
from .model import (
    CostModel,
    GlobalState,
    StateSpace,
    SystemModel,
    is_unichain,
    recurrent_classes,
    stationary_context_distribution,
    stationary_distribution,
    validate_model,
)
from .policies import DecisionPolicy, SamplingPolicy
from .sim import (
    AgeAware,
    AoiiOptimal,
    ChangeAware,
    FrontierPoint,
    SamplerKind,
    SlotObservation,
    SweepSpec,
    Tabular,
    Trace,
    TraceStats,
    Uniform,
    exact_average_cost,
    frontier_sweep,
    make_benchmark,
    simulate,
)

__all__ = [
    "__version__",
    "AgeAware",
    "AgeTrackers",
    "AoiiOptimal",
    "CandidateRecord",
    "ChangeAware",
    "ChannelOutOfRange",
    "CodesignResult",
    "ConfigError",
    "CostModel",
    "DecisionPolicy",
    "DimensionMismatch",
    "EnumerationTooLarge",
    "FrontierPoint",
    "GlobalState",
    "GotkitError",
    "GotParams",
    "InducedMdp",
    "ModelValidationError",
    "NegativeEntry",
    "NoConvergence",
    "NotStochastic",
    "NotUnichain",
    "RviSolution",
    "SamplerKind",
    "SamplingPolicy",
    "SlotObservation",
    "StateSpace",
    "SweepSpec",
    "SystemModel",
    "Tabular",
    "Trace",
    "TraceStats",
    "Uniform",
    "bellman_residual",
    "brute_force_codesign",
    "dec_pomdp_transition",
    "enumerate_decision_policies",
    "exact_average_cost",
    "frontier_sweep",
    "got_table",
    "got_value",
    "greedy_decision_policy",
    "induce_mdp",
    "initial_age_trackers",
    "is_unichain",
    "load_model",
    "make_benchmark",
    "observation_maps",
    "recurrent_classes",
    "reward",
    "rvi_solve",
    "simulate",
    "stationary_context_distribution",
    "stationary_distribution",
    "step_age_trackers",
    "validate_model",
]
