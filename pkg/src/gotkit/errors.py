"""Exception types shared across the toolkit."""


class GotkitError(Exception):
    """Base class for all toolkit errors."""


class ModelValidationError(GotkitError):
    """A system model violates one of its structural invariants."""


class DimensionMismatch(ModelValidationError):
    """A tensor's shape is inconsistent with the declared state/action counts."""


class NotStochastic(ModelValidationError):
    """A probability row does not sum to 1 within tolerance."""


class NegativeEntry(ModelValidationError):
    """A probability or cost entry is negative (or non-finite)."""


class ChannelOutOfRange(ModelValidationError):
    """The channel success probability lies outside [0, 1]."""


class NotUnichain(GotkitError):
    """A Markov chain has more than one recurrent class, so its long-run
    behaviour is not described by a single stationary distribution."""


class NoConvergence(GotkitError):
    """An iterative solver hit its iteration cap before meeting tolerance."""


class EnumerationTooLarge(GotkitError):
    """A policy enumeration would exceed the configured size cap."""


class ConfigError(GotkitError):
    """A model/experiment configuration file is missing or malformed."""
