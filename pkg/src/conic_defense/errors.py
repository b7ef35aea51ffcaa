"""Exception types shared across the package."""


class ConicDefenseError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(ConicDefenseError, ValueError):
    """A problem parameter violates its admissible range."""


class GeometryDomainError(ConicDefenseError, ValueError):
    """A geometric operation was called outside its domain."""


class InstanceError(ConicDefenseError, ValueError):
    """An input instance or instance document is malformed."""


class RegimeError(ConicDefenseError, RuntimeError):
    """Parameters fall outside the regime required by the requested operation.

    Carries the violated bound in ``args`` so callers can report it.
    """


class ConfigurationError(ConicDefenseError, ValueError):
    """A policy or run configuration value is inadmissible."""


class PolicyFaultError(ConicDefenseError, RuntimeError):
    """A policy returned a directive violating the motion contract."""


class OracleLimitError(ConicDefenseError, ValueError):
    """The instance exceeds the oracle's exhaustive-search size limit."""


class EngineError(ConicDefenseError, RuntimeError):
    """The simulation engine reached an inconsistent state."""
