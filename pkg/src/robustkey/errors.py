"""Exception hierarchy shared by every module."""


class RobustKeyError(Exception):
    """Base class for all package errors."""


class ParameterError(RobustKeyError, ValueError):
    """Arguments violate a documented precondition."""


class UnsupportedParameters(ParameterError):
    """No construction is available for the requested code parameters."""


class CapacityError(RobustKeyError):
    """An enumeration or materialization would exceed the configured cap."""


class ConfigurationError(ParameterError):
    """Scheme components (codebooks, presets) are mutually inconsistent."""


class ProtocolFailure(RobustKeyError):
    """A party could not reach a unique decision during key finalization."""
