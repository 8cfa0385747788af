"""Secret-key agreement over multi-link channels with an active adversary.

Modules
-------
codes
    Link-level codebooks, MDS constructions and bounded-distance decoding.
protocol
    The two-round zero-error scheme, direct transmission, and the
    random-attack scheme.
adversary
    Attack profiles, exhaustive verification and worst-case key entropy.
rates
    Closed-form key-rate bounds.
cbs
    Combinatorial binary symmetric channel and random codes.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConfigurationError,
    ParameterError,
    ProtocolFailure,
    RobustKeyError,
    UnsupportedParameters,
)

__all__ = [
    "__version__",
    "CapacityError",
    "ConfigurationError",
    "ParameterError",
    "ProtocolFailure",
    "RobustKeyError",
    "UnsupportedParameters",
]
