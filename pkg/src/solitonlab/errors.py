"""Exceptions and warning categories shared across the package."""


class SolitonLabError(Exception):
    """Base class for all package errors."""


class DegenerateParams(SolitonLabError):
    """Soliton spectral parameters coincide (or nearly coincide)."""


class OverflowRisk(SolitonLabError):
    """An exponent in the soliton evaluation exceeds the configured cap."""


class FactorizationFailure(SolitonLabError):
    """Neither Cholesky nor pivoted LU produced a usable factorization."""


class MassCollapse(SolitonLabError):
    """A soliton mass dropped below the configured minimum during integration."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class NonFiniteDetected(SolitonLabError):
    """A NaN/Inf appeared in a time-stepped field."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class RealityViolation(SolitonLabError):
    """A field that must stay real developed a large imaginary part."""


class AliasRisk(SolitonLabError):
    """Spectral resampling would discard non-negligible mode content."""


class SingularRestriction(SolitonLabError):
    """The restricted symplectic form is numerically singular."""


class WindowNotReached(SolitonLabError):
    """A trajectory ended before reaching the requested fit window."""


class FitDiverged(SolitonLabError):
    """An iterative fit failed to bracket a minimum."""


class InsufficientData(SolitonLabError):
    """Too few data points for the requested fit."""


class ExprSyntaxError(SolitonLabError):
    """Potential-expression parse error, with a byte offset into the source."""

    def __init__(self, message, position, expected=None):
        super().__init__(f"{message} (at offset {position})")
        self.position = position
        self.expected = expected or ()


class UnknownFunction(SolitonLabError):
    """Call to a function name the expression grammar does not define."""

    def __init__(self, name, position):
        super().__init__(f"unknown function '{name}' (at offset {position})")
        self.name = name
        self.position = position


class EvalError(SolitonLabError):
    """Expression evaluation produced a non-finite value."""

    def __init__(self, message, node_index=None):
        super().__init__(message)
        self.node_index = node_index


class ConfigError(SolitonLabError):
    """Invalid experiment configuration; carries the offending key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class IoError(SolitonLabError):
    """Artifact emission failed (empty data, unwritable path, ...)."""


class DecayViolation(UserWarning):
    """A field does not decay to roundoff before the domain endpoints."""
