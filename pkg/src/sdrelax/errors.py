"""Exception types shared across the package."""


class SdrelaxError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(SdrelaxError, ValueError):
    """Array shapes or space dimensions are inconsistent."""


class DomainError(SdrelaxError, ValueError):
    """A point or subdomain lies outside the field's domain."""


class NonUnitNormalError(SdrelaxError, ValueError):
    """A direction that must be a unit vector is not one."""


class MeshMismatchError(SdrelaxError, ValueError):
    """Two fields that must share a mesh do not."""


class DensityError(SdrelaxError, ValueError):
    """A density set is incomplete or inconsistent for the requested use."""


class NumericalFailureError(SdrelaxError, RuntimeError):
    """An optimizer or quadrature produced a non-finite or inconsistent value.

    Carries an optional ``payload`` dict describing the offending competitor
    so it can be serialized for post-mortems.
    """

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload or {}


class SandwichViolationError(NumericalFailureError):
    """An upper-bound estimate dropped below the exact lower bound."""


class ConfigError(SdrelaxError, ValueError):
    """An experiment configuration file is malformed."""
