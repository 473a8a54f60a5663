"""Exception types shared across the package."""


class ShockStabError(Exception):
    """Base class for every error raised by shockstab."""


class DomainError(ShockStabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InvalidShockError(ShockStabError, ValueError):
    """End states violate the entropy condition or the shock parametrization."""


class ShockTooStrongError(ShockStabError, ValueError):
    """The shock is too strong for the weighted estimate (C* <= 0)."""


class SolverFailure(ShockStabError, RuntimeError):
    pass


class InvalidDataError(ShockStabError, ValueError):
    """Initial data is inadmissible (nonpositive volume, boundary leakage)."""


class VacuumError(ShockStabError, RuntimeError):
    """The specific volume reached zero or below during time stepping."""

    def __init__(self, message, t=None, node=None):
        super().__init__(message)
        self.t = t
        self.node = node


class UsageError(ShockStabError, ValueError):
    """A function was called with an inconsistent set of inputs."""


class ConfigError(ShockStabError, ValueError):
    """A scenario file could not be parsed or failed validation."""
