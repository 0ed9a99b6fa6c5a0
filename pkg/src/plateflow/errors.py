"""Exception types shared across the package."""


class PlateflowError(Exception):
    """Base class for all package errors."""


class ShapeError(PlateflowError, ValueError):
    """Field or trajectory layouts do not match."""


class DomainError(PlateflowError, ValueError):
    """An argument lies outside the admissible set (e.g. nonpositive height)."""


class PreconditionError(PlateflowError, ValueError):
    """Input data violates a documented precondition."""


class ContactError(PlateflowError, RuntimeError):
    """The plate touched the bottom of the container (eta below its floor)."""


class SolverError(PlateflowError, RuntimeError):
    """A linear or fixed-point solver failed to converge."""

    def __init__(self, message, residual=None, step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class CouplingError(SolverError):
    """Fluid-structure subiterations diverged or stalled."""


class ConfigError(PlateflowError, ValueError):
    """Invalid simulation configuration."""
