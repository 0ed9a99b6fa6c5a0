"""Fluid-plate interaction on graph domains: simulation and verification tools."""

__version__ = "0.1.0"

from .errors import (ConfigError, ContactError, CouplingError, DomainError, PlateflowError,  # noqa: E402
                     PreconditionError, ShapeError, SolverError)
from .grid import GridSpec, ScalarField, VectorField  # noqa: E402

__all__ = ["__version__", "GridSpec", "ScalarField", "VectorField", "PlateflowError", "ShapeError",
           "DomainError", "PreconditionError", "ContactError", "SolverError", "CouplingError", "ConfigError"]
