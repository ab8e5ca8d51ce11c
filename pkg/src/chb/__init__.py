"""Nonlocal Cahn-Hilliard-Brinkman simulator with separation diagnostics."""
from .errors import (AbortRun, AssumptionError, CHBError, ConfigError, CoverageError, DomainError,
                     GridMismatch, GuardBandError, SolverError, WindowError)
from .grid import Grid2D, ScalarField, StaggeredVectorField

__version__ = "0.1.0"
