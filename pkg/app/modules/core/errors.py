"""
Exception hierarchy for the identification toolkit.

Shape and argument problems derive from ``ValueError``, numerical breakdowns
from ``ArithmeticError``, so callers that only know the builtin families
still catch them.
"""


class IdentificationToolkitError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatchError(IdentificationToolkitError, ValueError):
    """Operands have incompatible shapes (N, L, or geometry size)."""


class PhysicalRangeError(IdentificationToolkitError, ValueError):
    """A quadrature expectation lies outside [-1/2, 1/2] beyond tolerance."""


class DegenerateSpectrumError(IdentificationToolkitError, ArithmeticError):
    """Two frequencies coincide within the distinctness tolerance."""


class RankDeficiencyError(IdentificationToolkitError, ArithmeticError):
    """The signal supports fewer modes than requested."""


class ConvergenceError(IdentificationToolkitError, ArithmeticError):
    """No optimizer run reached its convergence criterion."""


class PreprocessError(IdentificationToolkitError):
    """Every ramp-removal anchor was rejected as ill-conditioned."""


class IdentificationError(IdentificationToolkitError):
    """The identification pipeline failed.

    Attributes:
        stage: Pipeline stage that failed
        diagnostics: Partial results gathered before the failure
    """

    def __init__(self, message: str, stage: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.stage = stage
        self.diagnostics = diagnostics or {}


class CoverageError(IdentificationToolkitError):
    """Subset sampling could not cover every lattice element."""

    def __init__(self, message: str, coverage: dict | None = None):
        super().__init__(message)
        self.coverage = coverage or {}


class BootstrapUnreliableError(IdentificationToolkitError):
    """Too many bootstrap resamples failed to identify."""


class FormatError(IdentificationToolkitError, ValueError):
    """A data or result file does not follow the expected format."""
