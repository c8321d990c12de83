"""Exception hierarchy shared across the package."""


class SatorisError(Exception):
    """Base class for all package errors."""


class DimensionError(SatorisError, ValueError):
    """Operands have incompatible shapes."""


class DataError(SatorisError, ValueError):
    """Input data is malformed (NaN, empty, unparseable, degenerate)."""


class EvaluationError(DataError):
    """Metrics cannot be computed for the given truth/mask pair."""


class SolverError(SatorisError, RuntimeError):
    """A solve failed; ``diagnostics`` carries the solver record when available."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics
