"""Exception types shared across the package."""


class QipmError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(QipmError, ValueError):
    """Array shapes are inconsistent with the problem dimensions."""


class RankDeficientError(QipmError, ValueError):
    """Constraint matrix does not have full row rank.

    Carries ``dependent_rows``, the row indices that could not be pivoted.
    """

    def __init__(self, message, dependent_rows=()):
        super().__init__(message)
        self.dependent_rows = tuple(dependent_rows)


class InvalidIterateError(QipmError, ValueError):
    """An interior-point iterate has a nonpositive x or s component."""


class NonIntegerDataError(QipmError, ValueError):
    """Operation requires integer problem data."""


class FactorizationError(QipmError, RuntimeError):
    """Cholesky factorization failed (matrix not positive definite)."""


class ResidualNotMetError(QipmError, RuntimeError):
    """A solver could not reach the requested residual target.

    ``best`` holds the best iterate found, ``achieved`` its residual norm.
    """

    def __init__(self, message, best=None, achieved=None):
        super().__init__(message)
        self.best = best
        self.achieved = achieved


class StepFailureError(QipmError, RuntimeError):
    """No admissible step length >= 1e-8 exists; usually the inexact
    solve violated its residual contract."""


class SimulatorSizeError(QipmError, ValueError):
    """Requested statevector simulation exceeds the size caps."""


class EigenvalueResolutionError(QipmError, RuntimeError):
    """An eigenvalue is too small to resolve with the given clock register."""


class ConditionOutOfTableError(QipmError, ValueError):
    """Condition number exceeds the qubit-sizing table's range."""


class ZeroSolutionError(QipmError, RuntimeError):
    """The quantum solver produced a zero vector (failed run)."""


class MpsFormatError(QipmError, ValueError):
    """Malformed MPS input."""


class UnsupportedMpsFeatureError(MpsFormatError):
    """MPS input uses a feature outside the supported subset."""


class SchemaError(QipmError, ValueError):
    """JSON problem file violates the expected schema."""


class ConfigError(QipmError, ValueError):
    """Invalid generator or run configuration."""


class InvariantViolationError(QipmError, AssertionError):
    """A runtime check of the method's theory failed."""


class RefinementError(QipmError, RuntimeError):
    """Iterative refinement failed; wraps the inner solve outcome."""

    def __init__(self, message, round_index=None, inner_status=None):
        super().__init__(message)
        self.round_index = round_index
        self.inner_status = inner_status
