"""Exception hierarchy shared by every subpackage.

Library code raises these; only the command-line front end turns them into
exit codes (``exit_code``) and single-line JSON error reports.
"""


class NtkSpectraError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class ValidationError(NtkSpectraError, ValueError):
    """Invalid input: bad parameters, malformed measures or configs."""

    exit_code = 1


class DomainError(NtkSpectraError, ValueError):
    """Argument outside the mathematical domain of an operation."""

    exit_code = 1


class UnsupportedCaseError(NtkSpectraError):
    """Operation called outside the cases it is valid for."""

    exit_code = 1


class EvaluationError(NtkSpectraError):
    """A user or built-in function returned non-finite values."""


class SolverError(NtkSpectraError):
    """An iterative solver failed to converge."""

    def __init__(self, message: str, worst_residual: float = float("nan")):
        super().__init__(message)
        self.worst_residual = worst_residual


class NumericalError(NtkSpectraError):
    """Eigensolve failure, singular systems and similar numerical breakdowns."""


class InternalConsistencyError(NtkSpectraError):
    """A result violated an identity that must hold by construction."""


class ResourceCapError(NtkSpectraError):
    """Requested sizes exceed the configured caps."""

    exit_code = 3
