"""Exception hierarchy.

Two branches matter for the CLI exit codes: input/validation problems
(exit code 2) and numerical/model failures (exit code 1).
"""


class PanelmortError(Exception):
    """Base class for all package errors."""


class ValidationError(PanelmortError, ValueError):
    """Bad inputs: malformed CSVs, invalid series, contract violations."""


class SeriesError(ValidationError):
    """Invalid univariate series or transform arguments."""


class DataError(ValidationError):
    """Panel data problems (unbalanced panel, duplicates, bad values)."""


class SpecError(ValidationError):
    """Invalid ModelSpec or an operation called outside its contract."""


class NumericalError(PanelmortError, RuntimeError):
    """Model/numerical failures during estimation."""


class RankDeficiencyError(NumericalError):
    """Design matrix is not of full column rank."""

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class DegenerateFitError(NumericalError):
    """Zero residual sum of squares; likelihood-based quantities undefined."""


class McReplicateError(NumericalError):
    """A Monte Carlo replicate failed; carries the replicate index."""

    def __init__(self, replicate, message):
        super().__init__(f"replicate {replicate}: {message}")
        self.replicate = replicate
