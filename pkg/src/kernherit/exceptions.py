"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: bad or inconsistent data -> 2,
numerical failures -> 3 (argument/usage problems are handled by the
argument parser itself and exit with 1).
"""


class KernheritError(Exception):
    """Base class for all package-specific errors."""


class DataError(KernheritError):
    """Invalid or inconsistent input data (files, shapes, value domains)."""


class NumericalError(KernheritError):
    """A numerical routine failed (non-convergence, loss of definiteness)."""


class ConditionNotMet(KernheritError):
    """A spectral diagnostic refused to run because its preconditions fail.

    Carries the name of the failed condition so callers can report which
    requirement (alignment, spectral gap, or regularization threshold)
    blocked the computation.
    """

    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        msg = f"precondition not met: {condition}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
