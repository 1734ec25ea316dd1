"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``UsageError`` -> 1, ``InstanceError``
subclasses -> 2, ``BudgetExceeded`` -> 3.
"""


class CorruptNetError(Exception):
    exit_code = 2


class UsageError(CorruptNetError, ValueError):
    """Bad arguments or input that violates a documented precondition."""

    exit_code = 1


class InstanceError(CorruptNetError):
    """The instance itself violates an assumption the algorithm relies on."""

    exit_code = 2


class NoLargeComponent(InstanceError):
    """No agreement component reaches the size threshold (expansion failure)."""


class AmbiguousInstance(InstanceError):
    """Both or neither large component can be truthful (|T| > |B| violated)."""


class InconsistentReports(InstanceError):
    """Label propagation derived a contradiction from the reports."""


class ImpossibleInstance(InstanceError):
    """Puzzle instance without a strict truthful majority."""


class BudgetExceeded(CorruptNetError):
    exit_code = 3


class FallbackToGeneral(UserWarning):
    """Fast mode found no majority component and switched to general mode."""
