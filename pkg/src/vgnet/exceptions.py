"""Exception types raised across the toolkit.

Every error is a ``ValueError`` subclass so callers can catch broadly, while the
CLI maps :class:`InputError` subclasses to exit status 2.
"""


class VGError(ValueError):
    """Base class for all toolkit errors."""


class InputError(VGError):
    """Problems with user-supplied data (ingestion, validation)."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class MalformedCsv(InputError):
    pass


class UnparseableTimestamp(InputError):
    pass


class NonFinitePrice(InputError):
    pass


class DuplicateTimestamp(InputError):
    pass


class TooShort(InputError):
    pass


class EmptyWindow(VGError):
    pass


class DegenerateMoments(VGError):
    pass


class IndexOutOfRange(VGError, IndexError):
    pass


class PreconditionFailed(VGError):
    pass


class BudgetExceedsN(PreconditionFailed):
    pass


class DegenerateVariance(VGError):
    pass


class DomainError(VGError):
    pass


class TailTooSmall(VGError):
    pass


class NoMaximumInRange(VGError):
    pass
