"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: malformed input data -> 2,
cross-object consistency violations -> 3, numerical failures -> 4.
"""

from __future__ import annotations


class AnticipateError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(AnticipateError):
    """A label, vocabulary, split, or config file is malformed."""


class ConsistencyError(AnticipateError):
    """Two otherwise-valid objects disagree (lengths, vocabularies, spans)."""


class NumericalError(AnticipateError):
    """A computation produced non-finite values or failed a gradient check."""


class PredictionLimitError(AnticipateError):
    """Recursive prediction exceeded its iteration cap.

    Carries the partially predicted future so callers can inspect how far
    the recursion got before being stopped.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
