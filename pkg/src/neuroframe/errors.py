"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ``FormatError`` -> 2, ``NumericError``
-> 3, anything deriving from ``UsageError`` -> 1.
"""


class NeuroframeError(Exception):
    pass


class UsageError(NeuroframeError, ValueError):
    """Bad arguments or violated preconditions."""


class DesignError(UsageError):
    """A filter could not be designed from the requested parameters."""


class ShapeError(UsageError):
    """Tensor or array extents do not match what an operation expects."""


class FormatError(NeuroframeError):
    """A file on disk is malformed (bad magic, truncated, wrong extents)."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericError(NeuroframeError, ArithmeticError):
    """Non-finite loss or gradient, or a numerically singular problem."""


class RankDeficiencyError(NumericError):
    pass


class DegenerateWindowError(NumericError):
    """A window has (near) zero variance so a moment ratio is undefined."""
