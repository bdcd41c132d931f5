"""Exception hierarchy shared by the whole toolkit.

Every error raised on bad data or bad parameters derives from
:class:`ReadoutError`, so callers (and the CLI) can distinguish usage
problems from data/domain problems with a single except clause.
"""


class ReadoutError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(ReadoutError, ValueError):
    """A parameter is outside its allowed domain; names the offending field."""


class ShapeError(ReadoutError, ValueError):
    """Inputs have mismatched lengths, bin widths or dimensions."""


class DomainError(ReadoutError, ValueError):
    """A value is outside its mathematical domain (e.g. population not in [0,1])."""


class DegenerateBoundaryError(ReadoutError):
    """Boundary sums do not satisfy bright > dark > 0."""


class DegenerateTrainingError(ReadoutError):
    """The training set cannot constrain a model (identical targets/traces)."""


class DivergenceError(ReadoutError):
    """Gradient descent increased the loss; the learning rate is too high."""


class FitFailureError(ReadoutError):
    """Sinusoid fitting failed (too few points, no oscillation, short span)."""


class StateError(ReadoutError):
    """An operation was called before its prerequisite step."""


class ParseError(ReadoutError):
    """A data file is malformed.

    Carries the 1-based line number when it is known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
