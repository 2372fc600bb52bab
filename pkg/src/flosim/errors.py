"""Exception hierarchy shared by all modules.

Validation problems (bad shapes, bad parameters, malformed circuits) derive
from :class:`ValidationError`; broken internal invariants derive from
:class:`InternalError`.  The command line maps the first family to exit code 2
and the second to exit code 3.
"""


class FlosimError(Exception):
    """Base class for every error raised by this package."""

    code = "E000"


class ValidationError(FlosimError, ValueError):
    """Input rejected before any computation.

    ``line`` and ``column`` (1-based) are set when the input came from a
    circuit file.
    """

    code = "E100"

    def __init__(self, message="", line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column or 1}: {message}"
        super().__init__(message)


class DimensionError(ValidationError):
    code = "E101"


class ShapeError(ValidationError):
    code = "E102"


class NotPassiveError(ValidationError):
    code = "E103"


class CapacityError(ValidationError):
    code = "E104"


class ParityError(ValidationError):
    code = "E105"


class NotMatchgateError(ValidationError):
    code = "E106"


class AdjacencyError(ValidationError):
    code = "E107"


class ParamError(ValidationError):
    code = "E108"


class ParseError(ValidationError):
    """Syntax problem in a circuit file."""

    code = "E110"


class QubitRangeError(ValidationError):
    code = "E111"


class InternalError(FlosimError, RuntimeError):
    """An invariant that should hold by construction was violated."""

    code = "E300"


class PhaseRecoveryError(InternalError):
    code = "E301"
