"""Exception types shared across the package."""


class KepError(Exception):
    """Base class for all package errors."""


class ParseError(KepError):
    """Malformed instance or report file; message names the offending line."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ValidationError(KepError):
    """Instance violates a structural invariant (names the vertex/arc)."""


class BlowupError(KepError):
    """Exhaustive enumeration exceeded its configured limit."""


class CoverageError(KepError):
    """A pair in P' is covered by no master column (Nash masters)."""


class StallError(KepError):
    """Pricing regenerated an existing column with a violated reduced cost.

    This signals a dual-sign wiring bug rather than a model property, so we
    abort with diagnostics instead of looping.
    """


class WiringError(KepError):
    """A dual label expected by pricing is missing from the solution."""


class SolverTimeoutError(KepError):
    """Pricing hit its time limit; carries the best incumbent found."""

    def __init__(self, message: str, incumbent=None, bound: float | None = None):
        super().__init__(message)
        self.incumbent = incumbent
        self.bound = bound


class UndefinedPofError(KepError):
    """POF is undefined because the utilitarian optimum is zero."""


class DegenerateFrontError(KepError):
    """Ideal and reference points coincide; relative distances undefined."""
