"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class OTLPError(Exception):
    """Base class for all errors raised by this package."""


class InputError(OTLPError, ValueError):
    """Malformed instances, sheets, grids or configuration."""


class ParseError(InputError):
    """A CSV or config file could not be parsed.

    ``line`` is the 1-based physical line number when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CostUnavailableError(InputError):
    """A cost metric was requested but no cost column was ingested."""


class UnsupportedConstraintError(InputError):
    """A metric cannot be expressed in the requested constraint scope."""


class InfeasibleError(OTLPError):
    """No selection satisfies the constraints.

    ``cause`` is ``"local"`` when filtering left a subspace without any
    candidate row, ``"coupling"`` when every subspace has candidates but no
    tuple satisfies the global constraints.
    """

    def __init__(self, message: str, cause: str, subspace=None, constraint: str | None = None):
        super().__init__(message)
        self.cause = cause
        self.subspace = subspace
        self.constraint = constraint


class ResourceLimitError(OTLPError):
    """A node or tuple limit was hit before the search completed."""
