"""Exception and warning taxonomy shared across the toolkit.

Exit-code mapping lives in the CLI: ContractError-family failures exit 1,
data/IO/protocol failures exit 2.
"""
from __future__ import annotations


class CalfError(Exception):
    """Base class for all toolkit errors."""


class ContractError(CalfError):
    """A caller violated a documented precondition or invariant."""


class ParseError(CalfError):
    """A cited answer could not be parsed into sentences."""


class DataError(CalfError):
    """A data file is missing, malformed, or violates its schema."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class AlignmentError(CalfError):
    """Two tokenizations of the same text could not be reconciled."""

    def __init__(self, message: str, residual_a: str = "", residual_b: str = ""):
        self.residual_a = residual_a
        self.residual_b = residual_b
        super().__init__(f"{message} (scorer residual: {residual_a!r}, model residual: {residual_b!r})")


class ScoringError(CalfError):
    """A consistency scorer failed to produce a score.

    ``retryable`` distinguishes transient transport failures from
    permanent ones; callers may re-issue retryable requests.
    """

    def __init__(self, message: str, retryable: bool = False):
        self.retryable = retryable
        super().__init__(message)


class ProtocolError(CalfError):
    """A remote scorer replied with something outside the wire contract."""


class TrainingDivergedError(CalfError):
    """Training produced a non-finite loss."""

    def __init__(self, step: int, loss: float):
        self.step = step
        self.loss = loss
        super().__init__(f"non-finite loss {loss!r} at step {step}")


class CitationWarning(UserWarning):
    """A citation marker was dropped or a sentence was discarded."""


class GateWarning(UserWarning):
    """A quality-gate computation hit a defined-but-degenerate case."""
