"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract, so every failure mode that a
user can trigger has exactly one class here.
"""

from __future__ import annotations

from typing import Any


class MoqcError(Exception):
    """Base class for all package errors."""


class InputError(MoqcError, ValueError):
    """Malformed arguments: bad qubit indices, arity mismatch, non-unitary input."""


class ParseError(InputError):
    """A circuit, program or graph file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LegalityError(MoqcError):
    """A compiled program would need an observable outside the requested set."""

    def __init__(self, message: str, gate: Any = None):
        self.gate = gate
        super().__init__(message)


class ZeroProbabilityError(MoqcError):
    """A forced measurement outcome has (numerically) zero probability."""


class ResourceError(MoqcError):
    """An enumeration or simulation size limit was exceeded."""


class NonTerminationError(MoqcError):
    """Repeat-until-success correction ran out of rounds.

    The partial transcript is attached so the run can still be inspected.
    """

    def __init__(self, message: str, transcript: Any = None):
        self.transcript = transcript
        super().__init__(message)
