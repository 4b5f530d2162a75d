"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto its stable exit codes: usage errors exit 2,
validation/input errors exit 3, numerical errors exit 4.
"""

from __future__ import annotations


class SlsError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SlsError):
    """A configuration value violates its declared range or type."""


class InputError(SlsError):
    """Data passed to an operation violates a precondition."""


class ValidationError(InputError):
    """A structured artifact (trace, record, report) violates its invariants."""


class TraceParseError(ValidationError):
    """A trace file line could not be parsed."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class NumericalError(SlsError):
    """A computation produced a non-finite intermediate value."""

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f"{message} (at step {step})"
        super().__init__(message)
        self.step = step


class UsageError(SlsError):
    """The command line was used incorrectly."""
