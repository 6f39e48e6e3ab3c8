"""Diagnostics shared by the validator, parser, linter, CLI, and gateway.

Codes are stable machine-readable identifiers: E_* for errors, W_* for
warnings. Tools key off the code, never the message text.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class SourceSpan:
    """Byte range in a source file; line and column are 1-based."""

    offset: int
    line: int
    column: int
    length: int


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    location: str = ""
    span: SourceSpan | None = None

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def format(self, filename: str = "<input>") -> str:
        line = self.span.line if self.span else 1
        col = self.span.column if self.span else 1
        return f"{self.severity.value.upper()} {self.code} {filename}:{line}:{col} {self.message}"


def error(code: str, message: str, location: str = "", span: SourceSpan | None = None) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, location, span)


def warning(code: str, message: str, location: str = "", span: SourceSpan | None = None) -> Diagnostic:
    return Diagnostic(Severity.WARNING, code, message, location, span)


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.is_error for d in diags)
