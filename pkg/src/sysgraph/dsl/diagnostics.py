from __future__ import annotations

from dataclasses import dataclass

ERROR = "error"
WARNING = "warning"

# diagnostic codes
LEXICAL = "E001"
SYNTAX = "E002"
UNRESOLVED = "E010"
KIND_MISMATCH = "E011"
DUPLICATE_DECLARATOR = "E012"
MULTIPLE_INITIAL = "E013"
MISSING_INITIAL = "E014"
DUPLICATE_NAME = "E015"
DUPLICATE_PROPOSITION = "E016"
BAD_DOMAIN = "E017"
COMPOSITION = "E020"
IO = "E030"


@dataclass(frozen=True)
class Span:
    line: int = 1
    col: int = 1
    length: int = 0


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    span: Span
    code: str
    message: str
    path: str = "<input>"

    @property
    def is_error(self) -> bool:
        return self.severity == ERROR

    def format(self) -> str:
        return (
            f"{self.path}:{self.span.line}:{self.span.col}: "
            f"{self.severity}[{self.code}]: {self.message}"
        )

    def to_dict(self) -> dict:
        return {
            "severity": self.severity,
            "path": self.path,
            "line": self.span.line,
            "col": self.span.col,
            "length": self.span.length,
            "code": self.code,
            "message": self.message,
        }


def error(code, message, span=None, path="<input>") -> Diagnostic:
    return Diagnostic(ERROR, span or Span(), code, message, path)


def warning(code, message, span=None, path="<input>") -> Diagnostic:
    return Diagnostic(WARNING, span or Span(), code, message, path)
