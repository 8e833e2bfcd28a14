"""Shared error types and the diagnostic record used across the toolkit.

Every user-facing failure travels either as a Diagnostic (recoverable,
reportable) or as a GrimError subclass (operational failure with a stable
``code`` string).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class Diagnostic:
    """One parser or validator finding.

    ``line`` is 1-based; 0 means the finding is not tied to a single line.
    """

    severity: Severity
    code: str
    message: str
    line: int = 0

    def to_dict(self) -> dict:
        return {
            "severity": self.severity.value,
            "code": self.code,
            "line": self.line,
            "message": self.message,
        }


@dataclass(frozen=True)
class Violation:
    """One constraint-check finding over a parsed bundle.

    ``subjects`` carries the beat ids or storyline indices the finding is
    about, in ascending order.
    """

    severity: Severity
    code: str
    message: str
    subjects: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "severity": self.severity.value,
            "code": self.code,
            "subjects": list(self.subjects),
            "message": self.message,
        }


class GrimError(Exception):
    """Base class for operational errors; ``code`` is machine-stable."""

    code = "INTERNAL"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message}


class GatewayError(GrimError):
    code = "GATEWAY"


class NetworkError(GatewayError):
    code = "NETWORK"


class RateLimitedError(GatewayError):
    code = "RATE-LIMITED"


class EmptyResponseError(GatewayError):
    code = "EMPTY-RESPONSE"


class FixtureMissError(GatewayError):
    code = "FIXTURE-MISS"


class StoreError(GrimError):
    code = "STORE"


class StoreIOError(StoreError):
    code = "IO"


class SchemaVersionError(StoreError):
    code = "SCHEMA-VERSION-UNSUPPORTED"


class CorruptProjectError(StoreError):
    code = "CORRUPT"


class VersionUnknownError(StoreError):
    code = "VERSION-UNKNOWN"


class DanglingBeatRef(GrimError):
    """A storyline references a beat id with no description anywhere."""

    code = "DANGLING-BEAT-REF"


class ParseFailedError(GrimError):
    """A model response did not parse into a StoryBundle."""

    code = "PARSE-FAILED"

    def __init__(self, message: str, diagnostics: list):
        super().__init__(message)
        self.diagnostics = diagnostics


class EditRejected(GrimError):
    """Raised when an edit cannot be applied after the retry budget."""

    code = "EDIT-EXHAUSTED"

    def __init__(self, message: str, attempts: int, reports: list):
        super().__init__(message)
        self.attempts = attempts
        self.reports = reports


class EditRefUnknown(GrimError):
    """An edit request names a beat or endpoint the draft does not have."""

    code = "EDIT-REF-UNKNOWN"


class EditIdClash(GrimError):
    """An edit request adds a beat id the draft already uses."""

    code = "EDIT-ID-CLASH"
