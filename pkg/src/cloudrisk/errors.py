"""Exception hierarchy shared by all cloudrisk modules."""

from __future__ import annotations


class CloudriskError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CloudriskError):
    """A scenario, workload, graph, or controller config is invalid.

    Raised before any simulation event executes.
    """


class CapabilityError(CloudriskError):
    """A declassification was requested without an adequate capability.

    Identifies the first tag (in canonical order) for which the held
    capability is absent or too weak.
    """

    def __init__(self, principal: str, kind: str, reason: str):
        self.principal = principal
        self.kind = kind
        super().__init__(f"cannot declassify {kind} tag of {principal!r}: {reason}")


class FlowDenied(CloudriskError):
    """The reference monitor rejected a transmission.

    Attributes:
        missing_content: principals whose content tag is absent at the destination.
        underrated_timing: principals whose timing tag exceeds the destination rate.
    """

    def __init__(self, missing_content, underrated_timing):
        self.missing_content = sorted(missing_content)
        self.underrated_timing = sorted(underrated_timing)
        parts = []
        if self.missing_content:
            parts.append("content not accepted: " + ",".join(self.missing_content))
        if self.underrated_timing:
            parts.append("timing rate too high: " + ",".join(self.underrated_timing))
        super().__init__("; ".join(parts) or "flow denied")


class StatError(CloudriskError):
    """Not enough trials (or otherwise unusable statistics) for an estimate."""


class TooLarge(CloudriskError):
    """An exact computation was requested beyond the enumeration guard."""


class ParseError(CloudriskError):
    """A trace or label text could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
