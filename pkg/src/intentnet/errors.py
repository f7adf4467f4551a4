"""Exception hierarchy shared by every intentnet module.

Everything raised on purpose derives from :class:`IntentNetError`, so callers
can catch one type at the boundary.  Where a builtin category is the natural
fit (lookup failures, bad values) the class also inherits from it.
"""

from __future__ import annotations


class IntentNetError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(IntentNetError):
    """A document or payload is structurally invalid (missing field, wrong type)."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InvariantError(IntentNetError, ValueError):
    """A semantic invariant does not hold (dangling id, broken chain, bad value)."""

    def __init__(self, message: str, subject_id: str | None = None):
        self.subject_id = subject_id
        super().__init__(message)


class NotFoundError(IntentNetError, LookupError):
    """A referenced id, path, or resource does not exist."""


class LimitExceededError(IntentNetError):
    """An instance is too large for the exhaustive oracle."""


class UnrecognizedIntentError(IntentNetError):
    """No pattern rule fired; carries the input text for LLM escalation."""

    def __init__(self, text: str):
        self.text = text
        super().__init__(f"no intent rule matched: {text!r}")


class MissingParamError(IntentNetError):
    """An intent lacks a parameter its kind requires."""

    def __init__(self, param: str, kind: str | None = None):
        self.param = param
        super().__init__(f"missing required param {param!r}" + (f" for {kind}" if kind else ""))


class GatewayError(IntentNetError):
    """A completion backend failed. ``kind`` is one of transport/status/timeout/budget."""

    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(f"{kind}: {message}")


class ReplayMissError(IntentNetError):
    """A strict replay backend had no script entry matching the prompt."""


class SinkError(IntentNetError):
    """A recording sink could not be written."""


class ExtractionFailedError(IntentNetError):
    """The LLM produced unusable output twice in a row."""


class EmptyQueryError(IntentNetError, ValueError):
    """A retrieval query was empty."""


class MismatchError(IntentNetError):
    """A plan references links absent from the topology being rendered."""


class LayoutError(IntentNetError):
    """Coordinate layout was requested but coordinates are missing."""


class NoOutcomeError(IntentNetError):
    """A report was requested for a session that has not finished."""


class InfeasibleReportError(IntentNetError):
    """Planning was requested on an analysis that judged the task infeasible."""


class IllegalTransitionError(IntentNetError):
    """A session command is not legal in the session's current state."""


class CorruptLogError(IntentNetError):
    """An event log has a gap or malformed record."""


class ParseError(IntentNetError):
    """An artifact body does not parse under its expected grammar."""
