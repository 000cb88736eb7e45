"""Exception hierarchy shared across the package.

Split by failure class so the CLI can map them onto distinct exit codes:
schema/corpus problems are user-data errors, everything else is runtime.
"""

from __future__ import annotations


class EscaladeError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(EscaladeError):
    """A line in an input file failed to parse or validate."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class CorpusError(EscaladeError):
    """Cross-record validation failed while assembling a corpus."""


class AmbiguousEscalationError(CorpusError):
    """A ticket is attached to escalation records that disagree about its role."""

    def __init__(self, ticket_id: str, record_ids: list[str]):
        self.ticket_id = ticket_id
        self.record_ids = sorted(record_ids)
        super().__init__(
            f"ticket {ticket_id!r} has conflicting escalation attachments "
            f"(records: {', '.join(self.record_ids)})"
        )


class ModelFormatError(EscaladeError):
    """A model file is unreadable, truncated, or has an unsupported version."""


class TrainingError(EscaladeError):
    """The training data cannot produce a valid model (e.g. single-class)."""


class ServiceStateError(EscaladeError):
    """An API request is valid in shape but illegal in the current store state."""
