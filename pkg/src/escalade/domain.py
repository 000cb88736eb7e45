"""Domain types for support-ticket escalation scoring.

Vocabulary used throughout the package:

* PMR ("Problem Management Record") -- a support ticket: one customer issue
  tracked as an ordered stream of timestamped events.
* CritSit ("Critical Situation") -- an escalation artifact. A ticket
  "crits" when it gets attached to one. The single ticket that triggered a
  CritSit is its *cause*; sibling tickets swept into the same CritSit
  because they share the customer are *cascades*.
* Severity runs from 4 down to 1 with 1 the most severe, so an *increase*
  in severity means the numeric value moves toward 1.
* Support levels run L0 (ownership verification) through L3 (development
  support of bugs and defects).

All timestamps are integer UTC epoch minutes. Every type here is an
immutable value; instances are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from enum import Enum

from .errors import AmbiguousEscalationError

MINUTES_PER_DAY = 1440

SEVERITY_RANGE = (1, 4)
SUPPORT_LEVEL_RANGE = (0, 3)


class EventKind(str, Enum):
    """One action recorded on a ticket. Values double as the wire names."""

    OPENED = "opened"
    CUSTOMER_MESSAGE = "customer_msg"
    SUPPORT_MESSAGE = "support_msg"
    SEVERITY_CHANGE = "severity_change"
    OWNERSHIP_CHANGE = "ownership_change"
    CLOSED = "closed"


class EscalationType(str, Enum):
    NONE = "none"
    CAUSE = "cause"
    CASCADE = "cascade"


# Kinds that must / must not carry a severity or support-level payload.
_SEVERITY_KINDS = frozenset({EventKind.OPENED, EventKind.SEVERITY_CHANGE})
_LEVEL_KINDS = frozenset({EventKind.OPENED, EventKind.OWNERSHIP_CHANGE})


def _check_severity(value: int) -> None:
    lo, hi = SEVERITY_RANGE
    if not (lo <= value <= hi):
        raise ValueError(f"severity out of range [{lo},{hi}]: {value}")


def _check_level(value: int) -> None:
    lo, hi = SUPPORT_LEVEL_RANGE
    if not (lo <= value <= hi):
        raise ValueError(f"support level out of range [{lo},{hi}]: {value}")


@dataclass(frozen=True, slots=True)
class TicketEvent:
    """One timestamped entry in a ticket's history.

    ``severity`` is present exactly on ``OPENED`` and ``SEVERITY_CHANGE``
    events, ``level`` exactly on ``OPENED`` and ``OWNERSHIP_CHANGE``;
    ``customer_id`` is carried on ``OPENED`` only. ``actor_id`` is the
    support person for support messages and ownership changes, the customer
    otherwise.
    """

    ticket_id: str
    seq: int
    ts: int
    kind: EventKind
    actor_id: str
    severity: int | None = None
    level: int | None = None
    customer_id: str | None = None

    def __post_init__(self) -> None:
        if self.seq < 0:
            raise ValueError(f"seq must be >= 0, got {self.seq}")
        if self.kind in _SEVERITY_KINDS:
            if self.severity is None:
                raise ValueError(f"{self.kind.value} event requires severity")
            _check_severity(self.severity)
        elif self.severity is not None:
            raise ValueError(f"{self.kind.value} event must not carry severity")
        if self.kind in _LEVEL_KINDS:
            if self.level is None:
                raise ValueError(f"{self.kind.value} event requires level")
            _check_level(self.level)
        elif self.level is not None:
            raise ValueError(f"{self.kind.value} event must not carry level")
        if self.kind is EventKind.OPENED:
            if not self.customer_id:
                raise ValueError("opened event requires customer_id")
        elif self.customer_id is not None:
            raise ValueError(f"{self.kind.value} event must not carry customer_id")


@dataclass(frozen=True, slots=True)
class SupportTicket:
    """A ticket: its ordered event stream plus its escalation label.

    Event-stream invariants (first event Opened, gapless seq, monotone
    timestamps, at most one trailing Closed) are enforced where tickets are
    assembled, in :func:`escalade.ingest.build_corpus`.
    """

    ticket_id: str
    customer_id: str
    events: tuple[TicketEvent, ...]
    escalated: bool
    escalation_type: EscalationType

    def __post_init__(self) -> None:
        if not self.events:
            raise ValueError(f"ticket {self.ticket_id!r} has no events")
        if self.escalated != (self.escalation_type is not EscalationType.NONE):
            raise ValueError(
                f"ticket {self.ticket_id!r}: escalated flag inconsistent with "
                f"escalation_type={self.escalation_type.value}"
            )

    @property
    def opened_ts(self) -> int:
        return self.events[0].ts

    @property
    def closed_ts(self) -> int | None:
        last = self.events[-1]
        return last.ts if last.kind is EventKind.CLOSED else None

    def truncated(self, upto_seq: int) -> "SupportTicket":
        """The ticket as it looked after event ``upto_seq`` (inclusive)."""
        if not (0 <= upto_seq < len(self.events)):
            raise IndexError(f"upto_seq {upto_seq} out of range for {self.ticket_id!r}")
        return SupportTicket(
            ticket_id=self.ticket_id,
            customer_id=self.customer_id,
            events=self.events[: upto_seq + 1],
            escalated=self.escalated,
            escalation_type=self.escalation_type,
        )


@dataclass(frozen=True, slots=True)
class EscalationRecord:
    """A CritSit: open timestamp plus the set of tickets attached to it."""

    critsit_id: str
    opened_at: int
    attached_ticket_ids: frozenset[str]

    def __post_init__(self) -> None:
        if not self.attached_ticket_ids:
            raise ValueError(f"record {self.critsit_id!r} has no attached tickets")


def classify_escalation_type(
    ticket_id: str, records: frozenset[EscalationRecord] | set[EscalationRecord]
) -> EscalationType:
    """Type a ticket from the escalation records that mention it.

    A ticket attached only to single-ticket records is a ``CAUSE`` (a
    CritSit with exactly one attachment can only have been triggered by
    that ticket). A ticket attached only to multi-ticket records is a
    ``CASCADE``: true causes inside a multi-ticket record are
    indistinguishable from their swept-in siblings, so all of them are
    typed conservatively. A ticket in no record is ``NONE``.

    Raises :class:`AmbiguousEscalationError` when the records disagree,
    i.e. the ticket appears both as a sole attachment and inside a
    multi-ticket group; no defensible resolution exists for that shape.
    """
    singles: list[str] = []
    multis: list[str] = []
    for record in records:
        if ticket_id in record.attached_ticket_ids:
            if len(record.attached_ticket_ids) == 1:
                singles.append(record.critsit_id)
            else:
                multis.append(record.critsit_id)
    if singles and multis:
        raise AmbiguousEscalationError(ticket_id, singles + multis)
    if singles:
        return EscalationType.CAUSE
    if multis:
        return EscalationType.CASCADE
    return EscalationType.NONE


# The model's input schema: 22 numeric fields in fixed order. Field names
# are load-bearing -- they are the CSV header of feature exports and the
# order check when a saved model is loaded.
@dataclass(frozen=True, slots=True)
class FeatureVector:
    number_of_entries: int
    days_open: float
    pmr_ownership_level: int
    num_support_contacts: int
    num_severity_increases: int
    num_severity_decreases: int
    num_sevX_to_sev1: int
    time_until_first_contact_min: float
    avg_support_response_min: float
    diff_avg_vs_expected_min: float
    days_since_last_contact: float
    num_closed_pmrs: int
    num_closed_critsits: int
    critsit_to_pmr_ratio: float
    expected_response_min: float
    num_open_pmrs: int
    pmrs_opened_last_X: int
    pmrs_closed_last_X: int
    critsits_open: int
    critsits_opened_last_X: int
    critsits_closed_last_X: int
    expected_response_last_X_min: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in FEATURE_NAMES)


FEATURE_NAMES: tuple[str, ...] = tuple(f.name for f in fields(FeatureVector))
FEATURE_ARITY = len(FEATURE_NAMES)
assert FEATURE_ARITY == 22


@dataclass(frozen=True, slots=True)
class EscalationRisk:
    """Classifier confidence for the positive class as a 0-100 percentage.

    A ticket is predicted to crit exactly when its risk is strictly above
    50.
    """

    er: int
    predicted_crit: bool

    def __post_init__(self) -> None:
        if not (0 <= self.er <= 100):
            raise ValueError(f"escalation risk out of range [0,100]: {self.er}")
        if self.predicted_crit != (self.er > 50):
            raise ValueError("predicted_crit must equal (er > 50)")

    @classmethod
    def from_confidence(cls, confidence: float) -> "EscalationRisk":
        if not (0.0 <= confidence <= 1.0):
            raise ValueError(f"confidence out of range [0,1]: {confidence}")
        er = int(round(confidence * 100))
        return cls(er=er, predicted_crit=er > 50)
