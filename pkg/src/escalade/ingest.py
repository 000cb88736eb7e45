"""Parsing and validation of event logs and escalation records.

Wire formats (both UTF-8 JSON lines, one record per line):

* Event log: ``ticket_id`` (str), ``seq`` (int), ``ts`` (int, epoch
  minutes), ``kind`` (one of ``opened``, ``customer_msg``, ``support_msg``,
  ``severity_change``, ``ownership_change``, ``closed``), ``actor_id``
  (str), plus ``severity`` (int 1-4) on opened/severity_change, ``level``
  (int 0-3) on opened/ownership_change, and ``customer_id`` (str) on
  opened only.
* Escalation log: ``critsit_id`` (str), ``opened_at`` (int), ``ticket_ids``
  (nonempty array of str).

Unknown extra fields are ignored and counted as warnings.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .domain import (
    EscalationRecord,
    EscalationType,
    EventKind,
    SupportTicket,
    TicketEvent,
    classify_escalation_type,
)
from .errors import CorpusError, SchemaError
from .replay import replay

logger = logging.getLogger(__name__)

_EVENT_FIELDS = {"ticket_id", "seq", "ts", "kind", "actor_id", "severity", "level", "customer_id"}
_RECORD_FIELDS = {"critsit_id", "opened_at", "ticket_ids"}
_KINDS = {k.value: k for k in EventKind}


@dataclass
class ParseStats:
    """Counters accumulated while parsing; useful for schema debugging."""

    lines: int = 0
    unknown_field_count: int = 0
    unknown_fields_seen: set[str] = field(default_factory=set)


def _require(obj: dict, key: str, typ: type, line_no: int, context: str):
    if key not in obj:
        raise SchemaError(f"missing required field {key!r} for {context}", line_no)
    value = obj[key]
    if not isinstance(value, typ) or isinstance(value, bool):
        raise SchemaError(
            f"field {key!r} must be {typ.__name__}, got {type(value).__name__}", line_no
        )
    return value


def _load_line(raw: str, line_no: int) -> dict:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON ({exc.msg})", line_no) from exc
    if not isinstance(obj, dict):
        raise SchemaError("record must be a JSON object", line_no)
    return obj


def parse_event_log(lines, stats: ParseStats | None = None) -> list[TicketEvent]:
    """Parse a stream of event-log lines, in file order.

    Raises :class:`SchemaError` carrying the 1-based line number on the
    first malformed or invalid line.
    """
    stats = stats if stats is not None else ParseStats()
    events: list[TicketEvent] = []
    for line_no, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        stats.lines += 1
        obj = _load_line(raw, line_no)

        kind_name = _require(obj, "kind", str, line_no, "event")
        kind = _KINDS.get(kind_name)
        if kind is None:
            raise SchemaError(f"unknown kind {kind_name!r}", line_no)

        ticket_id = _require(obj, "ticket_id", str, line_no, "event")
        seq = _require(obj, "seq", int, line_no, f"kind {kind_name!r}")
        ts = _require(obj, "ts", int, line_no, f"kind {kind_name!r}")
        actor_id = _require(obj, "actor_id", str, line_no, f"kind {kind_name!r}")

        severity = level = customer_id = None
        if kind in (EventKind.OPENED, EventKind.SEVERITY_CHANGE):
            severity = _require(obj, "severity", int, line_no, f"kind {kind_name!r}")
        if kind in (EventKind.OPENED, EventKind.OWNERSHIP_CHANGE):
            level = _require(obj, "level", int, line_no, f"kind {kind_name!r}")
        if kind is EventKind.OPENED:
            customer_id = _require(obj, "customer_id", str, line_no, f"kind {kind_name!r}")

        unknown = set(obj) - _EVENT_FIELDS
        if unknown:
            stats.unknown_field_count += len(unknown)
            stats.unknown_fields_seen |= unknown

        try:
            events.append(
                TicketEvent(
                    ticket_id=ticket_id,
                    seq=seq,
                    ts=ts,
                    kind=kind,
                    actor_id=actor_id,
                    severity=severity,
                    level=level,
                    customer_id=customer_id,
                )
            )
        except ValueError as exc:
            raise SchemaError(str(exc), line_no) from exc
    if stats.unknown_field_count:
        logger.warning(
            "ignored %d unknown field occurrence(s) in event log: %s",
            stats.unknown_field_count,
            ", ".join(sorted(stats.unknown_fields_seen)),
        )
    return events


def parse_escalation_log(lines, stats: ParseStats | None = None) -> list[EscalationRecord]:
    """Parse a stream of escalation-record lines, in file order."""
    stats = stats if stats is not None else ParseStats()
    records: list[EscalationRecord] = []
    for line_no, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        stats.lines += 1
        obj = _load_line(raw, line_no)
        critsit_id = _require(obj, "critsit_id", str, line_no, "escalation record")
        opened_at = _require(obj, "opened_at", int, line_no, "escalation record")
        ticket_ids = _require(obj, "ticket_ids", list, line_no, "escalation record")
        if not ticket_ids or not all(isinstance(t, str) for t in ticket_ids):
            raise SchemaError("field 'ticket_ids' must be a nonempty array of strings", line_no)

        unknown = set(obj) - _RECORD_FIELDS
        if unknown:
            stats.unknown_field_count += len(unknown)
            stats.unknown_fields_seen |= unknown

        records.append(
            EscalationRecord(
                critsit_id=critsit_id,
                opened_at=opened_at,
                attached_ticket_ids=frozenset(ticket_ids),
            )
        )
    if stats.unknown_field_count:
        logger.warning(
            "ignored %d unknown field occurrence(s) in escalation log: %s",
            stats.unknown_field_count,
            ", ".join(sorted(stats.unknown_fields_seen)),
        )
    return records


# -- serialization (inverse of the parsers; used by the generator) ----------


def event_to_dict(event: TicketEvent) -> dict:
    obj: dict = {
        "ticket_id": event.ticket_id,
        "seq": event.seq,
        "ts": event.ts,
        "kind": event.kind.value,
        "actor_id": event.actor_id,
    }
    if event.severity is not None:
        obj["severity"] = event.severity
    if event.level is not None:
        obj["level"] = event.level
    if event.customer_id is not None:
        obj["customer_id"] = event.customer_id
    return obj


def record_to_dict(record: EscalationRecord) -> dict:
    return {
        "critsit_id": record.critsit_id,
        "opened_at": record.opened_at,
        "ticket_ids": sorted(record.attached_ticket_ids),
    }


def event_log_lines(events) -> list[str]:
    return [json.dumps(event_to_dict(e), separators=(",", ":")) for e in events]


def escalation_log_lines(records) -> list[str]:
    return [json.dumps(record_to_dict(r), separators=(",", ":")) for r in records]


# -- corpus ------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TicketStats:
    """Per-ticket lifecycle summary used by customer-profile lookups."""

    ticket_id: str
    customer_id: str
    opened_ts: int
    closed_ts: int | None
    escalated: bool
    attach_ts: int | None  # earliest CritSit open among records naming the ticket
    avg_response_min: float  # lifetime average over all events


@dataclass(frozen=True)
class Corpus:
    """A validated, cross-indexed set of tickets and escalation records.

    Immutable after construction; shares freely across threads. The
    ``customers`` index maps a customer to their ticket ids ordered by open
    timestamp, and ``global_mean_response`` is the corpus-wide mean of
    closed tickets' average response times (the cold-start fallback for the
    expected-response profile features).
    """

    tickets: dict[str, SupportTicket]
    escalations: tuple[EscalationRecord, ...]
    customers: dict[str, tuple[str, ...]]
    stats: dict[str, TicketStats]
    global_mean_response: float

    def ticket(self, ticket_id: str) -> SupportTicket:
        try:
            return self.tickets[ticket_id]
        except KeyError:
            raise CorpusError(f"unknown ticket {ticket_id!r}") from None


def _order_ticket_events(ticket_id: str, evts: list[TicketEvent]) -> list[TicketEvent]:
    n = len(evts)
    seqs = sorted(e.seq for e in evts)
    if len(set(seqs)) != n:
        dup = next(s for i, s in enumerate(seqs[1:], 1) if s == seqs[i - 1])
        raise CorpusError(f"duplicate seq {dup} in ticket {ticket_id!r}")
    if seqs != list(range(n)):
        missing = next(i for i, s in enumerate(seqs) if s != i)
        raise CorpusError(f"seq gap in ticket {ticket_id!r}: missing seq {missing}")
    ordered = sorted(evts, key=lambda e: (e.ts, e.seq))
    if [e.seq for e in ordered] != list(range(n)):
        by_seq = sorted(evts, key=lambda e: e.seq)
        bad = next(e for i, e in enumerate(by_seq[1:], 1) if e.ts < by_seq[i - 1].ts)
        raise CorpusError(
            f"timestamp regression in ticket {ticket_id!r} at seq {bad.seq}"
        )
    if ordered[0].kind is not EventKind.OPENED:
        raise CorpusError(f"ticket {ticket_id!r} has no Opened event at seq 0")
    for i, e in enumerate(ordered):
        if e.kind is EventKind.OPENED and i > 0:
            raise CorpusError(f"ticket {ticket_id!r} has a second Opened event at seq {e.seq}")
        if e.kind is EventKind.CLOSED and i != n - 1:
            raise CorpusError(f"ticket {ticket_id!r} has a Closed event before seq {n - 1}")
    return ordered


def build_corpus(events: list[TicketEvent], records: list[EscalationRecord]) -> Corpus:
    """Group, validate, and cross-index parsed events and records.

    Deterministic and insensitive to input event order: any permutation of
    ``events`` yields an identical corpus.
    """
    grouped: dict[str, list[TicketEvent]] = {}
    for event in events:
        grouped.setdefault(event.ticket_id, []).append(event)

    seen_record_ids: set[str] = set()
    for record in records:
        if record.critsit_id in seen_record_ids:
            raise CorpusError(f"duplicate escalation record id {record.critsit_id!r}")
        seen_record_ids.add(record.critsit_id)
        for tid in record.attached_ticket_ids:
            if tid not in grouped:
                raise CorpusError(
                    f"dangling escalation attachment: record {record.critsit_id!r} "
                    f"references unknown ticket {tid!r}"
                )
    record_set = frozenset(records)
    attach_ts: dict[str, int] = {}
    for record in records:
        for tid in record.attached_ticket_ids:
            prev = attach_ts.get(tid)
            if prev is None or record.opened_at < prev:
                attach_ts[tid] = record.opened_at

    tickets: dict[str, SupportTicket] = {}
    stats: dict[str, TicketStats] = {}
    response_sum = 0.0
    response_n = 0
    for ticket_id in sorted(grouped):
        ordered = _order_ticket_events(ticket_id, grouped[ticket_id])
        customer_id = ordered[0].customer_id
        assert customer_id is not None
        esc_type = classify_escalation_type(ticket_id, record_set)
        ticket = SupportTicket(
            ticket_id=ticket_id,
            customer_id=customer_id,
            events=tuple(ordered),
            escalated=esc_type is not EscalationType.NONE,
            escalation_type=esc_type,
        )
        tickets[ticket_id] = ticket
        acc = replay(ordered)
        st = TicketStats(
            ticket_id=ticket_id,
            customer_id=customer_id,
            opened_ts=ticket.opened_ts,
            closed_ts=ticket.closed_ts,
            escalated=ticket.escalated,
            attach_ts=attach_ts.get(ticket_id),
            avg_response_min=acc.avg_response_min(),
        )
        stats[ticket_id] = st
        if st.closed_ts is not None:
            response_sum += st.avg_response_min
            response_n += 1

    by_customer: dict[str, list[str]] = {}
    for ticket_id, st in stats.items():
        by_customer.setdefault(st.customer_id, []).append(ticket_id)
    customers = {
        cid: tuple(sorted(tids, key=lambda t: (stats[t].opened_ts, t)))
        for cid, tids in sorted(by_customer.items())
    }

    return Corpus(
        tickets=tickets,
        escalations=tuple(sorted(records, key=lambda r: r.critsit_id)),
        customers=customers,
        stats=stats,
        global_mean_response=response_sum / response_n if response_n else 0.0,
    )


def filter_cascades(corpus: Corpus) -> Corpus:
    """Drop every cascade-typed ticket and every multi-attachment record.

    The result contains only single-attachment escalations, so every
    remaining escalated ticket is a known-real cause. Cascade tickets are
    removed outright rather than relabeled negative: they did experience an
    escalation, and keeping them would inject known label noise.
    """
    kept_events: list[TicketEvent] = []
    for ticket in corpus.tickets.values():
        if ticket.escalation_type is not EscalationType.CASCADE:
            kept_events.extend(ticket.events)
    kept_records = [r for r in corpus.escalations if len(r.attached_ticket_ids) == 1]
    return build_corpus(kept_events, kept_records)
