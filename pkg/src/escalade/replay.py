"""Single-pass accumulation of per-ticket observable state.

The feature engine computes every event-derived feature by replaying a
ticket's event prefix through one :class:`EventAccumulator`. Ingest uses
the same accumulator to precompute each closed ticket's lifetime average
response time for customer-profile lookups. Keeping one scanner guarantees
the two paths can never disagree about message pairing or severity
bookkeeping.
"""

from __future__ import annotations

from .domain import MINUTES_PER_DAY, EventKind, TicketEvent


class EventAccumulator:
    """Running aggregates over a ticket's event stream.

    Feed events in seq order via :meth:`push`; read the aggregates at any
    point. Response pairing: each maximal run of customer messages (runs
    are tracked over message events only; severity or ownership changes do
    not break a run) is answered by the first support message that follows
    it, and the response time is measured from the *first* message of the
    run -- the moment the customer started waiting.
    """

    def __init__(self) -> None:
        self.n_events = 0
        self.opened_ts: int | None = None
        self.initial_severity: int | None = None
        self.current_severity: int | None = None
        self.current_level: int | None = None
        self.severity_increases = 0
        self.severity_decreases = 0
        self.sev_to_1_transitions = 0
        self.support_actors: set[str] = set()
        self.first_support_ts: int | None = None
        self.response_pair_count = 0
        self.response_total_min = 0.0
        self.last_contact_ts: int | None = None
        self.last_ts: int | None = None
        self._open_run_start: int | None = None

    def push(self, event: TicketEvent) -> None:
        self.n_events += 1
        self.last_ts = event.ts
        kind = event.kind
        if kind is EventKind.OPENED:
            self.opened_ts = event.ts
            self.initial_severity = event.severity
            self.current_severity = event.severity
            self.current_level = event.level
        elif kind is EventKind.CUSTOMER_MESSAGE:
            self.last_contact_ts = event.ts
            if self._open_run_start is None:
                self._open_run_start = event.ts
        elif kind is EventKind.SUPPORT_MESSAGE:
            self.last_contact_ts = event.ts
            self.support_actors.add(event.actor_id)
            if self.first_support_ts is None:
                self.first_support_ts = event.ts
            if self._open_run_start is not None:
                self.response_pair_count += 1
                self.response_total_min += event.ts - self._open_run_start
                self._open_run_start = None
        elif kind is EventKind.SEVERITY_CHANGE:
            old = self.current_severity
            new = event.severity
            assert old is not None and new is not None
            if new < old:
                self.severity_increases += 1
                if new == 1:
                    self.sev_to_1_transitions += 1
            elif new > old:
                self.severity_decreases += 1
            self.current_severity = new
        elif kind is EventKind.OWNERSHIP_CHANGE:
            self.current_level = event.level

    # -- derived aggregates ------------------------------------------------

    @property
    def as_of(self) -> int:
        assert self.last_ts is not None, "no events pushed"
        return self.last_ts

    def days_open(self) -> float:
        assert self.opened_ts is not None
        return (self.as_of - self.opened_ts) / MINUTES_PER_DAY

    def avg_response_min(self) -> float:
        """Mean response time over completed pairs; 0 when none exist yet."""
        if self.response_pair_count == 0:
            return 0.0
        return self.response_total_min / self.response_pair_count

    def time_until_first_contact_min(self) -> float:
        """Minutes from open until the first support message.

        Before any support contact the customer is still waiting, so the
        value is the elapsed time since open -- keeping the feature
        continuous instead of jumping from a sentinel.
        """
        assert self.opened_ts is not None
        if self.first_support_ts is not None:
            return float(self.first_support_ts - self.opened_ts)
        return float(self.as_of - self.opened_ts)

    def days_since_last_contact(self) -> float:
        """Days since the latest message in either direction.

        Opening the ticket is the customer's initial contact, so a ticket
        with no messages yet measures from its open timestamp.
        """
        assert self.opened_ts is not None
        anchor = self.last_contact_ts if self.last_contact_ts is not None else self.opened_ts
        return (self.as_of - anchor) / MINUTES_PER_DAY


def replay(events) -> EventAccumulator:
    """Accumulate a full event sequence and return the accumulator."""
    acc = EventAccumulator()
    for event in events:
        acc.push(event)
    return acc
