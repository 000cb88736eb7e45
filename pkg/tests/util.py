"""Builders for hand-crafted tickets and corpora used across test modules."""

from __future__ import annotations

from escalade.domain import EscalationRecord, EventKind, TicketEvent
from escalade.ingest import Corpus, build_corpus


def ev(
    ticket_id: str,
    seq: int,
    ts: int,
    kind: EventKind,
    actor: str = "cust-1",
    severity: int | None = None,
    level: int | None = None,
    customer_id: str | None = None,
) -> TicketEvent:
    return TicketEvent(
        ticket_id=ticket_id,
        seq=seq,
        ts=ts,
        kind=kind,
        actor_id=actor,
        severity=severity,
        level=level,
        customer_id=customer_id,
    )


def opened(ticket_id, ts, customer="CU1", severity=3, level=1):
    return ev(
        ticket_id, 0, ts, EventKind.OPENED,
        actor=customer, severity=severity, level=level, customer_id=customer,
    )


def cmsg(ticket_id, seq, ts, customer="CU1"):
    return ev(ticket_id, seq, ts, EventKind.CUSTOMER_MESSAGE, actor=customer)


def smsg(ticket_id, seq, ts, actor="S1"):
    return ev(ticket_id, seq, ts, EventKind.SUPPORT_MESSAGE, actor=actor)


def sev(ticket_id, seq, ts, severity, customer="CU1"):
    return ev(ticket_id, seq, ts, EventKind.SEVERITY_CHANGE, actor=customer, severity=severity)


def own(ticket_id, seq, ts, level, actor="S1"):
    return ev(ticket_id, seq, ts, EventKind.OWNERSHIP_CHANGE, actor=actor, level=level)


def closed(ticket_id, seq, ts, customer="CU1"):
    return ev(ticket_id, seq, ts, EventKind.CLOSED, actor=customer)


def record(critsit_id, opened_at, *ticket_ids) -> EscalationRecord:
    return EscalationRecord(
        critsit_id=critsit_id, opened_at=opened_at, attached_ticket_ids=frozenset(ticket_ids)
    )


def simple_ticket_events(ticket_id="T1", customer="CU1", base_ts=1000, n_msgs=2):
    """Opened, n message exchanges, closed."""
    events = [opened(ticket_id, base_ts, customer)]
    ts = base_ts
    for i in range(n_msgs):
        ts += 100
        events.append(cmsg(ticket_id, len(events), ts, customer))
        ts += 50
        events.append(smsg(ticket_id, len(events), ts))
    events.append(closed(ticket_id, len(events), ts + 500, customer))
    return events


def oracle_corpus() -> Corpus:
    """The hand-replayed fixture: customer CU1 with history, plus ticket T1.

    CU1's history before T1 opens at ts=100000:
      TA: opened 50000, one support message, closed 60000 (avg response 0).
      TB: opened 70000, msg at 70010 answered at 70110, closed 80000
          (avg response 100).
      TC: opened 90000, still open.
      TD: opened 40000, msg at 40010 answered at 40210, closed 49000
          (avg response 200); escalated via record C1 opened at 45000.
      TE: opened 85000, closed 86000, no messages (avg response 0).
    So at T1's open: 4 closed tickets, 1 closed escalation (ratio 0.25),
    expected response (0+100+200+0)/4 = 75. A second customer CU2 owns TZ
    (closed, no responses); corpus global mean response = 300/5 = 60.
    """
    events = [
        opened("TA", 50000, "CU1"),
        smsg("TA", 1, 50100),
        closed("TA", 2, 60000),
        opened("TB", 70000, "CU1"),
        cmsg("TB", 1, 70010),
        smsg("TB", 2, 70110),
        closed("TB", 3, 80000),
        opened("TC", 90000, "CU1"),
        smsg("TC", 1, 90120),
        opened("TD", 40000, "CU1"),
        cmsg("TD", 1, 40010),
        smsg("TD", 2, 40210),
        closed("TD", 3, 49000),
        opened("TE", 85000, "CU1"),
        closed("TE", 1, 86000),
        opened("TZ", 30000, "CU2"),
        closed("TZ", 1, 31000, "CU2"),
        # the ticket under test: T1
        opened("T1", 100000, "CU1", severity=4, level=1),
        cmsg("T1", 1, 100010),
        cmsg("T1", 2, 100020),
        smsg("T1", 3, 100050, actor="S9"),
        sev("T1", 4, 100100, severity=1),
        own("T1", 5, 102880, level=2, actor="S9"),
    ]
    return build_corpus(events, [record("C1", 45000, "TD")])
