"""Live triage: open tickets ranked by escalation risk, with analyst input.

The store keeps every ticket's event stream in memory, re-scores a ticket
whenever its events change, and tracks three numbers per ticket:

* ER -- the model's current escalation risk (0-100);
* CER -- change in ER since the previous update (-100..100);
* MER -- the team's manually recorded risk (0-100), one shared value per
  ticket, last write wins with the author recorded.

Durability is an append-only journal of event batches and MER writes,
fsynced before a write is acknowledged and replayed at startup; it doubles
as an audit log of analyst judgments. An optional bootstrap corpus
(event/escalation files) is loaded before replay and is not journaled.

Scoring is synchronous on ingest: profile features are frozen at ticket
creation from strictly earlier history, so appending new events never
changes other tickets' vectors, and only the tickets touched by a batch
need re-featurizing. (The corpus-wide cold-start fallback for expected
response time does drift as tickets close; a stored ER reflects the
fallback at its own update time.)
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .domain import FEATURE_NAMES, EventKind, FeatureVector, TicketEvent
from .errors import CorpusError, SchemaError, ServiceStateError
from .features import ProfileWindow, Snapshot, feature_vector
from .forest import ForestModel
from .ingest import (
    Corpus,
    build_corpus,
    event_to_dict,
    parse_escalation_log,
    parse_event_log,
)

logger = logging.getLogger(__name__)

SORT_KEYS = ("er", "cer", "mer")


@dataclass(frozen=True)
class MerWrite:
    value: int
    author: str
    ts: int


@dataclass(frozen=True)
class TriageEntry:
    """One ticket's triage state, as exposed by the API."""

    ticket_id: str
    current_er: int
    previous_er: int | None
    cer: int | None
    mer: int | None
    mer_set_by: str | None
    mer_set_at: int | None
    feature_snapshot: FeatureVector
    last_event_ts: int
    open: bool

    @property
    def predicted_crit(self) -> bool:
        return self.current_er > 50

    def to_dict(self) -> dict:
        return {
            "ticket_id": self.ticket_id,
            "current_er": self.current_er,
            "predicted_crit": self.predicted_crit,
            "previous_er": self.previous_er,
            "cer": self.cer,
            "mer": self.mer,
            "mer_set_by": self.mer_set_by,
            "mer_set_at": self.mer_set_at,
            "last_event_ts": self.last_event_ts,
            "open": self.open,
            "days_since_last_contact": self.feature_snapshot.days_since_last_contact,
            "ownership_level": self.feature_snapshot.pmr_ownership_level,
        }


class _TicketState:
    __slots__ = ("current_er", "previous_er", "mer", "er_history", "mer_history", "snapshot")

    def __init__(self) -> None:
        self.current_er: int = 0
        self.previous_er: int | None = None
        self.mer: MerWrite | None = None
        self.er_history: list[tuple[int, int]] = []  # (event ts, er)
        self.mer_history: list[MerWrite] = []
        self.snapshot: FeatureVector | None = None


class TriageStore:
    """Event store, scorer, and journal. All mutations are serialized."""

    def __init__(
        self,
        model: ForestModel,
        window: ProfileWindow | None = None,
        clock=None,
    ) -> None:
        self.model = model
        self.window = window or ProfileWindow()
        self._clock = clock or (lambda: int(time.time() // 60))
        self._lock = threading.RLock()
        self._events: dict[str, list[TicketEvent]] = {}
        self._records = []
        self._states: dict[str, _TicketState] = {}
        self._corpus: Corpus | None = None
        self._journal_fp = None
        self._journal_path: Path | None = None

    # -- bootstrap and persistence ------------------------------------------

    def load_corpus(self, corpus: Corpus) -> None:
        """Seed the store from an already-built corpus (not journaled)."""
        with self._lock:
            for ticket in corpus.tickets.values():
                self._events[ticket.ticket_id] = list(ticket.events)
                self._states[ticket.ticket_id] = _TicketState()
            self._records = list(corpus.escalations)
            self._corpus = None
            self._rescore(sorted(self._events))

    def open_journal(self, path: str | Path) -> None:
        """Replay an existing journal, then append to it from now on."""
        journal_path = Path(path)
        if journal_path.exists():
            with journal_path.open("r", encoding="utf-8") as fp:
                for line_no, raw in enumerate(fp, start=1):
                    if not raw.strip():
                        continue
                    try:
                        entry = json.loads(raw)
                    except json.JSONDecodeError as exc:
                        raise ServiceStateError(
                            f"corrupt journal line {line_no}: {exc.msg}"
                        ) from exc
                    self._apply_journal_entry(entry, line_no)
        journal_path.parent.mkdir(parents=True, exist_ok=True)
        self._journal_fp = journal_path.open("a", encoding="utf-8")
        self._journal_path = journal_path

    def close(self) -> None:
        if self._journal_fp is not None:
            self._journal_fp.close()
            self._journal_fp = None

    def _apply_journal_entry(self, entry: dict, line_no: int) -> None:
        kind = entry.get("kind")
        if kind == "events":
            events = [self._event_from_dict(e, line_no) for e in entry["events"]]
            self.ingest_events(events, _journal=False)
        elif kind == "mer":
            self.set_mer(
                entry["ticket_id"],
                entry["value"],
                entry["author"],
                _ts=entry["ts"],
                _journal=False,
            )
        else:
            raise ServiceStateError(f"corrupt journal line {line_no}: unknown kind {kind!r}")

    @staticmethod
    def _event_from_dict(obj: dict, line_no: int) -> TicketEvent:
        try:
            return parse_event_log([json.dumps(obj)])[0]
        except SchemaError as exc:
            raise ServiceStateError(f"corrupt journal line {line_no}: {exc}") from exc

    def _journal_write(self, entry: dict) -> None:
        if self._journal_fp is None:
            return
        self._journal_fp.write(json.dumps(entry, separators=(",", ":")) + "\n")
        self._journal_fp.flush()
        os.fsync(self._journal_fp.fileno())

    # -- scoring --------------------------------------------------------------

    def _corpus_view(self) -> Corpus:
        if self._corpus is None:
            flat = [e for events in self._events.values() for e in events]
            self._corpus = build_corpus(flat, self._records)
        return self._corpus

    def _rescore(self, ticket_ids: list[str]) -> None:
        if not ticket_ids:
            return
        corpus = self._corpus_view()
        vectors = []
        for tid in ticket_ids:
            ticket = corpus.tickets[tid]
            last = len(ticket.events) - 1
            snap = Snapshot(ticket_id=tid, upto_seq=last, as_of=ticket.events[last].ts)
            vectors.append(feature_vector(corpus, ticket, snap, self.window))
        x = np.array([v.as_tuple() for v in vectors], dtype=np.float64)
        conf = self.model.confidences(x)
        ers = np.round(conf * 100).astype(int)
        for tid, vec, er in zip(ticket_ids, vectors, ers):
            state = self._states[tid]
            state.previous_er = state.current_er if state.snapshot is not None else None
            state.current_er = int(er)
            state.snapshot = vec
            state.er_history.append((self._events[tid][-1].ts, int(er)))

    # -- operations -------------------------------------------------------------

    def ingest_events(self, events: list[TicketEvent], _journal: bool = True) -> dict:
        """Append a batch, re-score affected tickets, return an update summary."""
        if not events:
            return {"updated": [], "closed": [], "created": []}
        with self._lock:
            grouped: dict[str, list[TicketEvent]] = {}
            for e in events:
                grouped.setdefault(e.ticket_id, []).append(e)
            created = []
            for tid, batch in grouped.items():
                batch.sort(key=lambda e: e.seq)
                existing = self._events.get(tid)
                if existing and existing[-1].kind is EventKind.CLOSED:
                    raise ServiceStateError(f"ticket {tid!r} is closed; no further events")
                next_seq = len(existing) if existing else 0
                if existing is None:
                    if batch[0].seq != 0 or batch[0].kind is not EventKind.OPENED:
                        raise ServiceStateError(
                            f"unknown ticket {tid!r}: batch must start with an opened "
                            f"event at seq 0"
                        )
                    created.append(tid)
                expected = list(range(next_seq, next_seq + len(batch)))
                got = [e.seq for e in batch]
                if got != expected:
                    raise ServiceStateError(
                        f"seq regression for ticket {tid!r}: expected {expected[0]}..."
                        f"{expected[-1]}, got {got[0]}...{got[-1]}"
                    )
                last_ts = existing[-1].ts if existing else batch[0].ts
                for i, e in enumerate(batch):
                    if e.ts < last_ts:
                        raise ServiceStateError(
                            f"timestamp regression for ticket {tid!r} at seq {e.seq}"
                        )
                    last_ts = e.ts
                    if e.kind is EventKind.OPENED and (existing or i > 0):
                        raise ServiceStateError(
                            f"ticket {tid!r}: opened event after the ticket already exists"
                        )
                    if e.kind is EventKind.CLOSED and i != len(batch) - 1:
                        raise ServiceStateError(
                            f"ticket {tid!r}: events after a closed event in one batch"
                        )

            if _journal:
                self._journal_write(
                    {"kind": "events", "events": [event_to_dict(e) for e in events]}
                )

            closed = []
            for tid, batch in grouped.items():
                bucket = self._events.setdefault(tid, [])
                bucket.extend(batch)
                self._states.setdefault(tid, _TicketState())
                if batch[-1].kind is EventKind.CLOSED:
                    closed.append(tid)
            self._corpus = None
            affected = sorted(grouped)
            self._rescore(affected)
            return {"updated": affected, "closed": sorted(closed), "created": sorted(created)}

    def set_mer(
        self,
        ticket_id: str,
        value: int,
        author: str,
        _ts: int | None = None,
        _journal: bool = True,
    ) -> TriageEntry:
        """Record the team's manual risk for an open ticket; durable once acked."""
        if not isinstance(value, int) or isinstance(value, bool) or not (0 <= value <= 100):
            raise ValueError(f"MER out of range [0,100]: {value}")
        with self._lock:
            if ticket_id not in self._events:
                raise CorpusError(f"unknown ticket {ticket_id!r}")
            if self._events[ticket_id][-1].kind is EventKind.CLOSED:
                raise ServiceStateError(f"ticket {ticket_id!r} is closed; MER is read-only")
            ts = _ts if _ts is not None else self._clock()
            if _journal:
                self._journal_write(
                    {"kind": "mer", "ticket_id": ticket_id, "value": value,
                     "author": author, "ts": ts}
                )
            write = MerWrite(value=value, author=author, ts=ts)
            state = self._states[ticket_id]
            state.mer = write
            state.mer_history.append(write)
            return self._entry(ticket_id)

    def _entry(self, ticket_id: str) -> TriageEntry:
        state = self._states[ticket_id]
        events = self._events[ticket_id]
        assert state.snapshot is not None
        cer = (
            state.current_er - state.previous_er if state.previous_er is not None else None
        )
        return TriageEntry(
            ticket_id=ticket_id,
            current_er=state.current_er,
            previous_er=state.previous_er,
            cer=cer,
            mer=state.mer.value if state.mer else None,
            mer_set_by=state.mer.author if state.mer else None,
            mer_set_at=state.mer.ts if state.mer else None,
            feature_snapshot=state.snapshot,
            last_event_ts=events[-1].ts,
            open=events[-1].kind is not EventKind.CLOSED,
        )

    def list_open(self, sort: str = "er", descending: bool = True) -> list[TriageEntry]:
        """Open tickets ordered by a triage key; absent keys sort last."""
        if sort not in SORT_KEYS:
            raise ValueError(f"sort must be one of {SORT_KEYS}, got {sort!r}")
        with self._lock:
            entries = [
                self._entry(tid)
                for tid, events in self._events.items()
                if events[-1].kind is not EventKind.CLOSED
            ]

        def key(entry: TriageEntry):
            value = {"er": entry.current_er, "cer": entry.cer, "mer": entry.mer}[sort]
            missing = value is None
            rank = 0 if missing else (-value if descending else value)
            return (missing, rank, entry.ticket_id)

        return sorted(entries, key=key)

    def get_detail(self, ticket_id: str) -> dict:
        """Entry plus event history, feature breakdown, and ER/MER history."""
        with self._lock:
            if ticket_id not in self._events:
                raise CorpusError(f"unknown ticket {ticket_id!r}")
            entry = self._entry(ticket_id)
            state = self._states[ticket_id]
            snapshot = entry.feature_snapshot
            return {
                "entry": entry.to_dict(),
                "events": [event_to_dict(e) for e in self._events[ticket_id]],
                "features": {name: getattr(snapshot, name) for name in FEATURE_NAMES},
                "er_history": [{"ts": ts, "er": er} for ts, er in state.er_history],
                "mer_history": [
                    {"value": w.value, "author": w.author, "ts": w.ts}
                    for w in state.mer_history
                ],
            }

    def entry(self, ticket_id: str) -> TriageEntry:
        with self._lock:
            if ticket_id not in self._events:
                raise CorpusError(f"unknown ticket {ticket_id!r}")
            return self._entry(ticket_id)


# -- HTTP layer -----------------------------------------------------------------


class MerBody(BaseModel):
    value: int
    author: str


def create_app(store: TriageStore) -> FastAPI:
    """FastAPI app over a store; errors come back as JSON {code, message}."""
    app = FastAPI(title="escalade triage service", docs_url=None, redoc_url=None)

    def error(status: int, code: str, message: str) -> JSONResponse:
        return JSONResponse(status_code=status, content={"code": code, "message": message})

    @app.exception_handler(CorpusError)
    async def _not_found(_req, exc):
        return error(404, "not_found", str(exc))

    @app.exception_handler(ServiceStateError)
    async def _conflict(_req, exc):
        return error(409, "state_conflict", str(exc))

    @app.exception_handler(ValueError)
    async def _bad_value(_req, exc):
        return error(400, "validation", str(exc))

    @app.exception_handler(SchemaError)
    async def _bad_schema(_req, exc):
        return error(400, "schema", str(exc))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/model")
    def model_meta():
        return {
            "format_version": store.model.format_version,
            "n_trees": store.model.n_trees,
            "feature_arity": store.model.feature_arity,
            "feature_names": list(store.model.feature_names),
            "config": store.model.config.to_dict(),
            "window_months": store.window.months,
        }

    @app.get("/tickets")
    def list_tickets(sort: str = "er", order: str = "desc"):
        if order not in ("asc", "desc"):
            raise ValueError(f"order must be 'asc' or 'desc', got {order!r}")
        entries = store.list_open(sort=sort, descending=order == "desc")
        return {"tickets": [e.to_dict() for e in entries]}

    @app.get("/tickets/{ticket_id}")
    def ticket_detail(ticket_id: str):
        return store.get_detail(ticket_id)

    @app.put("/tickets/{ticket_id}/mer")
    def put_mer(ticket_id: str, body: MerBody):
        entry = store.set_mer(ticket_id, body.value, body.author)
        return entry.to_dict()

    @app.post("/events")
    async def post_events(request: Request):
        raw = (await request.body()).decode("utf-8")
        events = parse_event_log(raw.splitlines())
        summary = store.ingest_events(events)
        return {
            "updated": len(summary["updated"]),
            "tickets": summary["updated"],
            "closed": summary["closed"],
            "created": summary["created"],
        }

    return app


def build_store(
    model_path: str | Path,
    journal_path: str | Path | None = None,
    events_path: str | Path | None = None,
    crits_path: str | Path | None = None,
    window: ProfileWindow | None = None,
) -> TriageStore:
    """Assemble a store from file paths (used by the CLI and tests)."""
    from .forest import load_model

    model = load_model(model_path)
    store = TriageStore(model, window=window)
    if events_path is not None:
        with open(events_path, encoding="utf-8") as fp:
            events = parse_event_log(fp)
        records = []
        if crits_path is not None:
            with open(crits_path, encoding="utf-8") as fp:
                records = parse_escalation_log(fp)
        store.load_corpus(build_corpus(events, records))
    if journal_path is not None:
        store.open_journal(journal_path)
    return store
