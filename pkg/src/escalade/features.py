"""Snapshot expansion and the 22-field feature vector.

A ticket with n events yields n snapshots; snapshot i sees events 0..i and
nothing else, so every feature is strictly backward-looking by
construction: the vector for snapshot i of a ticket equals the vector of
the same ticket truncated after event i.

Customer-profile features are frozen at ticket creation: they are computed
against the customer's history strictly before the ticket's open
timestamp, and therefore stay constant across all snapshots of one ticket.
Windowed variants look back a configurable number of 30-day months.

Sentinel rules for undefined sub-terms (all chosen to keep the vector
fully populated at arity 22, with no missing-value indicators):

* no support contact yet -> time_until_first_contact is the elapsed time
  since open (the customer's live waiting time);
* no completed response pair -> average response time is 0, and the
  expectation-minus-average difference uses expected - 0;
* no closed history -> critsit_to_pmr_ratio is 0 (a new customer carries
  no evidence of escalating);
* no prior closed tickets -> expected response falls back to the
  corpus-wide mean over closed tickets (both the lifetime and the windowed
  expectation).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .domain import FEATURE_NAMES, FeatureVector, SupportTicket
from .errors import CorpusError
from .ingest import Corpus
from .replay import EventAccumulator, replay

MINUTES_PER_MONTH = 30 * 1440  # fixed 30-day months; calendar months add nothing here

DEFAULT_WINDOW_MONTHS = 6


@dataclass(frozen=True, slots=True)
class Snapshot:
    """A ticket prefix: events 0..upto_seq, as of that event's timestamp."""

    ticket_id: str
    upto_seq: int
    as_of: int


@dataclass(frozen=True, slots=True)
class ProfileWindow:
    """Look-back horizon, in 30-day months, for the windowed profile fields."""

    months: int = DEFAULT_WINDOW_MONTHS

    def __post_init__(self) -> None:
        if self.months < 1:
            raise ValueError(f"window must be >= 1 month, got {self.months}")

    @property
    def minutes(self) -> int:
        return self.months * MINUTES_PER_MONTH


@dataclass(frozen=True, slots=True)
class ProfileFeatures:
    """The 11 customer-history fields, identical across a ticket's snapshots."""

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


def snapshots(ticket: SupportTicket) -> list[Snapshot]:
    """One snapshot per event, in order."""
    return [
        Snapshot(ticket_id=ticket.ticket_id, upto_seq=i, as_of=e.ts)
        for i, e in enumerate(ticket.events)
    ]


def _prefix(ticket: SupportTicket, snap: Snapshot) -> EventAccumulator:
    if snap.ticket_id != ticket.ticket_id:
        raise ValueError(f"snapshot {snap.ticket_id!r} does not belong to {ticket.ticket_id!r}")
    if not (0 <= snap.upto_seq < len(ticket.events)):
        raise ValueError(f"snapshot seq {snap.upto_seq} out of range for {ticket.ticket_id!r}")
    return replay(ticket.events[: snap.upto_seq + 1])


def basic_features(ticket: SupportTicket, snap: Snapshot) -> tuple[int, float, int]:
    """(number_of_entries, days_open, pmr_ownership_level)."""
    acc = _prefix(ticket, snap)
    assert acc.current_level is not None
    return acc.n_events, acc.days_open(), acc.current_level


def process_features(ticket: SupportTicket, snap: Snapshot) -> tuple[int, int, int, int]:
    """(num_support_contacts, severity increases, decreases, X-to-sev1 transitions).

    A severity *increase* is a numeric decrease of the value (toward 1,
    i.e. the issue becoming more urgent); this inverts the naive reading.
    """
    acc = _prefix(ticket, snap)
    return (
        len(acc.support_actors),
        acc.severity_increases,
        acc.severity_decreases,
        acc.sev_to_1_transitions,
    )


def time_features(
    ticket: SupportTicket, snap: Snapshot, profile: ProfileFeatures
) -> tuple[float, float, float, float]:
    """(time_until_first_contact, avg_support_response, expected-minus-avg, days_since_last_contact)."""
    acc = _prefix(ticket, snap)
    avg = acc.avg_response_min()
    return (
        acc.time_until_first_contact_min(),
        avg,
        profile.expected_response_min - avg,
        acc.days_since_last_contact(),
    )


def profile_features(
    corpus: Corpus, customer_id: str, as_of: int, window: ProfileWindow
) -> ProfileFeatures:
    """Customer history strictly before ``as_of``.

    ``as_of`` is the open timestamp of the ticket being featurized, so the
    ticket never counts itself. A ticket figures in CritSit counts only
    once its escalation record has opened (attach time strictly before
    ``as_of``); anything later is the future and must stay invisible.
    """
    ticket_ids = corpus.customers.get(customer_id)
    if ticket_ids is None:
        raise CorpusError(f"unknown customer {customer_id!r}")
    lo = as_of - window.minutes

    n_closed = 0
    n_closed_crit = 0
    n_open = 0
    n_opened_w = 0
    n_closed_w = 0
    n_crit_open = 0
    n_crit_opened_w = 0
    n_crit_closed_w = 0
    resp_sum = 0.0
    resp_w_sum = 0.0
    resp_w_n = 0

    for tid in ticket_ids:
        st = corpus.stats[tid]
        closed_before = st.closed_ts is not None and st.closed_ts < as_of
        critted_before = st.attach_ts is not None and st.attach_ts < as_of
        open_at = st.opened_ts < as_of and not closed_before
        closed_in_w = st.closed_ts is not None and lo <= st.closed_ts < as_of

        if closed_before:
            n_closed += 1
            resp_sum += st.avg_response_min
            if critted_before:
                n_closed_crit += 1
        if open_at:
            n_open += 1
            if critted_before:
                n_crit_open += 1
        if lo <= st.opened_ts < as_of:
            n_opened_w += 1
        if closed_in_w:
            n_closed_w += 1
            resp_w_sum += st.avg_response_min
            resp_w_n += 1
            if critted_before:
                n_crit_closed_w += 1
        if st.attach_ts is not None and lo <= st.attach_ts < as_of:
            n_crit_opened_w += 1

    return ProfileFeatures(
        num_closed_pmrs=n_closed,
        num_closed_critsits=n_closed_crit,
        critsit_to_pmr_ratio=n_closed_crit / n_closed if n_closed else 0.0,
        expected_response_min=resp_sum / n_closed if n_closed else corpus.global_mean_response,
        num_open_pmrs=n_open,
        pmrs_opened_last_X=n_opened_w,
        pmrs_closed_last_X=n_closed_w,
        critsits_open=n_crit_open,
        critsits_opened_last_X=n_crit_opened_w,
        critsits_closed_last_X=n_crit_closed_w,
        expected_response_last_X_min=(
            resp_w_sum / resp_w_n if resp_w_n else corpus.global_mean_response
        ),
    )


def feature_vector(
    corpus: Corpus, ticket: SupportTicket, snap: Snapshot, window: ProfileWindow
) -> FeatureVector:
    """Assemble the full 22-field vector for one snapshot."""
    acc = _prefix(ticket, snap)
    prof = profile_features(corpus, ticket.customer_id, ticket.opened_ts, window)
    avg = acc.avg_response_min()
    assert acc.current_level is not None
    return FeatureVector(
        number_of_entries=acc.n_events,
        days_open=acc.days_open(),
        pmr_ownership_level=acc.current_level,
        num_support_contacts=len(acc.support_actors),
        num_severity_increases=acc.severity_increases,
        num_severity_decreases=acc.severity_decreases,
        num_sevX_to_sev1=acc.sev_to_1_transitions,
        time_until_first_contact_min=acc.time_until_first_contact_min(),
        avg_support_response_min=avg,
        diff_avg_vs_expected_min=prof.expected_response_min - avg,
        days_since_last_contact=acc.days_since_last_contact(),
        num_closed_pmrs=prof.num_closed_pmrs,
        num_closed_critsits=prof.num_closed_critsits,
        critsit_to_pmr_ratio=prof.critsit_to_pmr_ratio,
        expected_response_min=prof.expected_response_min,
        num_open_pmrs=prof.num_open_pmrs,
        pmrs_opened_last_X=prof.pmrs_opened_last_X,
        pmrs_closed_last_X=prof.pmrs_closed_last_X,
        critsits_open=prof.critsits_open,
        critsits_opened_last_X=prof.critsits_opened_last_X,
        critsits_closed_last_X=prof.critsits_closed_last_X,
        expected_response_last_X_min=prof.expected_response_last_X_min,
    )


def final_training_snapshot(corpus: Corpus, ticket: SupportTicket) -> Snapshot:
    """The one snapshot a ticket contributes as a training row.

    Negatives train on their last event. Positives train on the last event
    strictly before their CritSit opened: anything after it happened in a
    world where the escalation already existed and would leak the outcome.
    """
    attach_ts = corpus.stats[ticket.ticket_id].attach_ts
    idx = len(ticket.events) - 1
    if ticket.escalated and attach_ts is not None:
        idx = 0
        for i, e in enumerate(ticket.events):
            if e.ts < attach_ts:
                idx = i
            else:
                break
    return Snapshot(ticket_id=ticket.ticket_id, upto_seq=idx, as_of=ticket.events[idx].ts)


@dataclass(frozen=True, slots=True)
class FeatureRow:
    ticket_id: str
    upto_seq: int
    vector: FeatureVector
    label: int


def training_rows(
    corpus: Corpus, window: ProfileWindow, per_snapshot: bool = False
) -> list[FeatureRow]:
    """Feature rows for model training or export, in ticket-id order.

    Default is one row per ticket at its final training snapshot. With
    ``per_snapshot`` every snapshot up to that point contributes a row
    (sensitivity-analysis mode; labels repeat per ticket).
    """
    rows: list[FeatureRow] = []
    for ticket_id in sorted(corpus.tickets):
        ticket = corpus.tickets[ticket_id]
        label = 1 if ticket.escalated else 0
        final = final_training_snapshot(corpus, ticket)
        snaps = snapshots(ticket)[: final.upto_seq + 1] if per_snapshot else [final]
        for snap in snaps:
            vec = feature_vector(corpus, ticket, snap, window)
            rows.append(FeatureRow(ticket_id, snap.upto_seq, vec, label))
    return rows


def rows_to_matrix(rows: list[FeatureRow]) -> tuple[np.ndarray, np.ndarray]:
    """Dense float64 design matrix and uint8 label vector."""
    x = np.empty((len(rows), len(FEATURE_NAMES)), dtype=np.float64)
    y = np.empty(len(rows), dtype=np.uint8)
    for i, row in enumerate(rows):
        x[i, :] = row.vector.as_tuple()
        y[i] = row.label
    return x, y


CSV_HEADER: tuple[str, ...] = FEATURE_NAMES + ("ticket_id", "upto_seq", "label")


def write_feature_csv(rows: list[FeatureRow], fp) -> None:
    """Feature export: the 22 fields in fixed order, then id, seq, label."""
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(list(row.vector.as_tuple()) + [row.ticket_id, row.upto_seq, row.label])
