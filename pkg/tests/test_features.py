import pytest
from hypothesis import given
from hypothesis import strategies as st

from escalade.domain import FEATURE_NAMES, EscalationType, SupportTicket
from escalade.errors import CorpusError
from escalade.features import (
    CSV_HEADER,
    ProfileWindow,
    Snapshot,
    basic_features,
    feature_vector,
    final_training_snapshot,
    process_features,
    profile_features,
    snapshots,
    time_features,
    training_rows,
    write_feature_csv,
)
from escalade.ingest import build_corpus

from .util import closed, cmsg, opened, oracle_corpus, own, record, sev, smsg

W6 = ProfileWindow(6)

PROFILE_FIELDS = (
    "num_closed_pmrs",
    "num_closed_critsits",
    "critsit_to_pmr_ratio",
    "expected_response_min",
    "num_open_pmrs",
    "pmrs_opened_last_X",
    "pmrs_closed_last_X",
    "critsits_open",
    "critsits_opened_last_X",
    "critsits_closed_last_X",
    "expected_response_last_X_min",
)


@pytest.fixture(scope="module")
def corpus():
    return oracle_corpus()


def unit_corpus(*ticket_events, records=()):
    events = [e for ticket in ticket_events for e in ticket]
    return build_corpus(events, list(records))


class TestSnapshots:
    def test_one_event_one_snapshot(self, corpus):
        snaps = snapshots(corpus.tickets["TC"])
        assert len(snaps) == 2  # opened + one support message

    def test_snapshot_per_event(self, corpus):
        ticket = corpus.tickets["T1"]
        snaps = snapshots(ticket)
        assert [s.upto_seq for s in snaps] == list(range(6))
        assert [s.as_of for s in snaps] == [e.ts for e in ticket.events]

    def test_sixteen_events_sixteen_snapshots(self):
        events = [opened("TX", 0)]
        for i in range(1, 16):
            events.append(cmsg("TX", i, i * 10))
        corpus = unit_corpus(events)
        assert len(snapshots(corpus.tickets["TX"])) == 16


class TestBasicFeatures:
    def test_snapshot_zero(self, corpus):
        ticket = corpus.tickets["T1"]
        entries, days, level = basic_features(ticket, snapshots(ticket)[0])
        assert (entries, days, level) == (1, 0.0, 1)

    def test_ownership_change_example(self):
        events = [opened("TX", 0, level=2), own("TX", 1, 2880, level=3)]
        corpus = unit_corpus(events)
        ticket = corpus.tickets["TX"]
        entries, days, level = basic_features(ticket, snapshots(ticket)[1])
        assert (entries, days, level) == (2, 2.0, 3)

    def test_fractional_days(self):
        events = [opened("TX", 0), closed("TX", 1, 36 * 60)]
        corpus = unit_corpus(events)
        ticket = corpus.tickets["TX"]
        _, days, _ = basic_features(ticket, snapshots(ticket)[-1])
        assert days == 1.5


class TestProcessFeatures:
    def test_severity_path(self):
        # path 4 -> 3 -> 1 -> 2 -> 1: three moves toward 1, one away, two X-to-1
        events = [
            opened("TX", 0, severity=4),
            sev("TX", 1, 10, 3),
            sev("TX", 2, 20, 1),
            sev("TX", 3, 30, 2),
            sev("TX", 4, 40, 1),
        ]
        corpus = unit_corpus(events)
        ticket = corpus.tickets["TX"]
        contacts, inc, dec, to1 = process_features(ticket, snapshots(ticket)[-1])
        assert (contacts, inc, dec, to1) == (0, 3, 1, 2)

    def test_distinct_support_contacts(self):
        events = [
            opened("TX", 0),
            smsg("TX", 1, 10, actor="S1"),
            smsg("TX", 2, 20, actor="S1"),
            smsg("TX", 3, 30, actor="S2"),
        ]
        corpus = unit_corpus(events)
        ticket = corpus.tickets["TX"]
        assert process_features(ticket, snapshots(ticket)[-1])[0] == 2
        assert process_features(ticket, snapshots(ticket)[2])[0] == 1

    def test_no_support_messages(self, corpus):
        ticket = corpus.tickets["T1"]
        assert process_features(ticket, snapshots(ticket)[0])[0] == 0


class TestTimeFeatures:
    def _profile(self, corpus, ticket):
        return profile_features(corpus, ticket.customer_id, ticket.opened_ts, W6)

    def test_first_contact_minutes(self):
        events = [opened("TX", 0), smsg("TX", 1, 120)]
        corpus = unit_corpus(events)
        ticket = corpus.tickets["TX"]
        prof = self._profile(corpus, ticket)
        tufc = time_features(ticket, snapshots(ticket)[-1], prof)[0]
        assert tufc == 120.0

    def test_no_contact_sentinel_is_elapsed(self):
        events = [opened("TX", 0), cmsg("TX", 1, 300)]
        corpus = unit_corpus(events)
        ticket = corpus.tickets["TX"]
        prof = self._profile(corpus, ticket)
        tufc = time_features(ticket, snapshots(ticket)[-1], prof)[0]
        assert tufc == 300.0

    def test_response_pairing_measures_from_run_start(self, corpus):
        # customer msgs at +10 and +20 form one run; reply at +50 -> one pair of 40
        ticket = corpus.tickets["T1"]
        prof = self._profile(corpus, ticket)
        tufc, avg, diff, dslc = time_features(ticket, snapshots(ticket)[3], prof)
        assert avg == 40.0
        assert diff == 75.0 - 40.0
        assert dslc == 0.0

    def test_zero_pairs_yield_zero_average(self, corpus):
        ticket = corpus.tickets["T1"]
        prof = self._profile(corpus, ticket)
        _, avg, diff, _ = time_features(ticket, snapshots(ticket)[2], prof)
        assert avg == 0.0
        assert diff == 75.0

    def test_days_since_last_contact_ignores_non_messages(self, corpus):
        ticket = corpus.tickets["T1"]
        prof = self._profile(corpus, ticket)
        dslc = time_features(ticket, snapshots(ticket)[5], prof)[3]
        assert dslc == pytest.approx((102880 - 100050) / 1440)


class TestProfileFeatures:
    def test_oracle_customer_history(self, corpus):
        prof = profile_features(corpus, "CU1", 100000, W6)
        assert prof.num_closed_pmrs == 4
        assert prof.num_closed_critsits == 1
        assert prof.critsit_to_pmr_ratio == 0.25
        assert prof.expected_response_min == 75.0
        assert prof.num_open_pmrs == 1
        assert prof.pmrs_opened_last_X == 5
        assert prof.pmrs_closed_last_X == 4
        assert prof.critsits_open == 0
        assert prof.critsits_opened_last_X == 1
        assert prof.critsits_closed_last_X == 1
        assert prof.expected_response_last_X_min == 75.0

    def test_one_month_window(self, corpus):
        prof = profile_features(corpus, "CU1", 100000, ProfileWindow(1))
        assert prof.pmrs_opened_last_X == 3  # TB, TC, TE
        assert prof.pmrs_closed_last_X == 3  # TA, TB, TE
        assert prof.critsits_opened_last_X == 0
        assert prof.critsits_closed_last_X == 0
        assert prof.expected_response_last_X_min == pytest.approx((0 + 100 + 0) / 3)
        # lifetime fields unaffected by the window
        assert prof.num_closed_pmrs == 4

    def test_window_nesting(self, corpus):
        small = profile_features(corpus, "CU1", 100000, ProfileWindow(1))
        large = profile_features(corpus, "CU1", 100000, ProfileWindow(6))
        for field in (
            "pmrs_opened_last_X",
            "pmrs_closed_last_X",
            "critsits_opened_last_X",
            "critsits_closed_last_X",
        ):
            assert getattr(small, field) <= getattr(large, field)

    def test_new_customer_all_zero_with_global_fallback(self, corpus):
        prof = profile_features(corpus, "CU2", 30000, W6)
        assert prof.num_closed_pmrs == 0
        assert prof.critsit_to_pmr_ratio == 0.0
        assert prof.num_open_pmrs == 0
        # two fields follow their sentinel rule: corpus-wide mean response
        assert prof.expected_response_min == 60.0
        assert prof.expected_response_last_X_min == 60.0

    def test_unknown_customer_rejected(self, corpus):
        with pytest.raises(CorpusError, match="unknown customer"):
            profile_features(corpus, "CU99", 100000, W6)

    def test_escalation_invisible_before_attach_time(self, corpus):
        # as_of between TD's open (40000) and its CritSit (45000): no crit yet
        prof = profile_features(corpus, "CU1", 44000, W6)
        assert prof.num_closed_critsits == 0
        assert prof.critsits_opened_last_X == 0
        # TD is open and attached once the record has opened
        prof_after = profile_features(corpus, "CU1", 46000, W6)
        assert prof_after.critsits_open == 1
        assert prof_after.critsits_opened_last_X == 1


FULL_T1_EXPECTED = {
    "number_of_entries": 6,
    "days_open": 2.0,
    "pmr_ownership_level": 2,
    "num_support_contacts": 1,
    "num_severity_increases": 1,
    "num_severity_decreases": 0,
    "num_sevX_to_sev1": 1,
    "time_until_first_contact_min": 50.0,
    "avg_support_response_min": 40.0,
    "diff_avg_vs_expected_min": 35.0,
    "days_since_last_contact": 2830 / 1440,
    "num_closed_pmrs": 4,
    "num_closed_critsits": 1,
    "critsit_to_pmr_ratio": 0.25,
    "expected_response_min": 75.0,
    "num_open_pmrs": 1,
    "pmrs_opened_last_X": 5,
    "pmrs_closed_last_X": 4,
    "critsits_open": 0,
    "critsits_opened_last_X": 1,
    "critsits_closed_last_X": 1,
    "expected_response_last_X_min": 75.0,
}


class TestFeatureVector:
    def test_full_vector_matches_hand_replay(self, corpus):
        ticket = corpus.tickets["T1"]
        vec = feature_vector(corpus, ticket, snapshots(ticket)[-1], W6)
        for name in FEATURE_NAMES:
            assert getattr(vec, name) == pytest.approx(FULL_T1_EXPECTED[name]), name

    def test_new_customer_snapshot_zero(self, corpus):
        ticket = corpus.tickets["TZ"]
        vec = feature_vector(corpus, ticket, snapshots(ticket)[0], W6)
        assert vec.number_of_entries == 1
        assert vec.days_open == 0.0
        assert vec.num_support_contacts == 0
        assert vec.time_until_first_contact_min == 0.0
        assert vec.avg_support_response_min == 0.0
        assert vec.num_closed_pmrs == 0
        assert vec.expected_response_min == 60.0
        assert vec.diff_avg_vs_expected_min == 60.0

    def test_profile_frozen_across_snapshots(self, corpus):
        ticket = corpus.tickets["T1"]
        vectors = [feature_vector(corpus, ticket, s, W6) for s in snapshots(ticket)]
        for field in PROFILE_FIELDS:
            values = {getattr(v, field) for v in vectors}
            assert len(values) == 1, field

    def test_no_lookahead_truncation_oracle(self, corpus):
        ticket = corpus.tickets["T1"]
        for i, snap in enumerate(snapshots(ticket)):
            full = feature_vector(corpus, ticket, snap, W6)
            trunc = ticket.truncated(i)
            trunc_vec = feature_vector(corpus, trunc, snapshots(trunc)[-1], W6)
            assert full == trunc_vec, f"snapshot {i}"

    def test_monotone_counters(self, corpus):
        ticket = corpus.tickets["T1"]
        counters = (
            "number_of_entries",
            "num_support_contacts",
            "num_severity_increases",
            "num_severity_decreases",
            "num_sevX_to_sev1",
        )
        vectors = [feature_vector(corpus, ticket, s, W6) for s in snapshots(ticket)]
        for field in counters:
            series = [getattr(v, field) for v in vectors]
            assert series == sorted(series), field

    @given(st.lists(st.sampled_from([-1, 1]), min_size=0, max_size=12))
    def test_severity_identity_for_unit_steps(self, steps):
        # moves of exactly one severity step: event counts equal the value delta
        events = [opened("TX", 0, severity=3)]
        current = 3
        ts = 0
        for step in steps:
            target = current - step  # step +1 = toward 1 (more urgent)
            if not (1 <= target <= 4):
                continue
            ts += 10
            events.append(sev("TX", len(events), ts, target))
            current = target
        corpus = unit_corpus(events)
        ticket = corpus.tickets["TX"]
        _, inc, dec, _ = process_features(ticket, snapshots(ticket)[-1])
        assert inc - dec == 3 - current


class TestFinalTrainingSnapshot:
    def test_negative_uses_last_event(self, corpus):
        snap = final_training_snapshot(corpus, corpus.tickets["TA"])
        assert snap.upto_seq == 2

    def test_positive_truncates_before_attach(self, corpus):
        # TD's record opened at 45000; events at 40000/40010/40210/49000
        snap = final_training_snapshot(corpus, corpus.tickets["TD"])
        assert snap.upto_seq == 2
        assert snap.as_of == 40210

    def test_positive_with_attach_before_events_falls_back_to_open(self):
        events = [opened("TX", 1000), cmsg("TX", 1, 2000)]
        corpus = unit_corpus(events, records=[record("C1", 900, "TX")])
        snap = final_training_snapshot(corpus, corpus.tickets["TX"])
        assert snap.upto_seq == 0


class TestTrainingRowsAndCsv:
    def test_rows_one_per_ticket_sorted(self, corpus):
        rows = training_rows(corpus, W6)
        assert [r.ticket_id for r in rows] == sorted(corpus.tickets)
        labels = {r.ticket_id: r.label for r in rows}
        assert labels["TD"] == 1
        assert labels["TA"] == 0

    def test_per_snapshot_rows(self, corpus):
        rows = training_rows(corpus, W6, per_snapshot=True)
        t1_rows = [r for r in rows if r.ticket_id == "T1"]
        assert [r.upto_seq for r in t1_rows] == list(range(6))
        # positives stop at their pre-escalation snapshot
        td_rows = [r for r in rows if r.ticket_id == "TD"]
        assert [r.upto_seq for r in td_rows] == [0, 1, 2]

    def test_csv_header_and_values(self, corpus, tmp_path):
        rows = training_rows(corpus, W6)
        out = tmp_path / "features.csv"
        with out.open("w", newline="") as fp:
            write_feature_csv(rows, fp)
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert CSV_HEADER[:22] == FEATURE_NAMES
        assert CSV_HEADER[22:] == ("ticket_id", "upto_seq", "label")
        first = lines[1].split(",")
        assert first[22] == "T1"
        assert first[-1] == "0"

    def test_snapshot_validation(self, corpus):
        ticket = corpus.tickets["T1"]
        with pytest.raises(ValueError, match="does not belong"):
            basic_features(ticket, Snapshot("T2", 0, 100000))
        with pytest.raises(ValueError, match="out of range"):
            basic_features(ticket, Snapshot("T1", 17, 100000))


def test_truncated_preserves_label():
    events = [opened("TX", 0), cmsg("TX", 1, 10), closed("TX", 2, 20)]
    corpus = unit_corpus(events, records=[record("C1", 15, "TX")])
    ticket = corpus.tickets["TX"]
    trunc = ticket.truncated(1)
    assert isinstance(trunc, SupportTicket)
    assert trunc.escalation_type is EscalationType.CAUSE
    assert len(trunc.events) == 2
