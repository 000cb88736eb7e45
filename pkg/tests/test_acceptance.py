"""Acceptance suite: one verdict line per criterion.

Run with `pytest tests/test_acceptance.py -v -s` to see the PASS/FAIL line
for every criterion. The heavy corpora are generated once per session;
every random draw is pinned by explicit seeds, so results are exactly
reproducible.

A1 note: the published prose value for summarization (0.8077) is
inconsistent with the published confusion-matrix counts, which yield
2074542/2567929 = 0.807866. The formula is asserted exactly against
rational arithmetic; the prose-value band is kept as a strict xfail so
the discrepancy stays visible instead of being silently relaxed.
"""

import json
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from fastapi.testclient import TestClient

from escalade.cli import main as cli_main
from escalade.domain import FEATURE_NAMES
from escalade.evaluation import ConfusionMatrix, cross_validate, metrics
from escalade.features import (
    ProfileWindow,
    feature_vector,
    rows_to_matrix,
    snapshots,
    training_rows,
)
from escalade.forest import TrainConfig, oversample_arrays, save_model, train_arrays
from escalade.ingest import build_corpus, filter_cascades, parse_escalation_log, parse_event_log
from escalade.service import build_store, create_app
from escalade.synth import GenConfig, generate

W6 = ProfileWindow(6)
CV_CONFIG = TrainConfig(n_trees=30, max_depth=5, seed=7)


def verdict(criterion: str, ok: bool, detail: str) -> None:
    print(f"[{criterion}] {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{criterion}: {detail}"


def build(config: GenConfig):
    events, records = generate(config)
    return build_corpus(parse_event_log(events), parse_escalation_log(records))


@pytest.fixture(scope="module")
def corpus_50k():
    return build(
        GenConfig(
            n_customers=3125, tickets_mean=16, tickets_dispersion=0.9,
            target_imbalance=250, seed=1001,
        )
    )


@pytest.fixture(scope="module")
def corpus_50k_null():
    return build(
        GenConfig(
            n_customers=3125, tickets_mean=16, tickets_dispersion=0.9,
            target_imbalance=250, seed=1001,
            w_profile=0.0, w_process=0.0, w_time=0.0,
        )
    )


class TestA1Metrics:
    TABLE = ConfusionMatrix(tp=8153, fn=2046, fp=485234, tn=2072496)

    def test_a1_recall_precision_and_exact_summarization(self):
        rep = metrics(self.TABLE)
        ok_recall = abs(rep.recall - 0.7994) <= 1e-4
        ok_precision = abs(rep.precision - 0.0165) <= 1e-4
        exact = Fraction(2072496 + 2046, 2072496 + 2046 + 8153 + 485234)
        ok_summ = abs(rep.summarization - float(exact)) <= 1e-12
        verdict(
            "A1", ok_recall and ok_precision and ok_summ,
            f"recall={rep.recall:.6f} (0.7994±1e-4), precision={rep.precision:.6f} "
            f"(0.0165±1e-4), summarization={rep.summarization:.6f} "
            f"(exact {float(exact):.6f} from the published counts)",
        )

    @pytest.mark.xfail(
        strict=True,
        reason=(
            "published prose says 80.77% but the published confusion-matrix "
            "counts give (tn+fn)/total = 0.807866; the two cannot both hold "
            "at the +-0.0001 tolerance"
        ),
    )
    def test_a1_published_prose_summarization_band(self):
        rep = metrics(self.TABLE)
        print(
            f"[A1-prose] FAIL summarization={rep.summarization:.6f} vs prose "
            f"0.8077±1e-4 (known source inconsistency, see notes)"
        )
        assert abs(rep.summarization - 0.8077) <= 1e-4


class TestA2Oversampling:
    def test_a2_500_to_2_contract(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(502, 22))
        y = np.zeros(502, dtype=np.uint8)
        y[[77, 301]] = 1
        xb, yb = oversample_arrays(x, y, seed=13)
        n_maj = int((yb == 0).sum())
        n_min = int((yb == 1).sum())
        maj_ok = n_maj == 500 and Counter(map(tuple, xb[yb == 0])) == Counter(
            map(tuple, x[y == 0])
        )
        min_ok = 450 <= n_min <= 550
        per_row = sorted(Counter(map(tuple, xb[yb == 1])).values())
        rep_ok = per_row == [250, 250]
        verdict(
            "A2", maj_ok and min_ok and rep_ok,
            f"majority kept exactly ({n_maj}), minority {n_min} in [450,550], "
            f"each positive used {per_row}x",
        )


class TestA3EndToEndLearnability:
    def test_a3_planted_signal_beats_null(self, corpus_50k, corpus_50k_null):
        n = len(corpus_50k.tickets)
        positives = sum(1 for t in corpus_50k.tickets.values() if t.escalated)
        target = n / 251
        band_ok = 0.8 * target <= positives <= 1.2 * target

        planted = cross_validate(corpus_50k, CV_CONFIG, k=10, seed=3, threads=2).report
        null = cross_validate(corpus_50k_null, CV_CONFIG, k=10, seed=3, threads=2).report

        chance_at_matched = 1 - planted.summarization
        ok = (
            band_ok
            and planted.recall >= 0.70
            and planted.summarization >= 0.60
            and planted.recall > null.recall
            and planted.recall > chance_at_matched
            and abs(null.recall - (1 - null.summarization)) < 0.15
        )
        verdict(
            "A3", ok,
            f"n={n}, positives={positives} (target {target:.0f}±20%), "
            f"recall={planted.recall:.4f} (>=0.70), "
            f"summarization={planted.summarization:.4f} (>=0.60); "
            f"null recall={null.recall:.4f} ~ chance {1 - null.summarization:.4f}, "
            f"planted exceeds null and the {chance_at_matched:.4f} chance line",
        )


class TestA4NoLookahead:
    def test_a4_truncation_oracle_on_200_tickets(self):
        corpus = build(GenConfig(n_customers=150, tickets_mean=8, target_imbalance=20, seed=77))
        ids = sorted(corpus.tickets)
        picks = np.random.default_rng(4).choice(len(ids), size=200, replace=False)
        mismatches = 0
        checked = 0
        for i in sorted(picks):
            ticket = corpus.tickets[ids[i]]
            for snap in snapshots(ticket):
                full = feature_vector(corpus, ticket, snap, W6)
                trunc = ticket.truncated(snap.upto_seq)
                again = feature_vector(corpus, trunc, snapshots(trunc)[-1], W6)
                checked += 1
                if full != again:
                    mismatches += 1
        verdict(
            "A4", mismatches == 0,
            f"{checked} snapshot vectors across 200 tickets, "
            f"{mismatches} field-level mismatches",
        )


class TestA5ProfileDominance:
    def test_a5_heavy_history_customers_flag_immediately(self):
        corpus = build(
            GenConfig(
                n_customers=260, tickets_mean=24, tickets_dispersion=1.1,
                target_imbalance=40, seed=555,
                w_profile=2.5, w_process=0.4, w_time=0.4,
            )
        )
        rows = training_rows(corpus, W6, per_snapshot=True)
        x, y = rows_to_matrix(rows)
        model = train_arrays(
            x, y,
            TrainConfig(n_trees=30, max_depth=10, features_per_split=8, seed=7),
            threads=2,
        )
        first = [
            feature_vector(corpus, t, snapshots(t)[0], W6).as_tuple()
            for t in (corpus.tickets[tid] for tid in sorted(corpus.tickets))
        ]
        x0 = np.array(first)
        er = np.round(model.confidences(x0) * 100)
        i_closed = FEATURE_NAMES.index("num_closed_pmrs")
        i_ratio = FEATURE_NAMES.index("critsit_to_pmr_ratio")
        i_open = FEATURE_NAMES.index("num_open_pmrs")
        heavy = (x0[:, i_closed] >= 50) & (x0[:, i_ratio] >= 0.1)
        fresh = (x0[:, i_closed] == 0) & (x0[:, i_open] == 0)
        margin = float(er[heavy].mean() - er[fresh].mean())
        verdict(
            "A5", bool(heavy.any() and fresh.any() and margin >= 20),
            f"snapshot-0 mean ER: heavy-history {er[heavy].mean():.1f} "
            f"(n={int(heavy.sum())}) vs zero-history {er[fresh].mean():.1f} "
            f"(n={int(fresh.sum())}), margin {margin:.1f} (>=20)",
        )


class TestA6CascadeFilter:
    def test_a6_filter_and_reevaluate(self):
        corpus = build(
            GenConfig(
                n_customers=700, tickets_mean=14, tickets_dispersion=1.0,
                target_imbalance=60, cascade_enabled=True, seed=99,
            )
        )
        filtered = filter_cascades(corpus)
        single_only = all(len(r.attached_ticket_ids) == 1 for r in filtered.escalations)
        causes_only = all(
            t.escalation_type.value == "cause"
            for t in filtered.tickets.values()
            if t.escalated
        )
        unfiltered = cross_validate(corpus, CV_CONFIG, k=10, seed=3, threads=2).report
        refiltered = cross_validate(filtered, CV_CONFIG, k=10, seed=3, threads=2).report
        summ_delta = abs(refiltered.summarization - unfiltered.summarization)
        recall_delta = refiltered.recall - unfiltered.recall
        ok = (
            single_only
            and causes_only
            and unfiltered.recall is not None
            and refiltered.recall is not None
            and summ_delta <= 0.15
        )
        verdict(
            "A6", ok,
            f"filtered to single-attachment causes only; recall "
            f"{unfiltered.recall:.4f} -> {refiltered.recall:.4f} "
            f"(delta {recall_delta:+.4f}), summarization "
            f"{unfiltered.summarization:.4f} -> {refiltered.summarization:.4f} "
            f"(|delta| {summ_delta:.4f} <= 0.15)",
        )


class TestA7Determinism:
    def test_a7_pipeline_byte_identical(self, tmp_path):
        artifacts = []
        for name in ("run1", "run2"):
            d = tmp_path / name
            d.mkdir()
            assert cli_main(
                [
                    "generate", "--customers", "60", "--ticket-mean", "8",
                    "--imbalance", "15", "--seed", "21",
                    "--out-events", str(d / "events.jsonl"),
                    "--out-crits", str(d / "crits.jsonl"),
                ]
            ) == 0
            assert cli_main(
                [
                    "extract", "--events", str(d / "events.jsonl"),
                    "--crits", str(d / "crits.jsonl"), "--out", str(d / "features.csv"),
                ]
            ) == 0
            assert cli_main(
                [
                    "train", "--events", str(d / "events.jsonl"),
                    "--crits", str(d / "crits.jsonl"), "--trees", "10",
                    "--max-depth", "6", "--seed", "9", "--out", str(d / "model.json"),
                ]
            ) == 0
            assert cli_main(
                [
                    "evaluate", "--events", str(d / "events.jsonl"),
                    "--crits", str(d / "crits.jsonl"), "--k", "5", "--seed", "4",
                    "--trees", "8", "--max-depth", "5", "--out", str(d / "report.json"),
                ]
            ) == 0
            artifacts.append(
                {
                    f: (d / f).read_bytes()
                    for f in ("events.jsonl", "crits.jsonl", "features.csv",
                              "model.json", "report.json")
                }
            )
        same = [f for f in artifacts[0] if artifacts[0][f] == artifacts[1][f]]
        verdict(
            "A7", len(same) == 5,
            f"byte-identical across two seeded runs: {', '.join(same)}",
        )


class TestA8ServiceContract:
    @pytest.fixture()
    def service(self, tmp_path):
        cfg = GenConfig(n_customers=25, tickets_mean=6, target_imbalance=8, seed=31)
        event_lines, record_lines = generate(cfg)
        events_path = tmp_path / "events.jsonl"
        crits_path = tmp_path / "crits.jsonl"
        events_path.write_text("\n".join(event_lines) + "\n")
        crits_path.write_text("\n".join(record_lines) + "\n")
        corpus = build_corpus(
            parse_event_log(event_lines), parse_escalation_log(record_lines)
        )
        x, y = rows_to_matrix(training_rows(corpus, W6))
        model = train_arrays(x, y, TrainConfig(n_trees=10, max_depth=6, seed=2))
        model_path = tmp_path / "model.json"
        save_model(model, model_path)
        journal = tmp_path / "journal.jsonl"

        def make():
            store = build_store(
                model_path, journal_path=journal,
                events_path=events_path, crits_path=crits_path,
            )
            return store, TestClient(create_app(store))

        return make

    def test_a8_service_contract(self, service):
        store, client = service()
        checks = []

        def er_coupling(entries):
            return all(e["predicted_crit"] == (e["current_er"] > 50) for e in entries)

        rows = client.get("/tickets").json()["tickets"]
        checks.append(("ER>50 iff predicted_crit in list", er_coupling(rows)))

        # three update cycles; CER identity must hold after each
        cer_ok = True
        for ticket in rows[:3]:
            tid = ticket["ticket_id"]
            detail = client.get(f"/tickets/{tid}").json()
            seq = len(detail["events"])
            ts = detail["events"][-1]["ts"] + 30
            batch = json.dumps(
                {"ticket_id": tid, "seq": seq, "ts": ts, "kind": "customer_msg",
                 "actor_id": "CU-x"}
            )
            assert client.post("/events", content=batch).status_code == 200
            entry = client.get(f"/tickets/{tid}").json()["entry"]
            cer_ok = cer_ok and entry["cer"] == entry["current_er"] - entry["previous_er"]
            cer_ok = cer_ok and entry["predicted_crit"] == (entry["current_er"] > 50)
        checks.append(("CER identity after every POST /events", cer_ok))

        tid = rows[3]["ticket_id"]
        ok0 = client.put(f"/tickets/{tid}/mer", json={"value": 0, "author": "a"}).status_code == 200
        ok100 = (
            client.put(f"/tickets/{tid}/mer", json={"value": 100, "author": "a"}).status_code
            == 200
        )
        bad_low = (
            client.put(f"/tickets/{tid}/mer", json={"value": -1, "author": "a"}).status_code
            == 400
        )
        bad_high = (
            client.put(f"/tickets/{tid}/mer", json={"value": 101, "author": "a"}).status_code
            == 400
        )
        checks.append(("MER 0/100 accepted, -1/101 rejected", ok0 and ok100 and bad_low and bad_high))

        client.put(f"/tickets/{tid}/mer", json={"value": 75, "author": "ana"})
        store.close()
        store2, client2 = service()
        entry = client2.get(f"/tickets/{tid}").json()["entry"]
        checks.append(("MER survives restart", entry["mer"] == 75 and entry["mer_set_by"] == "ana"))
        store2.close()

        ok = all(passed for _, passed in checks)
        verdict("A8", ok, "; ".join(f"{name}: {'ok' if p else 'FAILED'}" for name, p in checks))
