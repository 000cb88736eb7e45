"""Cross-validation, confusion-matrix metrics, and per-snapshot risk timelines.

Folds are split by ticket, never by snapshot, so no ticket can contribute
rows to both sides of a fold. Each ticket trains and tests as one row: its
final training snapshot (for escalated tickets, the last event strictly
before the escalation opened). A per-snapshot training mode exists for
sensitivity analysis.

Metrics: recall = tp/(tp+fn), precision = tp/(tp+fp), and summarization =
(tn+fn)/(tn+fn+tp+fp) -- the fraction of tickets a reviewer no longer
needs to inspect, which only means anything alongside the recall retained.
Undefined denominators are reported as explicit nulls with a reason; they
are never coerced to 0 or 1.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import TrainingError
from .features import ProfileWindow, feature_vector, rows_to_matrix, snapshots, training_rows
from .forest import ForestModel, TrainConfig, train_arrays
from .ingest import Corpus


@dataclass(frozen=True, slots=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion-matrix counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            tn=self.tn + other.tn,
            fn=self.fn + other.fn,
        )


@dataclass(frozen=True)
class MetricsReport:
    matrix: ConfusionMatrix
    recall: float | None
    precision: float | None
    summarization: float
    undefined: dict[str, str]

    def to_dict(self) -> dict:
        return {
            "confusion_matrix": {
                "tp": self.matrix.tp,
                "fp": self.matrix.fp,
                "tn": self.matrix.tn,
                "fn": self.matrix.fn,
            },
            "recall": self.recall,
            "precision": self.precision,
            "summarization": self.summarization,
            "undefined": dict(sorted(self.undefined.items())),
        }


def metrics(matrix: ConfusionMatrix) -> MetricsReport:
    """Compute the three headline metrics from raw counts."""
    if matrix.total == 0:
        raise ValueError("confusion matrix is empty (total = 0)")
    undefined: dict[str, str] = {}
    recall = precision = None
    if matrix.tp + matrix.fn > 0:
        recall = matrix.tp / (matrix.tp + matrix.fn)
    else:
        undefined["recall"] = "no actual positives (tp + fn = 0)"
    if matrix.tp + matrix.fp > 0:
        precision = matrix.tp / (matrix.tp + matrix.fp)
    else:
        undefined["precision"] = "no predicted positives (tp + fp = 0)"
    summarization = (matrix.tn + matrix.fn) / matrix.total
    return MetricsReport(
        matrix=matrix,
        recall=recall,
        precision=precision,
        summarization=summarization,
        undefined=undefined,
    )


def kfold_split(corpus: Corpus, k: int, seed: int) -> list[frozenset[str]]:
    """Partition the ticket ids into k seeded folds of near-equal size."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    ids = sorted(corpus.tickets)
    if len(ids) < k:
        raise ValueError(f"need at least k={k} tickets, have {len(ids)}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    base = len(ids) // k
    rem = len(ids) % k
    folds: list[frozenset[str]] = []
    pos = 0
    for i in range(k):
        size = base + (1 if i < rem else 0)
        folds.append(frozenset(ids[j] for j in perm[pos : pos + size]))
        pos += size
    return folds


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence((seed, fold)).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class CrossValidationResult:
    report: MetricsReport
    fold_matrices: tuple[ConfusionMatrix, ...]
    k: int
    seed: int
    config: TrainConfig
    n_tickets: int

    def to_json(self) -> str:
        doc = self.report.to_dict()
        doc.update(
            {
                "k": self.k,
                "seed": self.seed,
                "n_tickets": self.n_tickets,
                "config": self.config.to_dict(),
                "folds": [
                    {"tp": m.tp, "fp": m.fp, "tn": m.tn, "fn": m.fn}
                    for m in self.fold_matrices
                ],
            }
        )
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def cross_validate(
    corpus: Corpus,
    config: TrainConfig,
    k: int = 10,
    seed: int = 0,
    window: ProfileWindow | None = None,
    per_snapshot: bool = False,
    threads: int = 1,
) -> CrossValidationResult:
    """k-fold cross-validation over tickets; returns the aggregate report."""
    window = window or ProfileWindow()
    folds = kfold_split(corpus, k, seed)

    test_rows = training_rows(corpus, window)
    x_test_all, y_test_all = rows_to_matrix(test_rows)
    test_ids = [row.ticket_id for row in test_rows]
    id_to_pos = {tid: i for i, tid in enumerate(test_ids)}

    if per_snapshot:
        train_rows_all = training_rows(corpus, window, per_snapshot=True)
        x_train_all, y_train_all = rows_to_matrix(train_rows_all)
        train_ids = [row.ticket_id for row in train_rows_all]
    else:
        train_rows_all = test_rows
        x_train_all, y_train_all = x_test_all, y_test_all
        train_ids = test_ids

    fold_matrices: list[ConfusionMatrix] = []
    for fold_no, fold in enumerate(folds):
        if not fold:
            raise ValueError(f"fold {fold_no} has zero test tickets")
        train_mask = np.array([tid not in fold for tid in train_ids])
        y_train = y_train_all[train_mask]
        if y_train.min() == y_train.max():
            raise TrainingError(
                f"training union for fold {fold_no} contains a single class"
            )
        fold_config = replace(config, seed=_fold_seed(config.seed, fold_no))
        model = train_arrays(x_train_all[train_mask], y_train, fold_config, threads=threads)

        rows = sorted(id_to_pos[tid] for tid in fold)
        conf = model.confidences(x_test_all[rows])
        er = np.round(conf * 100).astype(np.int64)
        pred = er > 50
        actual = y_test_all[rows].astype(bool)
        fold_matrices.append(
            ConfusionMatrix(
                tp=int((pred & actual).sum()),
                fp=int((pred & ~actual).sum()),
                tn=int((~pred & ~actual).sum()),
                fn=int((~pred & actual).sum()),
            )
        )

    total = ConfusionMatrix()
    for m in fold_matrices:
        total = total + m
    return CrossValidationResult(
        report=metrics(total),
        fold_matrices=tuple(fold_matrices),
        k=k,
        seed=seed,
        config=config,
        n_tickets=len(test_rows),
    )


@dataclass(frozen=True)
class ErTimeline:
    ticket_id: str
    points: tuple[tuple[int, int], ...]  # (upto_seq, er)


def er_timeline(
    model: ForestModel, corpus: Corpus, ticket_id: str, window: ProfileWindow | None = None
) -> ErTimeline:
    """Escalation risk at every snapshot of one ticket, in order."""
    window = window or ProfileWindow()
    ticket = corpus.ticket(ticket_id)
    snaps = snapshots(ticket)
    x = np.array(
        [feature_vector(corpus, ticket, snap, window).as_tuple() for snap in snaps],
        dtype=np.float64,
    )
    conf = model.confidences(x)
    ers = np.round(conf * 100).astype(int)
    return ErTimeline(
        ticket_id=ticket_id,
        points=tuple((snap.upto_seq, int(er)) for snap, er in zip(snaps, ers)),
    )


def write_timeline_csv(timeline: ErTimeline, fp) -> None:
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(["upto_seq", "er"])
    for upto_seq, er in timeline.points:
        writer.writerow([upto_seq, er])
