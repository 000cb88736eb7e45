"""Command-line entry point for the full pipeline.

Subcommands: generate, ingest-check, extract, train, evaluate, score,
timeline, serve. All randomness is controlled by --seed; identical inputs
and seeds produce byte-identical outputs. File outputs go only to explicit
--out paths; stdout carries human summaries, stderr machine-parsable
errors.

Exit codes: 0 ok, 1 usage, 2 validation (schema or corpus errors),
3 runtime.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from pathlib import Path

import click

from . import evaluation, features, forest, ingest, synth
from .errors import CorpusError, EscaladeError, SchemaError
from .features import ProfileWindow

_DEFAULT_THREADS = os.cpu_count() or 1


def _read_corpus(events_path: str, crits_path: str | None) -> ingest.Corpus:
    stats = ingest.ParseStats()
    with open(events_path, encoding="utf-8") as fp:
        events = ingest.parse_event_log(fp, stats)
    records = []
    if crits_path:
        with open(crits_path, encoding="utf-8") as fp:
            records = ingest.parse_escalation_log(fp, stats)
    corpus = ingest.build_corpus(events, records)
    if stats.unknown_field_count:
        click.echo(
            f"warning: ignored {stats.unknown_field_count} unknown field occurrence(s)",
            err=True,
        )
    return corpus


def _forest_config(trees, max_depth, min_samples_split, features_per_split, seed, balance):
    return forest.TrainConfig(
        n_trees=trees,
        max_depth=max_depth,
        min_samples_split=min_samples_split,
        features_per_split=features_per_split,
        seed=seed,
        balance=balance,
    )


def _forest_options(fn):
    fn = click.option("--trees", type=int, default=100, show_default=True)(fn)
    fn = click.option("--max-depth", type=int, default=None, help="unlimited when omitted")(fn)
    fn = click.option("--min-samples-split", type=int, default=2, show_default=True)(fn)
    fn = click.option("--features-per-split", type=int, default=5, show_default=True)(fn)
    fn = click.option("--balance/--no-balance", default=True, show_default=True)(fn)
    return fn


@click.group()
def cli() -> None:
    """Escalation-risk pipeline for support tickets."""


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--customers", type=int, default=None)
@click.option("--ticket-mean", type=float, default=None)
@click.option("--ticket-dispersion", type=float, default=None)
@click.option("--imbalance", type=float, default=None)
@click.option("--cascade/--no-cascade", "cascade", default=None)
@click.option("--w-profile", type=float, default=None)
@click.option("--w-process", type=float, default=None)
@click.option("--w-time", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out-events", type=click.Path(), required=False)
@click.option("--out-crits", type=click.Path(), required=False)
@click.option("--dry-run", is_flag=True, help="print the planted-signal summary and exit")
def generate(
    config_path, customers, ticket_mean, ticket_dispersion, imbalance, cascade,
    w_profile, w_process, w_time, seed, out_events, out_crits, dry_run,
):
    """Generate a synthetic corpus in the ingest wire format."""
    base = {}
    if config_path:
        base = json.loads(Path(config_path).read_text(encoding="utf-8"))
    config = synth.GenConfig.from_dict(base)
    overrides = {
        "n_customers": customers,
        "tickets_mean": ticket_mean,
        "tickets_dispersion": ticket_dispersion,
        "target_imbalance": imbalance,
        "cascade_enabled": cascade,
        "w_profile": w_profile,
        "w_process": w_process,
        "w_time": w_time,
        "seed": seed,
    }
    merged = dataclasses.asdict(config)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    config = synth.GenConfig(**merged)

    click.echo(synth.describe(config))
    if dry_run:
        return
    if not out_events or not out_crits:
        raise click.UsageError("--out-events and --out-crits are required to generate")
    event_lines, record_lines = synth.generate(config)
    Path(out_events).write_text("\n".join(event_lines) + "\n", encoding="utf-8")
    Path(out_crits).write_text(
        ("\n".join(record_lines) + "\n") if record_lines else "", encoding="utf-8"
    )
    click.echo(f"wrote {len(event_lines)} events, {len(record_lines)} escalation records")


@cli.command("ingest-check")
@click.option("--events", "events_path", type=click.Path(exists=True), required=True)
@click.option("--crits", "crits_path", type=click.Path(exists=True), default=None)
def ingest_check(events_path, crits_path):
    """Validate input files without computing features."""
    corpus = _read_corpus(events_path, crits_path)
    n_events = sum(len(t.events) for t in corpus.tickets.values())
    by_type: dict[str, int] = {}
    for t in corpus.tickets.values():
        by_type[t.escalation_type.value] = by_type.get(t.escalation_type.value, 0) + 1
    click.echo(f"tickets: {len(corpus.tickets)}")
    click.echo(f"events: {n_events}")
    click.echo(f"customers: {len(corpus.customers)}")
    click.echo(f"escalation records: {len(corpus.escalations)}")
    click.echo(
        "escalation types: "
        + ", ".join(f"{k}={by_type.get(k, 0)}" for k in ("none", "cause", "cascade"))
    )


@cli.command()
@click.option("--events", "events_path", type=click.Path(exists=True), required=True)
@click.option("--crits", "crits_path", type=click.Path(exists=True), default=None)
@click.option("--window", type=int, default=features.DEFAULT_WINDOW_MONTHS, show_default=True)
@click.option("--per-snapshot", is_flag=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def extract(events_path, crits_path, window, per_snapshot, out_path):
    """Export feature rows as CSV."""
    corpus = _read_corpus(events_path, crits_path)
    rows = features.training_rows(corpus, ProfileWindow(window), per_snapshot=per_snapshot)
    with open(out_path, "w", encoding="utf-8", newline="") as fp:
        features.write_feature_csv(rows, fp)
    click.echo(f"wrote {len(rows)} rows to {out_path}")


@cli.command()
@click.option("--events", "events_path", type=click.Path(exists=True), required=True)
@click.option("--crits", "crits_path", type=click.Path(exists=True), default=None)
@click.option("--window", type=int, default=features.DEFAULT_WINDOW_MONTHS, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=_DEFAULT_THREADS, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@_forest_options
def train(
    events_path, crits_path, window, seed, threads, out_path,
    trees, max_depth, min_samples_split, features_per_split, balance,
):
    """Train a forest on final-snapshot rows and save it."""
    corpus = _read_corpus(events_path, crits_path)
    rows = features.training_rows(corpus, ProfileWindow(window))
    x, y = features.rows_to_matrix(rows)
    config = _forest_config(trees, max_depth, min_samples_split, features_per_split, seed, balance)
    model = forest.train_arrays(x, y, config, threads=threads)
    forest.save_model(model, out_path)
    click.echo(
        f"trained {model.n_trees} trees on {len(rows)} tickets "
        f"({int(y.sum())} positive); saved to {out_path}"
    )


@cli.command()
@click.option("--events", "events_path", type=click.Path(exists=True), required=True)
@click.option("--crits", "crits_path", type=click.Path(exists=True), default=None)
@click.option("--window", type=int, default=features.DEFAULT_WINDOW_MONTHS, show_default=True)
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=_DEFAULT_THREADS, show_default=True)
@click.option("--filter-cascades", "filter_cascades", is_flag=True)
@click.option("--per-snapshot", is_flag=True, help="train on every snapshot, not just the last")
@click.option("--out", "out_path", type=click.Path(), required=True)
@_forest_options
def evaluate(
    events_path, crits_path, window, k, seed, threads, filter_cascades, per_snapshot,
    out_path, trees, max_depth, min_samples_split, features_per_split, balance,
):
    """k-fold cross-validation; writes a JSON metrics report."""
    corpus = _read_corpus(events_path, crits_path)
    if filter_cascades:
        before = len(corpus.tickets)
        corpus = ingest.filter_cascades(corpus)
        click.echo(f"cascade filter: {before} -> {len(corpus.tickets)} tickets")
    config = _forest_config(trees, max_depth, min_samples_split, features_per_split, seed, balance)
    result = evaluation.cross_validate(
        corpus, config, k=k, seed=seed, window=ProfileWindow(window),
        per_snapshot=per_snapshot, threads=threads,
    )
    Path(out_path).write_text(result.to_json(), encoding="utf-8")
    rep = result.report

    def fmt(v):
        return "undefined" if v is None else f"{v:.4f}"

    click.echo(
        f"recall={fmt(rep.recall)} precision={fmt(rep.precision)} "
        f"summarization={fmt(rep.summarization)} "
        f"(tp={rep.matrix.tp} fp={rep.matrix.fp} tn={rep.matrix.tn} fn={rep.matrix.fn})"
    )


@cli.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--events", "events_path", type=click.Path(exists=True), required=True)
@click.option("--crits", "crits_path", type=click.Path(exists=True), default=None)
@click.option("--window", type=int, default=features.DEFAULT_WINDOW_MONTHS, show_default=True)
@click.option("--ticket", "ticket_id", default=None, help="score one ticket to stdout")
@click.option("--out", "out_path", type=click.Path(), default=None)
def score(model_path, events_path, crits_path, window, ticket_id, out_path):
    """Score final snapshots with a saved model."""
    import numpy as np

    corpus = _read_corpus(events_path, crits_path)
    model = forest.load_model(model_path)
    rows = features.training_rows(corpus, ProfileWindow(window))
    if ticket_id is not None:
        rows = [r for r in rows if r.ticket_id == ticket_id]
        if not rows:
            raise CorpusError(f"unknown ticket {ticket_id!r}")
    x, _ = features.rows_to_matrix(rows)
    conf = model.confidences(x)
    ers = np.round(conf * 100).astype(int)
    if ticket_id is not None:
        click.echo(f"{ticket_id}: er={int(ers[0])} predicted_crit={bool(ers[0] > 50)}")
        return
    if not out_path:
        raise click.UsageError("--out is required when scoring the whole corpus")
    with open(out_path, "w", encoding="utf-8", newline="") as fp:
        fp.write("ticket_id,er,predicted_crit\n")
        for row, er in zip(rows, ers):
            fp.write(f"{row.ticket_id},{int(er)},{int(er > 50)}\n")
    click.echo(f"scored {len(rows)} tickets to {out_path}")


@cli.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--events", "events_path", type=click.Path(exists=True), required=True)
@click.option("--crits", "crits_path", type=click.Path(exists=True), default=None)
@click.option("--window", type=int, default=features.DEFAULT_WINDOW_MONTHS, show_default=True)
@click.option("--ticket", "ticket_id", required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def timeline(model_path, events_path, crits_path, window, ticket_id, out_path):
    """Escalation risk per snapshot for one ticket, as CSV."""
    corpus = _read_corpus(events_path, crits_path)
    model = forest.load_model(model_path)
    tl = evaluation.er_timeline(model, corpus, ticket_id, ProfileWindow(window))
    with open(out_path, "w", encoding="utf-8", newline="") as fp:
        evaluation.write_timeline_csv(tl, fp)
    click.echo(f"wrote {len(tl.points)} points to {out_path}")


@cli.command()
@click.option(
    "--model", "model_path", type=click.Path(exists=True), required=True,
    envvar="ESCALADE_MODEL",
)
@click.option("--journal", "journal_path", type=click.Path(), envvar="ESCALADE_JOURNAL")
@click.option("--addr", default="127.0.0.1:8787", envvar="ESCALADE_ADDR", show_default=True)
@click.option("--events", "events_path", type=click.Path(exists=True), default=None)
@click.option("--crits", "crits_path", type=click.Path(exists=True), default=None)
@click.option("--window", type=int, default=features.DEFAULT_WINDOW_MONTHS, show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="serve a built dashboard from this directory at /ui")
def serve(model_path, journal_path, addr, events_path, crits_path, window, ui_dir):
    """Run the triage HTTP service."""
    import uvicorn

    from .service import build_store, create_app

    store = build_store(
        model_path,
        journal_path=journal_path,
        events_path=events_path,
        crits_path=crits_path,
        window=ProfileWindow(window),
    )
    app = create_app(store)
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    host, _, port = addr.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


def _emit_error(code: str, message: str) -> None:
    sys.stderr.write(json.dumps({"code": code, "message": message}) + "\n")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return 1
    except click.UsageError as exc:
        _emit_error("usage", exc.format_message())
        return 1
    except click.ClickException as exc:
        _emit_error("usage", exc.format_message())
        return 1
    except (SchemaError, CorpusError) as exc:
        _emit_error("validation", str(exc))
        return 2
    except (EscaladeError, ValueError, OSError) as exc:
        _emit_error("runtime", str(exc))
        return 3


if __name__ == "__main__":
    sys.exit(main())
