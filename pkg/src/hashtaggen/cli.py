"""Command-line pipeline: preprocess, train, predict, evaluate, stats,
wordcloud, annotate, serve.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import annotate as anno
from . import corpus, metrics, reporting
from .annosvc import create_app
from .checkpoint import (
    MODEL_KIND_MASKEDLM,
    MODEL_KIND_SEQ2SEQ,
    CheckpointError,
    load_checkpoint,
    save_checkpoint,
)
from .maskedlm import MaskedLMModel, TransformerConfig, generate_autoregressive
from .metrics import MetricsError
from .nn import NumericsError
from .seq2seq import Seq2SeqConfig, Seq2SeqModel
from .training import fit

logger = logging.getLogger(__name__)

DATA_DIR_ENV = "HASHTAGGEN_DATA_DIR"

SAMPLE_CSV = Path(__file__).parent / "data" / "sample_reviews.csv"
TOY_CSV = Path(__file__).parent / "data" / "toy_pairs.csv"
UI_DIR = Path(__file__).parent / "data" / "ui"


class DataError(Exception):
    """Bad input data or files; maps to exit code 2."""


def _check_output(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise DataError(f"refusing to overwrite {path} (use --force)")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable info logging.")
def cli(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


# ---------------------------------------------------------------------------

@cli.command()
@click.option("--input", "input_path", type=click.Path(), required=True,
              help="UTF-8 review CSV with a header row.")
@click.option("--model", "model_kind", type=click.Choice(["bilstm", "maskedlm", "both"]),
              default="both", show_default=True)
@click.option("--outdir", type=click.Path(), required=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--ratios", nargs=3, type=float, default=(0.70, 0.15, 0.15),
              show_default=True, help="Train/validation/test fractions.")
@click.option("--vocab-cap", type=int, default=4000, show_default=True)
@click.option("--title-col", default="review_title", show_default=True)
@click.option("--text-col", default="review_text", show_default=True)
@click.option("--strict", is_flag=True, help="Fail on malformed CSV rows.")
@click.option("--force", is_flag=True, help="Overwrite existing outputs.")
def preprocess(input_path, model_kind, outdir, seed, ratios, vocab_cap,
               title_col, text_col, strict, force) -> None:
    """CSV -> cleaned records, vocabulary and dataset files per split."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records, dropped = corpus.load_reviews(
        input_path, title_col=title_col, text_col=text_col, strict=strict
    )
    # drop records that clean to empty on either side
    kept = []
    for r in records:
        if corpus.clean_text(r.title_raw) and corpus.clean_text(r.text_raw):
            kept.append(r)
        else:
            dropped += 1
    click.echo(f"loaded {len(kept)} records ({dropped} dropped)")
    split = corpus.split_corpus(kept, ratios=tuple(ratios), seed=seed)
    train_texts = [corpus.clean_text(r.title_raw) for r in split.train] + [
        corpus.clean_text(r.text_raw) for r in split.train
    ]
    vocab = corpus.build_vocab(train_texts, cap=vocab_cap)
    vocab_path = outdir / "vocab.json"
    _check_output(vocab_path, force)
    vocab.save(vocab_path)
    masked_dropped = 0
    for name, recs in (("train", split.train), ("validation", split.validation),
                       ("test", split.test)):
        rec_path = outdir / f"{name}.records.jsonl"
        _check_output(rec_path, force)
        corpus.write_records(recs, rec_path)
        if model_kind in ("bilstm", "both"):
            exs = [e for r in recs
                   if (e := corpus.make_seq2seq_example(r, vocab)) is not None]
            path = outdir / f"{name}.seq2seq.jsonl"
            _check_output(path, force)
            corpus.write_seq2seq_dataset(exs, path)
        if model_kind in ("maskedlm", "both"):
            exs = []
            for r in recs:
                steps = corpus.expand_masked_examples(r, vocab)
                if steps is None:
                    masked_dropped += 1
                else:
                    exs.extend(steps)
            path = outdir / f"{name}.masked.jsonl"
            _check_output(path, force)
            corpus.write_masked_dataset(exs, path)
    if model_kind in ("maskedlm", "both"):
        click.echo(f"masked expansion dropped {masked_dropped} over-long records")
    click.echo(f"wrote datasets to {outdir}")


# ---------------------------------------------------------------------------

_PRESETS = {
    "tiny": {
        "bilstm": dict(embed_dim=32, encoder_layers=1, encoder_cells=16,
                       decoder_layers=1, decoder_cells=32, attention_dim=16),
        "maskedlm": dict(num_layers=2, hidden_size=32, num_heads=2, ffn_dim=64),
    },
    "full": {
        "bilstm": dict(embed_dim=128, encoder_layers=3, encoder_cells=32,
                       decoder_layers=2, decoder_cells=64, attention_dim=64),
        "maskedlm": dict(num_layers=12, hidden_size=768, num_heads=12, ffn_dim=3072),
    },
}


@cli.command()
@click.option("--data", "data_dir", type=click.Path(), required=True,
              envvar=DATA_DIR_ENV, help="Directory produced by preprocess.")
@click.option("--model", "model_kind", type=click.Choice(["bilstm", "maskedlm"]),
              required=True)
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Checkpoint JSON path.")
@click.option("--history", "history_path", type=click.Path(), default=None,
              help="Training history JSONL (default: alongside checkpoint).")
@click.option("--epochs", type=int, default=None,
              help="Defaults: 20 for bilstm, 5 for maskedlm.")
@click.option("--batch", "batch_size", type=int, default=128, show_default=True)
@click.option("--lr", "learning_rate", type=float, default=1e-3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--preset", type=click.Choice(["tiny", "full"]), default="tiny",
              show_default=True)
@click.option("--force", is_flag=True)
def train(data_dir, model_kind, out_path, history_path, epochs, batch_size,
          learning_rate, seed, preset, force) -> None:
    """Train a model on a preprocessed dataset and save a checkpoint."""
    data_dir = Path(data_dir)
    out_path = Path(out_path)
    _check_output(out_path, force)
    history_path = Path(history_path) if history_path else out_path.with_suffix(".history.jsonl")
    _check_output(history_path, force)
    vocab = corpus.Vocabulary.load(data_dir / "vocab.json")
    if model_kind == "bilstm":
        epochs = epochs if epochs is not None else 20
        train_exs = corpus.read_seq2seq_dataset(data_dir / "train.seq2seq.jsonl")
        val_path = data_dir / "validation.seq2seq.jsonl"
        val_exs = corpus.read_seq2seq_dataset(val_path) if val_path.exists() else None
        config = Seq2SeqConfig(vocab_size=len(vocab), **_PRESETS[preset]["bilstm"])
        model = Seq2SeqModel(config, seed=seed)
    else:
        epochs = epochs if epochs is not None else 5
        train_exs = corpus.read_masked_dataset(data_dir / "train.masked.jsonl")
        val_path = data_dir / "validation.masked.jsonl"
        val_exs = corpus.read_masked_dataset(val_path) if val_path.exists() else None
        config = TransformerConfig(vocab_size=len(vocab), **_PRESETS[preset]["maskedlm"])
        model = MaskedLMModel(config, seed=seed)
    if not train_exs:
        raise DataError(f"no training examples in {data_dir}")
    fit(model, train_exs, val_exs, epochs=epochs, batch_size=batch_size,
        learning_rate=learning_rate, seed=seed, history_path=history_path)
    save_checkpoint(model, vocab, out_path)
    reporting.plot_training_history(history_path, history_path.with_suffix(".png"))
    click.echo(f"checkpoint saved to {out_path}")


# ---------------------------------------------------------------------------

@cli.command()
@click.option("--checkpoint", "ckpt_path", type=click.Path(), required=True)
@click.option("--data", "data_dir", type=click.Path(), required=True,
              envvar=DATA_DIR_ENV)
@click.option("--split", type=click.Choice(["train", "validation", "test"]),
              default="test", show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--limit", type=int, default=None, help="Predict at most N records.")
@click.option("--force", is_flag=True)
def predict(ckpt_path, data_dir, split, out_path, limit, force) -> None:
    """Generate hashtags for a split and write a predictions JSONL."""
    out_path = Path(out_path)
    _check_output(out_path, force)
    model, vocab, kind = load_checkpoint(ckpt_path)
    records = corpus.read_records(Path(data_dir) / f"{split}.records.jsonl")
    if limit:
        records = records[:limit]
    preds = []
    for rec in records:
        preds.append(metrics.PredictionRecord(
            id=rec["id"],
            review_text=rec["text"],
            original_title=rec["title"],
            predicted_title=predict_one(model, kind, vocab, rec["text"]),
            model_kind="bilstm" if kind == MODEL_KIND_SEQ2SEQ else "maskedlm",
        ))
    metrics.write_predictions(preds, out_path)
    click.echo(f"wrote {len(preds)} predictions to {out_path}")


def predict_one(model, kind: str, vocab: corpus.Vocabulary, text: str) -> str:
    """Decode one cleaned review text to a predicted title string."""
    if kind == MODEL_KIND_SEQ2SEQ:
        ids = corpus.encode(text, vocab, model.config.max_source_len)
        out_ids = model.greedy_decode(ids)
    elif kind == MODEL_KIND_MASKEDLM:
        ids = corpus.encode(text, vocab, model.config.max_len - 2)
        out_ids = generate_autoregressive(model, ids, max_total_len=model.config.max_len)
    else:
        raise DataError(f"unknown model kind {kind!r}")
    return corpus.decode(out_ids, vocab)


# ---------------------------------------------------------------------------

@cli.command()
@click.option("--preds", "preds_path", type=click.Path(), required=True)
@click.option("--report", "report_path", type=click.Path(), required=True)
@click.option("--figure/--no-figure", default=True, show_default=True,
              help="Also render a metric bar chart next to the report.")
@click.option("--force", is_flag=True)
def evaluate(preds_path, report_path, figure, force) -> None:
    """Score a predictions file (BLEU/NIST/METEOR + statistics) into JSON."""
    report_path = Path(report_path)
    _check_output(report_path, force)
    report = metrics.evaluate_file(preds_path)
    report_path.write_text(json.dumps(report, indent=2), encoding="utf-8")
    if figure:
        reporting.plot_metric_report(report, report_path.with_suffix(".png"))
    for name, block in report["metrics"].items():
        click.echo(f"{name}: {block['mean']:.4f} ± {block['sd']:.4f}")
    click.echo(f"report written to {report_path}")


@cli.command()
@click.option("--preds", "preds_path", type=click.Path(), required=True)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the stats JSON here instead of stdout.")
@click.option("--force", is_flag=True)
def stats(preds_path, out_path, force) -> None:
    """Length and creativity statistics of a predictions file."""
    predictions, _ = metrics.read_predictions(preds_path)
    if not predictions:
        raise DataError(f"no valid predictions in {preds_path}")
    lengths = {}
    for label, texts in (
        ("original", [p.original_title for p in predictions]),
        ("predicted", [p.predicted_title for p in predictions]),
    ):
        st = metrics.descriptive_stats([float(len(t.split())) for t in texts])
        lengths[label] = {"mean": st.mean, "sd": st.sd, "cv_percent": st.cv_percent}
    out = {
        "n": len(predictions),
        "lengths": lengths,
        "creativity": metrics.creativity_stats(predictions),
    }
    text = json.dumps(out, indent=2)
    if out_path:
        out_path = Path(out_path)
        _check_output(out_path, force)
        out_path.write_text(text, encoding="utf-8")
    else:
        click.echo(text)


@cli.command()
@click.option("--preds", "preds_path", type=click.Path(), required=True)
@click.option("--field", type=click.Choice(["predicted", "original", "review"]),
              default="predicted", show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="TSV output (token<TAB>count).")
@click.option("--top-k", type=int, default=None)
@click.option("--figure/--no-figure", default=True, show_default=True)
@click.option("--force", is_flag=True)
def wordcloud(preds_path, field, out_path, top_k, figure, force) -> None:
    """Word-frequency export for the word-cloud style analysis."""
    out_path = Path(out_path)
    _check_output(out_path, force)
    predictions, _ = metrics.read_predictions(preds_path)
    if not predictions:
        raise DataError(f"no valid predictions in {preds_path}")
    texts = {
        "predicted": [p.predicted_title for p in predictions],
        "original": [p.original_title for p in predictions],
        "review": [p.review_text for p in predictions],
    }[field]
    pairs = metrics.word_frequencies(texts, top_k)
    metrics.write_word_frequencies(pairs, out_path)
    if figure:
        reporting.plot_word_frequencies(pairs, out_path.with_suffix(".png"))
    click.echo(f"wrote {len(pairs)} token counts to {out_path}")


# ---------------------------------------------------------------------------

def _load_items(preds_paths, include_originals: bool):
    all_preds = []
    for p in preds_paths:
        preds, _ = metrics.read_predictions(p)
        all_preds.extend(preds)
    if not all_preds:
        raise DataError("no valid predictions in the given files")
    return anno.build_items(all_preds, include_originals=include_originals)


@cli.command()
@click.option("--preds", "preds_paths", type=click.Path(), multiple=True, required=True)
@click.option("--store", "store_path", type=click.Path(), required=True)
@click.option("--annotator", default="anon", show_default=True)
@click.option("--sample", type=float, default=None,
              help="Score only this fraction of the pool, e.g. 0.06.")
@click.option("--originals/--no-originals", default=True, show_default=True,
              help="Include original titles in the pool.")
def annotate(preds_paths, store_path, annotator, sample, originals) -> None:
    """Blind terminal scoring of candidate hashtags (0 / 0.5 / 1)."""
    items = _load_items(preds_paths, originals)
    store = anno.ScoreStore(store_path)
    n = anno.annotate_terminal(items, store, annotator, fraction=sample)
    scored = [s.score for s in store.effective().values()]
    if scored:
        st = metrics.descriptive_stats(scored)
        click.echo(f"\nrecorded {n} judgments; store mean {st.mean:.3f} ± {st.sd:.3f}")


@cli.command()
@click.option("--preds", "preds_paths", type=click.Path(), multiple=True, required=True)
@click.option("--store", "store_path", type=click.Path(), required=True)
@click.option("--port", type=int, default=8077, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--originals/--no-originals", default=True, show_default=True)
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Static UI bundle to serve at / (default: packaged bundle).")
def serve(preds_paths, store_path, port, host, originals, ui_dir) -> None:
    """Run the annotation HTTP API (and UI) for browser-based scoring."""
    import uvicorn

    items = _load_items(preds_paths, originals)
    store = anno.ScoreStore(store_path)
    app = create_app(items, store, ui_dir=ui_dir or UI_DIR)
    uvicorn.run(app, host=host, port=port)


# ---------------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit-code contract."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except (DataError, corpus.CorpusError, MetricsError, CheckpointError,
            NumericsError, FileNotFoundError) as e:
        click.echo(f"error: {e}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
