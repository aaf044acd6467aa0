"""Evaluation battery: BLEU, NIST, METEOR, descriptive statistics,
min-max normalization, creativity statistics, human-score aggregation and
word-frequency export.

All sentence metrics score a single hypothesis against a single reference and
are averaged with mean +- sample sd and %CV across an evaluation file.
"""

from __future__ import annotations

import json
import math
import statistics
import warnings
from collections import Counter
from dataclasses import dataclass, asdict
from pathlib import Path

_PUNCT_TOKENS = {".", ",", "!", "?"}
_SPECIAL_STRINGS = {"<pad>", "<unk>", "<start>", "<end>", "[SEP]", "[MASK]"}

VALID_SCORES = (0.0, 0.5, 1.0)


class MetricsError(Exception):
    pass


@dataclass
class PredictionRecord:
    id: str
    review_text: str
    original_title: str
    predicted_title: str
    model_kind: str


@dataclass
class AnnotationScore:
    item_id: str
    source: str  # original | bilstm | maskedlm
    score: float
    annotator: str
    timestamp: str

    def __post_init__(self):
        if self.score not in VALID_SCORES:
            raise MetricsError(f"score must be one of {VALID_SCORES}, got {self.score}")


# ---------------------------------------------------------------------------
# Sentence metrics

def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hypothesis: list[str], reference: list[str]) -> float:
    """Sentence BLEU with clipped precisions for n = 1..min(4, |hyp|).

    Uniform weights over the used orders, brevity penalty
    exp(1 - |ref|/|hyp|) for short hypotheses, no smoothing: any zero
    precision gives 0.
    """
    if not hypothesis:
        return 0.0
    max_n = min(4, len(hypothesis))
    log_sum = 0.0
    for n in range(1, max_n + 1):
        hyp_ngrams = _ngrams(hypothesis, n)
        ref_ngrams = _ngrams(reference, n)
        matched = sum(min(c, ref_ngrams[g]) for g, c in hyp_ngrams.items())
        total = sum(hyp_ngrams.values())
        if matched == 0:
            return 0.0
        log_sum += math.log(matched / total)
    bp = 1.0
    if len(hypothesis) < len(reference):
        bp = math.exp(1.0 - len(reference) / len(hypothesis))
    return bp * math.exp(log_sum / max_n)


class NistInfoTable:
    """N-gram information weights from a reference corpus.

    info(w1..wn) = log2(count(w1..wn-1) / count(w1..wn)); the empty prefix
    counts as the total number of unigram tokens.
    """

    MAX_N = 5

    def __init__(self, reference_texts: list[list[str]]):
        self.counts: Counter = Counter()
        self.total_unigrams = 0
        for toks in reference_texts:
            self.total_unigrams += len(toks)
            for n in range(1, self.MAX_N + 1):
                self.counts.update(_ngrams(toks, n))

    def info(self, ngram: tuple[str, ...]) -> float:
        c = self.counts.get(ngram, 0)
        if c == 0:
            return 0.0
        prefix = self.counts[ngram[:-1]] if len(ngram) > 1 else self.total_unigrams
        return math.log2(prefix / c)


_NIST_BETA = math.log(0.5) / math.log(1.5) ** 2


def nist(hypothesis: list[str], reference: list[str], info_table: NistInfoTable) -> float:
    """NIST n-gram co-occurrence score, orders 1..5, with brevity factor."""
    if not hypothesis or not reference:
        return 0.0
    score = 0.0
    for n in range(1, NistInfoTable.MAX_N + 1):
        hyp_ngrams = _ngrams(hypothesis, n)
        if not hyp_ngrams:
            break
        ref_ngrams = _ngrams(reference, n)
        num = 0.0
        for g, c in hyp_ngrams.items():
            matched = min(c, ref_ngrams.get(g, 0))
            if matched:
                num += matched * info_table.info(g)
        score += num / sum(hyp_ngrams.values())
    ratio = min(len(hypothesis) / len(reference), 1.0)
    brevity = math.exp(_NIST_BETA * math.log(ratio) ** 2)
    return score * brevity


def _best_alignment(hypothesis: list[str], reference: list[str]) -> tuple[int, int]:
    """(matches, chunks) of the exact-match alignment maximizing matches then
    minimizing chunks. Exhaustive search; hashtag-scale inputs are tiny."""
    max_matches = sum(
        min(c, Counter(reference)[w]) for w, c in Counter(hypothesis).items()
    )
    if max_matches == 0:
        return 0, 0
    ref_positions: dict[str, list[int]] = {}
    for j, w in enumerate(reference):
        ref_positions.setdefault(w, []).append(j)
    best_chunks = [math.inf]

    def search(i: int, used: set[int], matches: int, chunks: int, prev_j: int) -> None:
        if chunks >= best_chunks[0]:
            return
        if matches == max_matches:
            best_chunks[0] = min(best_chunks[0], chunks)
            return
        if i == len(hypothesis):
            return
        w = hypothesis[i]
        candidates = [j for j in ref_positions.get(w, []) if j not in used]
        for j in candidates:
            new_chunks = chunks + (0 if j == prev_j + 1 else 1)
            used.add(j)
            search(i + 1, used, matches + 1, new_chunks, j)
            used.remove(j)
        search(i + 1, used, matches, chunks, -2)

    search(0, set(), 0, 0, -2)
    return max_matches, int(best_chunks[0])


def meteor(hypothesis: list[str], reference: list[str]) -> float:
    """Exact-match METEOR: F = 10PR/(R+9P), penalty 0.5 (chunks/m)^3."""
    if not hypothesis or not reference:
        return 0.0
    m, chunks = _best_alignment(hypothesis, reference)
    if m == 0:
        return 0.0
    p = m / len(hypothesis)
    r = m / len(reference)
    f = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (chunks / m) ** 3
    return f * (1.0 - penalty)


# ---------------------------------------------------------------------------
# Statistics

@dataclass
class Stats:
    mean: float
    sd: float
    cv_percent: float | None  # None when the mean is 0


def descriptive_stats(values: list[float]) -> Stats:
    """Mean, sample sd (n-1; 0 for a single value) and %CV = 100 sd/mean."""
    if not values:
        raise MetricsError("descriptive_stats of empty input")
    mean = statistics.fmean(values)
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    cv = 100.0 * sd / mean if mean != 0 else None
    return Stats(mean, sd, cv)


def cv_percent(mean: float, sd: float) -> float:
    """Coefficient of variation from already-computed mean and sd."""
    if mean == 0:
        raise MetricsError("%CV undefined at mean 0")
    return 100.0 * sd / mean


def min_max_normalize(values: list[float]) -> list[float]:
    """x' = (x - min) / (max - min); a constant list maps to all zeros."""
    if not values:
        return []
    lo, hi = min(values), max(values)
    if hi == lo:
        warnings.warn("min_max_normalize of a constant list; returning zeros")
        return [0.0] * len(values)
    return [(x - lo) / (hi - lo) for x in values]


def creativity_stats(predictions: list[PredictionRecord]) -> dict:
    """Unique predicted sentences and predicted-vocabulary coverage of the
    original-title vocabulary of the same evaluation set."""
    unique = len({p.predicted_title for p in predictions})
    orig_vocab = {t for p in predictions for t in p.original_title.split()}
    pred_vocab = {t for p in predictions for t in p.predicted_title.split()}
    used = pred_vocab & orig_vocab
    percent = 100.0 * len(used) / len(orig_vocab) if orig_vocab else 0.0
    return {
        "unique_predictions": unique,
        "vocab_used_count": len(used),
        "vocab_used_percent": percent,
    }


def metricf_aggregate(
    scores: list[AnnotationScore],
    source: str | None = None,
    total_items: int | None = None,
) -> dict:
    """Mean +- sample sd of the 3-point human scores, with coverage."""
    selected = [s for s in scores if source is None or s.source == source]
    count = len(selected)
    vals = [s.score for s in selected]
    mean = statistics.fmean(vals) if vals else None
    sd = statistics.stdev(vals) if len(vals) > 1 else (0.0 if vals else None)
    coverage = 100.0 * count / total_items if total_items else None
    return {"count": count, "mean": mean, "sd": sd, "coverage_percent": coverage}


def word_frequencies(texts: list[str], top_k: int | None = None) -> list[tuple[str, int]]:
    """Descending (token, count), lexicographic tie-break; punctuation and
    special tokens excluded."""
    counts: Counter = Counter()
    for text in texts:
        for tok in text.split():
            if tok not in _PUNCT_TOKENS and tok not in _SPECIAL_STRINGS:
                counts[tok] += 1
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ordered[:top_k] if top_k else ordered


# ---------------------------------------------------------------------------
# Predictions file evaluation

def read_predictions(path: str | Path) -> tuple[list[PredictionRecord], int]:
    """JSON-lines predictions; malformed lines skipped with a count."""
    records = []
    skipped = 0
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                records.append(
                    PredictionRecord(
                        id=d["id"],
                        review_text=d["review_text"],
                        original_title=d["original_title"],
                        predicted_title=d["predicted_title"],
                        model_kind=d.get("model_kind", "unknown"),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError):
                skipped += 1
    return records, skipped


def write_predictions(records: list[PredictionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(asdict(r), ensure_ascii=False) + "\n")


def evaluate_predictions(
    predictions: list[PredictionRecord],
    info_corpus: list[list[str]] | None = None,
) -> dict:
    """Full metric report over an evaluation set.

    The NIST info table is built from info_corpus when given, else from the
    set's own original titles.
    """
    if not predictions:
        raise MetricsError("no predictions to evaluate")
    refs = [p.original_title.split() for p in predictions]
    hyps = [p.predicted_title.split() for p in predictions]
    table = NistInfoTable(info_corpus if info_corpus is not None else refs)
    per_sentence = {
        "bleu": [bleu(h, r) for h, r in zip(hyps, refs)],
        "nist": [nist(h, r, table) for h, r in zip(hyps, refs)],
        "meteor": [meteor(h, r) for h, r in zip(hyps, refs)],
    }
    metrics_block = {}
    for name, scores in per_sentence.items():
        st = descriptive_stats(scores)
        with warnings.catch_warnings():
            # constant per-sentence scores are routine on small sets
            warnings.simplefilter("ignore")
            normalized = min_max_normalize(scores)
        metrics_block[name] = {
            "mean": st.mean,
            "sd": st.sd,
            "cv_percent": st.cv_percent,
            "normalized_mean": statistics.fmean(normalized) if normalized else 0.0,
        }
    length_block = {}
    for label, sents in (("original", refs), ("predicted", hyps)):
        st = descriptive_stats([float(len(s)) for s in sents])
        length_block[label] = {"mean": st.mean, "sd": st.sd, "cv_percent": st.cv_percent}
    return {
        "n": len(predictions),
        "model_kinds": sorted({p.model_kind for p in predictions}),
        "metrics": metrics_block,
        "lengths": length_block,
        "creativity": creativity_stats(predictions),
    }


def evaluate_file(path: str | Path, info_corpus: list[list[str]] | None = None) -> dict:
    predictions, skipped = read_predictions(path)
    if not predictions:
        raise MetricsError(f"no valid predictions in {path}")
    report = evaluate_predictions(predictions, info_corpus)
    report["skipped_lines"] = skipped
    return report


def write_word_frequencies(pairs: list[tuple[str, int]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for token, count in pairs:
            f.write(f"{token}\t{count}\n")
