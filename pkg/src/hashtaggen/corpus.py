"""Review corpus ingestion, cleaning, vocabulary and training-example construction.

Two training framings are produced from the same cleaned records:
seq2seq pairs (review text -> <start> title <end>) and masked next-word
steps (review [SEP] prefix [MASK] -> next title word).
"""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

# Reserved special tokens, ids 0..5 in this order.
PAD, UNK, START, END, SEP, MASK = range(6)
SPECIAL_TOKENS = ["<pad>", "<unk>", "<start>", "<end>", "[SEP]", "[MASK]"]

_PUNCT = ".,!?"

MAX_SOURCE_LEN = 60
MAX_CONTEXT_LEN = 72
MAX_TARGET_LEN = 16


class CorpusError(Exception):
    """Raised for unusable input files (missing columns, empty corpus...)."""


@dataclass
class ReviewRecord:
    id: str
    title_raw: str
    text_raw: str


@dataclass
class CorpusSplit:
    train: list[ReviewRecord]
    validation: list[ReviewRecord]
    test: list[ReviewRecord]
    seed: int
    ratios: tuple[float, float, float]


def clean_text(raw: str) -> str:
    """Lowercase, drop digits and special characters, pad .,!? with spaces.

    Keeps letters (including accented), whitespace and the four sentence
    marks. Idempotent.
    """
    out = []
    for ch in raw.lower():
        if ch in _PUNCT:
            out.append(f" {ch} ")
        elif ch.isalpha() or ch.isspace():
            out.append(ch)
    return " ".join("".join(out).split())


def load_reviews(
    path: str | Path,
    title_col: str = "review_title",
    text_col: str = "review_text",
    strict: bool = False,
) -> tuple[list[ReviewRecord], int]:
    """Load (title, text) records from a UTF-8 CSV with a header row.

    Rows with empty title or text (after trimming) are dropped; returns
    (records, dropped_count). Malformed rows are skipped with a warning
    unless strict.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"input file not found: {path}")
    records: list[ReviewRecord] = []
    dropped = 0
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise CorpusError(f"empty CSV: {path}")
        for col in (title_col, text_col):
            if col not in reader.fieldnames:
                raise CorpusError(f"missing column {col!r} in {path}")
        for i, row in enumerate(reader):
            title = row.get(title_col)
            text = row.get(text_col)
            if title is None or text is None:
                msg = f"malformed CSV row {i + 2} in {path}"
                if strict:
                    raise CorpusError(msg)
                logger.warning("%s (skipped)", msg)
                dropped += 1
                continue
            title, text = title.strip(), text.strip()
            if not title or not text:
                dropped += 1
                continue
            records.append(ReviewRecord(id=f"r{i:06d}", title_raw=title, text_raw=text))
    return records, dropped


@dataclass
class Vocabulary:
    """Bijective token<->id map; specials occupy ids 0..5."""

    tokens: list[str]
    _ids: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.tokens[:6] != SPECIAL_TOKENS:
            raise ValueError("vocabulary must start with the six special tokens")
        self._ids = {t: i for i, t in enumerate(self.tokens)}
        if len(self._ids) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    def token_id(self, token: str) -> int:
        return self._ids.get(token, UNK)

    def token(self, idx: int) -> str:
        return self.tokens[idx]

    def to_json(self) -> dict:
        return {"specials": SPECIAL_TOKENS, "tokens": self.tokens[6:]}

    @classmethod
    def from_json(cls, obj: dict) -> "Vocabulary":
        if obj.get("specials") != SPECIAL_TOKENS:
            raise ValueError("vocabulary file has unexpected special tokens")
        return cls(SPECIAL_TOKENS + list(obj["tokens"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), ensure_ascii=False), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def build_vocab(texts: list[str], cap: int = 4000) -> Vocabulary:
    """Most frequent whitespace tokens, ties broken lexicographically."""
    if cap <= 6:
        raise ValueError("cap must leave room beyond the 6 special tokens")
    counts: dict[str, int] = {}
    for text in texts:
        for tok in text.split():
            counts[tok] = counts.get(tok, 0) + 1
    ordered = sorted(counts, key=lambda t: (-counts[t], t))
    return Vocabulary(SPECIAL_TOKENS + ordered[: cap - 6])


def encode(text: str, vocab: Vocabulary, max_len: int, pad: bool = False) -> list[int]:
    """Token ids for a cleaned string; OOV -> UNK, truncate to max_len, PAD-fill."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    ids = [vocab.token_id(t) for t in text.split()][:max_len]
    if pad:
        ids = ids + [PAD] * (max_len - len(ids))
    return ids


def decode(ids: list[int], vocab: Vocabulary, skip_special: bool = True) -> str:
    toks = [vocab.token(i) for i in ids if not (skip_special and i < 6)]
    return " ".join(toks)


@dataclass
class Seq2SeqExample:
    id: str
    source_ids: list[int]
    target_ids: list[int]


@dataclass
class MaskedStepExample:
    id: str
    context_ids: list[int]
    mask_position: int
    target_id: int


def make_seq2seq_example(
    record: ReviewRecord,
    vocab: Vocabulary,
    max_source_len: int = MAX_SOURCE_LEN,
    max_target_len: int = MAX_TARGET_LEN,
) -> Seq2SeqExample | None:
    """Encoded (text -> START title END) pair, padded; None if either side cleans empty."""
    title = clean_text(record.title_raw)
    text = clean_text(record.text_raw)
    if not title or not text:
        return None
    source = encode(text, vocab, max_source_len, pad=True)
    title_ids = encode(title, vocab, max_target_len - 2)
    target = [START] + title_ids + [END]
    target = target + [PAD] * (max_target_len - len(target))
    return Seq2SeqExample(id=record.id, source_ids=source, target_ids=target)


def expand_masked_examples(
    record: ReviewRecord,
    vocab: Vocabulary,
    max_context_len: int = MAX_CONTEXT_LEN,
) -> list[MaskedStepExample] | None:
    """One next-word prediction step per title token plus a SEP terminator.

    Step k's context is "text [SEP] title[0..k) [MASK]". Records whose longest
    context would exceed max_context_len are dropped (returns None), as are
    records that clean to empty.
    """
    title = clean_text(record.title_raw)
    text = clean_text(record.text_raw)
    if not title or not text:
        return None
    text_ids = [vocab.token_id(t) for t in text.split()]
    title_ids = [vocab.token_id(t) for t in title.split()]
    n = len(title_ids)
    # longest context: text SEP title MASK
    if len(text_ids) + 1 + n + 1 > max_context_len:
        return None
    examples = []
    for k in range(n + 1):
        context = text_ids + [SEP] + title_ids[:k] + [MASK]
        mask_pos = len(context) - 1
        context = context + [PAD] * (max_context_len - len(context))
        target = title_ids[k] if k < n else SEP
        examples.append(
            MaskedStepExample(
                id=f"{record.id}.{k}",
                context_ids=context,
                mask_position=mask_pos,
                target_id=target,
            )
        )
    return examples


def split_corpus(
    records: list[ReviewRecord],
    ratios: tuple[float, float, float] = (0.70, 0.15, 0.15),
    seed: int = 42,
) -> CorpusSplit:
    """Deterministic shuffle then contiguous slices; train absorbs rounding."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    if len(records) < 3:
        raise CorpusError("need at least 3 records to split")
    shuffled = list(records)
    random.Random(seed).shuffle(shuffled)
    n = len(shuffled)
    n_val = int(n * ratios[1])
    n_test = int(n * ratios[2])
    n_train = n - n_val - n_test
    return CorpusSplit(
        train=shuffled[:n_train],
        validation=shuffled[n_train : n_train + n_val],
        test=shuffled[n_train + n_val :],
        seed=seed,
        ratios=tuple(ratios),
    )


# ---------------------------------------------------------------------------
# Dataset file IO (JSON lines)

def write_seq2seq_dataset(examples: list[Seq2SeqExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for ex in examples:
            f.write(
                json.dumps(
                    {"id": ex.id, "source_ids": ex.source_ids, "target_ids": ex.target_ids}
                )
                + "\n"
            )


def read_seq2seq_dataset(path: str | Path) -> list[Seq2SeqExample]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                d = json.loads(line)
                out.append(Seq2SeqExample(d["id"], d["source_ids"], d["target_ids"]))
    return out


def write_masked_dataset(examples: list[MaskedStepExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for ex in examples:
            f.write(
                json.dumps(
                    {
                        "id": ex.id,
                        "context_ids": ex.context_ids,
                        "mask_position": ex.mask_position,
                        "target_id": ex.target_id,
                    }
                )
                + "\n"
            )


def read_masked_dataset(path: str | Path) -> list[MaskedStepExample]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                d = json.loads(line)
                out.append(
                    MaskedStepExample(
                        d["id"], d["context_ids"], d["mask_position"], d["target_id"]
                    )
                )
    return out


def write_records(records: list[ReviewRecord], path: str | Path) -> None:
    """Cleaned (id, title, text) triples, one JSON object per line."""
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(
                json.dumps(
                    {
                        "id": r.id,
                        "title": clean_text(r.title_raw),
                        "text": clean_text(r.text_raw),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_records(path: str | Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                out.append(json.loads(line))
    return out
