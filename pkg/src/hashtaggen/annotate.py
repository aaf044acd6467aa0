"""Human-annotation plumbing shared by the terminal loop and the HTTP API.

Items pool candidate hashtags (original titles and model predictions) with
their source withheld from blind presentation; judgments land in an
append-only JSON-lines store, last write per (item_id, annotator) wins.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
from dataclasses import dataclass, asdict
from datetime import datetime, timezone
from pathlib import Path

from .metrics import VALID_SCORES, AnnotationScore, MetricsError, PredictionRecord

QUESTION = "Does this sentence look like a good or bad Ecommerce product page hashtag?"

KEY_TO_SCORE = {"0": 0.0, "5": 0.5, "1": 1.0}


@dataclass
class AnnotationItem:
    item_id: str
    review_text: str
    candidate_title: str
    source: str  # original | bilstm | maskedlm

    def blind(self) -> dict:
        d = asdict(self)
        del d["source"]
        return d


def _item_id(source: str, record_id: str) -> str:
    return hashlib.sha1(f"{source}:{record_id}".encode()).hexdigest()[:16]


def build_items(
    predictions: list[PredictionRecord], include_originals: bool = True
) -> list[AnnotationItem]:
    """One item per prediction, plus one per distinct original title."""
    items: list[AnnotationItem] = []
    seen_originals: set[str] = set()
    for p in predictions:
        items.append(
            AnnotationItem(
                item_id=_item_id(p.model_kind, p.id),
                review_text=p.review_text,
                candidate_title=p.predicted_title,
                source=p.model_kind,
            )
        )
        if include_originals and p.id not in seen_originals:
            seen_originals.add(p.id)
            items.append(
                AnnotationItem(
                    item_id=_item_id("original", p.id),
                    review_text=p.review_text,
                    candidate_title=p.original_title,
                    source="original",
                )
            )
    return items


class ScoreStore:
    """Append-only JSON-lines score store; each line is fsynced complete."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, score: AnnotationScore) -> None:
        line = json.dumps(asdict(score), ensure_ascii=False) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line)
                f.flush()
                os.fsync(f.fileno())

    def load(self) -> list[AnnotationScore]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    d = json.loads(line)
                    out.append(AnnotationScore(**d))
        return out

    def effective(self) -> dict[tuple[str, str], AnnotationScore]:
        """Last score per (item_id, annotator)."""
        result: dict[tuple[str, str], AnnotationScore] = {}
        for s in self.load():
            result[(s.item_id, s.annotator)] = s
        return result


def record_score(
    store: ScoreStore, item: AnnotationItem, score: float, annotator: str
) -> AnnotationScore:
    if score not in VALID_SCORES:
        raise MetricsError(f"score must be one of {VALID_SCORES}, got {score}")
    entry = AnnotationScore(
        item_id=item.item_id,
        source=item.source,
        score=score,
        annotator=annotator,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )
    store.append(entry)
    return entry


def sample_size(total: int, fraction: float) -> int:
    return min(total, math.ceil(fraction * total))


def annotate_terminal(
    items: list[AnnotationItem],
    store: ScoreStore,
    annotator: str,
    fraction: float | None = None,
    input_fn=input,
    output_fn=print,
) -> int:
    """Blind terminal scoring loop; keys 0/5/1 map to 0/0.5/1.0, q quits.

    Already-scored items are skipped so an interrupted session resumes.
    Returns the number of judgments recorded.
    """
    done = {iid for (iid, who) in store.effective() if who == annotator}
    pending = [it for it in items if it.item_id not in done]
    if fraction is not None:
        budget = max(0, sample_size(len(items), fraction) - len(done))
        pending = pending[:budget]
    recorded = 0
    for i, item in enumerate(pending, 1):
        output_fn(f"\n[{i}/{len(pending)}] review: {item.review_text}")
        output_fn(f"candidate hashtag: {item.candidate_title}")
        output_fn(QUESTION)
        while True:
            key = input_fn("score [0 = bad, 5 = 0.5, 1 = good, q = quit]: ").strip()
            if key == "q":
                return recorded
            if key in KEY_TO_SCORE:
                record_score(store, item, KEY_TO_SCORE[key], annotator)
                recorded += 1
                break
            output_fn("invalid key; use 0, 5, 1 or q")
    return recorded
