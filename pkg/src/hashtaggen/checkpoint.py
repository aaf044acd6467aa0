"""Portable JSON checkpoints for both model kinds.

One document: {"format_version": 1, "model_kind", "config", "vocab",
"params": {name: {"shape": [...], "data": [...]}}}. float64 values survive
the round trip exactly (repr-based JSON floats).
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .corpus import Vocabulary
from .maskedlm import MaskedLMModel, TransformerConfig
from .seq2seq import Seq2SeqConfig, Seq2SeqModel

FORMAT_VERSION = 1

MODEL_KIND_SEQ2SEQ = "bilstm_seq2seq"
MODEL_KIND_MASKEDLM = "masked_lm"


class CheckpointError(Exception):
    pass


def save_checkpoint(model, vocab: Vocabulary, path: str | Path) -> None:
    if isinstance(model, Seq2SeqModel):
        kind = MODEL_KIND_SEQ2SEQ
    elif isinstance(model, MaskedLMModel):
        kind = MODEL_KIND_MASKEDLM
    else:
        raise CheckpointError(f"unknown model type {type(model).__name__}")
    doc = {
        "format_version": FORMAT_VERSION,
        "model_kind": kind,
        "config": asdict(model.config),
        "vocab": vocab.to_json(),
        "params": {
            name: {"shape": list(p.value.shape), "data": p.value.reshape(-1).tolist()}
            for name, p in model.params.items()
        },
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_checkpoint(path: str | Path):
    """Returns (model, vocab, model_kind)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if doc.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format in {path}")
    kind = doc["model_kind"]
    vocab = Vocabulary.from_json(doc["vocab"])
    if kind == MODEL_KIND_SEQ2SEQ:
        model = Seq2SeqModel(Seq2SeqConfig(**doc["config"]))
    elif kind == MODEL_KIND_MASKEDLM:
        model = MaskedLMModel(TransformerConfig(**doc["config"]))
    else:
        raise CheckpointError(f"unknown model_kind {kind!r} in {path}")
    for name, entry in doc["params"].items():
        if name not in model.params:
            raise CheckpointError(f"unexpected parameter {name!r} in {path}")
        value = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        if value.shape != model.params[name].value.shape:
            raise CheckpointError(f"shape mismatch for parameter {name!r}")
        model.params[name].value[...] = value
    return model, vocab, kind
