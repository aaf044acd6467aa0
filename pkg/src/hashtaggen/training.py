"""Epoch loop with validation-based early stopping and JSON-lines history."""

from __future__ import annotations

import json
import logging
from pathlib import Path

from .nn import Adam

logger = logging.getLogger(__name__)


def fit(
    model,
    train_examples: list,
    val_examples: list | None = None,
    epochs: int = 20,
    batch_size: int = 128,
    learning_rate: float = 1e-3,
    seed: int = 0,
    patience: int = 3,
    history_path: str | Path | None = None,
    target_accuracy: float | None = None,
) -> list[dict]:
    """Train until epochs exhausted, validation accuracy stalls for
    `patience` epochs, or train accuracy reaches target_accuracy.

    Writes one JSON line per epoch: {"epoch", "train_loss", "train_acc",
    "val_acc"}. Returns the history as a list of dicts.
    """
    optimizer = Adam(model.parameters(), lr=learning_rate)
    history: list[dict] = []
    best_val = -1.0
    stall = 0
    log_file = open(history_path, "w", encoding="utf-8") if history_path else None
    try:
        for epoch in range(1, epochs + 1):
            stats = model.train_epoch(
                train_examples, optimizer, batch_size=batch_size, seed=seed + epoch
            )
            val_acc = None
            if val_examples:
                val_acc = model.evaluate(val_examples, batch_size=batch_size).accuracy
            entry = {
                "epoch": epoch,
                "train_loss": stats.loss,
                "train_acc": stats.accuracy,
                "val_acc": val_acc,
            }
            history.append(entry)
            if log_file:
                log_file.write(json.dumps(entry) + "\n")
                log_file.flush()
            logger.info(
                "epoch %d: loss %.4f acc %.4f val_acc %s",
                epoch, stats.loss, stats.accuracy,
                f"{val_acc:.4f}" if val_acc is not None else "-",
            )
            if target_accuracy is not None and stats.accuracy >= target_accuracy:
                break
            if val_acc is not None:
                if val_acc > best_val + 1e-9:
                    best_val = val_acc
                    stall = 0
                else:
                    stall += 1
                    if stall >= patience:
                        logger.info("early stop: no val improvement for %d epochs", patience)
                        break
    finally:
        if log_file:
            log_file.close()
    return history
