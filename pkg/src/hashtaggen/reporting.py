"""Matplotlib figures rendered alongside the delimited/JSON outputs."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_training_history(history_path: str | Path, out_path: str | Path) -> None:
    """Accuracy (and loss) curves from a JSON-lines training history."""
    epochs, loss, acc, val = [], [], [], []
    with open(history_path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                d = json.loads(line)
                epochs.append(d["epoch"])
                loss.append(d["train_loss"])
                acc.append(d["train_acc"])
                val.append(d.get("val_acc"))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(epochs, acc, marker="o", label="train accuracy")
    if any(v is not None for v in val):
        ax1.plot(epochs, val, marker="s", label="validation accuracy")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("accuracy")
    ax1.set_ylim(0, 1.05)
    ax1.legend()
    ax1.grid(alpha=0.3)
    ax2.plot(epochs, loss, marker="o", color="tab:red")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("training loss")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def plot_metric_report(report: dict, out_path: str | Path) -> None:
    """Bar chart of metric means with sd error bars."""
    names = list(report["metrics"].keys())
    means = [report["metrics"][n]["mean"] for n in names]
    sds = [report["metrics"][n]["sd"] for n in names]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(names, means, yerr=sds, capsize=4, color="tab:blue", alpha=0.8)
    ax.set_ylabel("score (mean ± sd)")
    ax.set_title(f"metric scores over {report['n']} predictions")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def plot_word_frequencies(
    pairs: list[tuple[str, int]], out_path: str | Path, top_k: int = 30
) -> None:
    """Horizontal bar chart of the most frequent tokens."""
    pairs = pairs[:top_k]
    tokens = [t for t, _ in pairs][::-1]
    counts = [c for _, c in pairs][::-1]
    fig, ax = plt.subplots(figsize=(7, max(3, 0.25 * len(pairs))))
    ax.barh(tokens, counts, color="tab:green", alpha=0.8)
    ax.set_xlabel("count")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
