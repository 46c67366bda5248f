"""File outputs for training and evaluation runs: CSV tables and figures."""

from __future__ import annotations

import csv
import math

import matplotlib

matplotlib.use("Agg")  # file rendering only, no display server
import matplotlib.pyplot as plt

from .evaluation import EvalReport, render_report
from .training import TrainHistory


def write_history_csv(history: TrainHistory, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
        for epoch, rec in enumerate(history.records, start=1):
            writer.writerow([epoch, f"{rec.train_loss:.6f}", f"{rec.train_acc:.6f}",
                             f"{rec.val_loss:.6f}", f"{rec.val_acc:.6f}"])


def render_history_figure(history: TrainHistory, path) -> None:
    """Loss and accuracy curves over epochs, train and validation."""
    epochs = range(1, len(history.records) + 1)
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(10, 4))
    ax_loss.plot(epochs, [r.train_loss for r in history.records], label="train")
    ax_loss.plot(epochs, [r.val_loss for r in history.records], label="validation")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("cross-entropy loss")
    ax_loss.legend()
    ax_loss.grid(True, alpha=0.3)
    ax_acc.plot(epochs, [r.train_acc for r in history.records], label="train")
    ax_acc.plot(epochs, [r.val_acc for r in history.records], label="validation")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0.0, 1.02)
    ax_acc.legend()
    ax_acc.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_confusion_csv(report: EvalReport, path) -> None:
    """Confusion counts plus per-class support and accuracy, one row per class."""
    names = report.confusion.class_names
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true_class"] + [f"pred_{n}" for n in names]
                        + ["support", "accuracy"])
        for idx, name in enumerate(names):
            row_total = report.confusion.row_total(idx)
            acc = (f"{report.confusion.count(idx, idx) / row_total:.6f}"
                   if row_total > 0 else "n/a")
            writer.writerow([name] + [report.confusion.count(idx, p) for p in range(len(names))]
                            + [row_total, acc])


def write_eval_json(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_report(report, fmt="json") + "\n")


def render_confusion_figure(report: EvalReport, path) -> None:
    """Confusion-matrix heatmap with per-cell counts."""
    names = report.confusion.class_names
    counts = report.confusion.counts
    fig, ax = plt.subplots(figsize=(1.2 * len(names) + 2.5, 1.0 * len(names) + 2.0))
    im = ax.imshow(counts, cmap="Blues")
    ax.set_xticks(range(len(names)), names, rotation=30, ha="right")
    ax.set_yticks(range(len(names)), names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"overall accuracy {report.overall_accuracy:.4f}")
    threshold = counts.max() / 2 if counts.max() > 0 else math.inf
    for t in range(len(names)):
        for p in range(len(names)):
            color = "white" if counts[t, p] > threshold else "black"
            ax.text(p, t, str(int(counts[t, p])), ha="center", va="center", color=color)
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
