"""Evaluation: confusion matrix bookkeeping and report rendering."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .landmarks import CLASS_REGISTRY, PoseSequence
from .model import ContractViolation, ModelConfig, ModelParams, forward


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square count matrix: counts[true][predicted]."""

    counts: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        k = len(self.class_names)
        if self.counts.shape != (k, k):
            raise ContractViolation(
                f"confusion counts must be {k}x{k}, got {self.counts.shape}")
        if self.counts.dtype.kind not in "iu":
            raise ContractViolation("confusion counts must be integers")
        if (self.counts < 0).any():
            raise ContractViolation("confusion counts must be nonnegative")

    @classmethod
    def from_pairs(cls, true_indices: Sequence[int], pred_indices: Sequence[int],
                   class_names: Sequence[str]) -> "ConfusionMatrix":
        if len(true_indices) != len(pred_indices):
            raise ContractViolation("true/predicted index lists differ in length")
        k = len(class_names)
        counts = np.zeros((k, k), dtype=np.int64)
        for t, p in zip(true_indices, pred_indices):
            if not (0 <= t < k and 0 <= p < k):
                raise ContractViolation(f"class index out of range: true={t} pred={p}")
            counts[t, p] += 1
        return cls(counts=counts, class_names=tuple(class_names))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def num_correct(self) -> int:
        return int(np.trace(self.counts))

    def count(self, true_idx: int, pred_idx: int) -> int:
        return int(self.counts[true_idx, pred_idx])

    def row_total(self, true_idx: int) -> int:
        return int(self.counts[true_idx].sum())

    def overall_accuracy(self) -> float:
        if self.total == 0:
            raise ContractViolation("confusion matrix is empty")
        return self.num_correct / self.total

    def per_class_accuracy(self) -> dict[str, float]:
        """Diagonal over row total per class; classes never seen are absent."""
        out: dict[str, float] = {}
        for idx, name in enumerate(self.class_names):
            row = self.row_total(idx)
            if row > 0:
                out[name] = int(self.counts[idx, idx]) / row
        return out


@dataclass(frozen=True)
class EvalReport:
    confusion: ConfusionMatrix
    overall_accuracy: float
    per_class_accuracy: dict[str, float]
    support: tuple[int, ...]
    num_sequences: int
    split_name: str = ""

    @classmethod
    def from_confusion(cls, confusion: ConfusionMatrix, split_name: str = "") -> "EvalReport":
        return cls(
            confusion=confusion,
            overall_accuracy=confusion.overall_accuracy(),
            per_class_accuracy=confusion.per_class_accuracy(),
            support=tuple(confusion.row_total(i) for i in range(len(confusion.class_names))),
            num_sequences=confusion.total,
            split_name=split_name,
        )


def evaluate(sequences: Sequence[PoseSequence], params: ModelParams, config: ModelConfig,
             class_names: Optional[Sequence[str]] = None, split_name: str = "") -> EvalReport:
    """Run inference over labeled sequences and tally the confusion matrix.

    Each sequence goes through the same single-sequence forward as the
    prediction and streaming paths, so argmax decisions match bit for bit.
    np.argmax resolves ties to the lowest class index.
    """
    if not sequences:
        raise ContractViolation("evaluate needs at least one sequence")
    if any(s.label is None for s in sequences):
        raise ContractViolation("evaluate needs labeled sequences")
    names = tuple(class_names) if class_names is not None else (
        CLASS_REGISTRY if config.num_classes == len(CLASS_REGISTRY)
        else tuple(f"class_{i}" for i in range(config.num_classes)))
    true_idx = []
    pred_idx = []
    for seq in sequences:
        _, logits = forward(seq, params, config, mode="infer")
        true_idx.append(seq.label.index)
        pred_idx.append(int(np.argmax(logits)))
    confusion = ConfusionMatrix.from_pairs(true_idx, pred_idx, names)
    return EvalReport.from_confusion(confusion, split_name=split_name)


def render_report(report: EvalReport, fmt: str = "table") -> str:
    """Render an EvalReport as an aligned text table or a JSON document.

    The table shows accuracies as percentages to 2 decimal places, with
    "n/a" for a class that has no examples, plus the full confusion grid.
    The JSON form is lossless: raw counts and full-precision ratios.
    """
    if fmt == "json":
        return json.dumps({
            "split_name": report.split_name,
            "num_sequences": report.num_sequences,
            "overall_accuracy": report.overall_accuracy,
            "per_class_accuracy": report.per_class_accuracy,
            "support": list(report.support),
            "class_names": list(report.confusion.class_names),
            "confusion": report.confusion.counts.tolist(),
        }, indent=2)
    if fmt != "table":
        raise ContractViolation(f"unknown report format {fmt!r} (expected 'table' or 'json')")

    names = report.confusion.class_names
    width = max(len(n) for n in names + ("overall",))
    lines = []
    if report.split_name:
        lines.append(f"split: {report.split_name}")
    lines.append(f"{'class':<{width}}  {'support':>7}  {'correct':>7}  accuracy[%]")
    for idx, name in enumerate(names):
        row = report.confusion.row_total(idx)
        correct = report.confusion.count(idx, idx)
        acc = f"{100.0 * correct / row:.2f}" if row > 0 else "n/a"
        lines.append(f"{name:<{width}}  {row:>7}  {correct:>7}  {acc:>11}")
    total = report.confusion.total
    correct = report.confusion.num_correct
    lines.append(f"{'overall':<{width}}  {total:>7}  {correct:>7}  "
                 f"{100.0 * report.overall_accuracy:>10.2f}")
    lines.append("")
    lines.append("confusion (rows = true, columns = predicted):")
    cell = max(5, max(len(n) for n in names))
    header = " " * (width + 2) + "  ".join(f"{n:>{cell}}" for n in names)
    lines.append(header)
    for idx, name in enumerate(names):
        row = "  ".join(f"{int(v):>{cell}}" for v in report.confusion.counts[idx])
        lines.append(f"{name:<{width}}  {row}")
    return "\n".join(lines) + "\n"
