"""Classification scoring: precision/recall/F1, one-vs-rest multiclass
averaging, macro and size-weighted task aggregates, and intercoder agreement.

Degenerate 0/0 ratios resolve to 0, and tasks with zero test items are
excluded from aggregates rather than zeroed.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence

from .errors import EmptyInput, LengthMismatch


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")


@dataclass(frozen=True)
class TaskScore:
    task_id: str
    f1: float
    test_size: int

    def __post_init__(self):
        if not 0.0 <= self.f1 <= 1.0:
            raise ValueError(f"f1 {self.f1} outside [0, 1]")
        if self.test_size < 0:
            raise ValueError("test_size must be non-negative")


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def prf1(counts: ConfusionCounts) -> tuple[float, float, float]:
    precision = _safe_div(counts.tp, counts.tp + counts.fp)
    recall = _safe_div(counts.tp, counts.tp + counts.fn)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return precision, recall, f1


def confusion_for_class(
    preds: Sequence[Hashable], truths: Sequence[Hashable], cls: Hashable
) -> ConfusionCounts:
    """Binarize to cls-vs-rest and count."""
    tp = fp = fn = tn = 0
    for p, t in zip(preds, truths):
        if p == cls and t == cls:
            tp += 1
        elif p == cls:
            fp += 1
        elif t == cls:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def multiclass_f1_ovr(
    preds: Sequence[Hashable], truths: Sequence[Hashable], classes: Sequence[Hashable]
) -> tuple[dict[Hashable, float], float]:
    """Per-class one-vs-rest F1 and their unweighted mean."""
    if len(preds) != len(truths):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(truths)} truths")
    per_class = {
        cls: prf1(confusion_for_class(preds, truths, cls))[2] for cls in classes
    }
    average = sum(per_class.values()) / len(classes)
    return per_class, average


def macro_f1(scores: Sequence[TaskScore]) -> float:
    """Unweighted mean of per-task F1; zero-size tasks are skipped."""
    usable = [s for s in scores if s.test_size > 0]
    if not usable:
        raise EmptyInput("no tasks with test items")
    return sum(s.f1 for s in usable) / len(usable)


def weighted_f1(scores: Sequence[TaskScore]) -> float:
    """Test-size-weighted mean of per-task F1; zero-size tasks are skipped."""
    usable = [s for s in scores if s.test_size > 0]
    if not usable:
        raise EmptyInput("no tasks with test items")
    total = sum(s.test_size for s in usable)
    return sum(s.f1 * s.test_size for s in usable) / total


@dataclass(frozen=True)
class Annotation:
    """One coder's judgment on one item: presence plus, for evaluations,
    a polarity (None for presence-only constructs)."""

    present: bool
    polarity: Optional[int] = None


def intercoder_agreement(
    coder_a: Sequence[Annotation], coder_b: Sequence[Annotation]
) -> float:
    """Fraction of items where presence and polarity both match."""
    if len(coder_a) != len(coder_b):
        raise LengthMismatch(f"{len(coder_a)} vs {len(coder_b)} annotations")
    if not coder_a:
        raise EmptyInput("no annotations to compare")
    agreed = sum(
        1
        for a, b in zip(coder_a, coder_b)
        if a.present == b.present and a.polarity == b.polarity
    )
    return agreed / len(coder_a)


def scores_to_csv(scores: Sequence[TaskScore]) -> str:
    """Columns: perception, test_size, f1."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["perception", "test_size", "f1"])
    for s in scores:
        writer.writerow([s.task_id, s.test_size, f"{s.f1:.6g}"])
    return buf.getvalue()
