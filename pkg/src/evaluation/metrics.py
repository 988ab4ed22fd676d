"""
Confusion counts and precision / recall / F1 / accuracy with AD as the positive class
"""
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix

from src.exceptions import ReportError, ShapeError

METRIC_NAMES = ("precision", "recall", "f1", "accuracy")


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError(f"confusion counts must be non-negative: {self}")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn)

    def as_dict(self) -> Dict[str, int]:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


@dataclass(frozen=True)
class Metrics:
    """Fractions in [0, 1]; names in ``undefined`` had a zero denominator and were set to 0"""
    precision: float
    recall: float
    f1: float
    accuracy: float
    undefined: FrozenSet[str] = field(default_factory=frozenset)

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def confusion(true_labels: Sequence[int], pred_labels: Sequence[int]) -> Confusion:
    """Count TP/TN/FP/FN with label 1 (AD) as positive"""
    y_true = np.asarray(true_labels, dtype=np.int64)
    y_pred = np.asarray(pred_labels, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"length mismatch: {len(y_true)} labels vs {len(y_pred)} predictions")
    if y_true.size and not (np.isin(y_true, (0, 1)).all() and np.isin(y_pred, (0, 1)).all()):
        raise ShapeError("labels must be 0 (HC) or 1 (AD)")
    if y_true.size == 0:
        return Confusion()
    tn, fp, fn, tp = confusion_matrix(y_true, y_pred, labels=[0, 1]).ravel()
    return Confusion(tp=int(tp), tn=int(tn), fp=int(fp), fn=int(fn))


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def metrics(c: Confusion) -> Metrics:
    """Precision TP/(TP+FP), recall TP/(TP+FN), F1 2PR/(P+R), accuracy (TP+TN)/total"""
    if c.total == 0:
        raise ReportError("empty confusion")
    undefined = set()
    if c.tp + c.fp == 0:
        undefined.add("precision")
    if c.tp + c.fn == 0:
        undefined.add("recall")
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    if precision + recall == 0:
        undefined.add("f1")
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    accuracy = (c.tp + c.tn) / c.total
    return Metrics(precision, recall, f1, accuracy, frozenset(undefined))
