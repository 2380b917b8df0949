"""Confusion-matrix metrics with malicious as the positive class."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

NO_POSITIVES = "no_positives"
UNDEFINED_PRECISION_POS = "undefined_precision_attack"
UNDEFINED_PRECISION_NEG = "undefined_precision_benign"
NO_NEGATIVES = "no_negatives"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def n_pos(self) -> int:
        return self.tp + self.fn

    @property
    def n_neg(self) -> int:
        return self.tn + self.fp


def confusion_matrix(y_true, y_pred) -> ConfusionMatrix:
    t = np.asarray(y_true).astype(bool)
    p = np.asarray(y_pred).astype(bool)
    if t.shape != p.shape:
        raise ValueError("y_true and y_pred differ in shape")
    return ConfusionMatrix(int((t & p).sum()), int((~t & p).sum()),
                           int((~t & ~p).sum()), int((t & ~p).sum()))


def _frac(num: int, den: int) -> Fraction:
    return Fraction(num, den) if den else Fraction(0)


def _ratio(num: int, den: int) -> float:
    return float(_frac(num, den))


def recall(cm: ConfusionMatrix) -> float:
    """Attack recall tp / (tp + fn); 0 when there are no positives."""
    return _ratio(cm.tp, cm.tp + cm.fn)


def benign_recall(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tn, cm.tn + cm.fp)


def attack_precision(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fp)


def benign_precision(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tn, cm.tn + cm.fn)


def weighted_precision(cm: ConfusionMatrix) -> float:
    """Class precisions averaged with true-class-count weights.

    An undefined class precision (nothing predicted as that class) counts
    as 0.
    """
    n = cm.n_pos + cm.n_neg
    if n == 0:
        return 0.0
    # exact rational arithmetic, rounded once, so any exact recomputation agrees bit for bit
    num = cm.n_pos * _frac(cm.tp, cm.tp + cm.fp) + cm.n_neg * _frac(cm.tn, cm.tn + cm.fn)
    return float(num / n)


def metric_flags(cm: ConfusionMatrix) -> list[str]:
    flags = []
    if cm.n_pos == 0:
        flags.append(NO_POSITIVES)
    if cm.n_neg == 0:
        flags.append(NO_NEGATIVES)
    # only flag an undefined precision when that class actually carries weight
    if cm.tp + cm.fp == 0 and cm.n_pos > 0:
        flags.append(UNDEFINED_PRECISION_POS)
    if cm.tn + cm.fn == 0 and cm.n_neg > 0:
        flags.append(UNDEFINED_PRECISION_NEG)
    return flags


def summarize(cm: ConfusionMatrix) -> dict:
    return {
        "tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn,
        "recall": recall(cm),
        "weighted_precision": weighted_precision(cm),
        "precision_attack": attack_precision(cm),
        "precision_benign": benign_precision(cm),
        "recall_benign": benign_recall(cm),
        "flags": metric_flags(cm),
    }
