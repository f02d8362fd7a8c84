"""Pixel-level segmentation scoring on the fire class.

One global confusion matrix is pooled over all pixels of all patches
(micro-aggregation) and every score derives from it, so accumulation
order never matters and per-patch counts merge by plain addition.
"""

from __future__ import annotations

import dataclasses

import numpy as np


@dataclasses.dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn

    def merge(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)


@dataclasses.dataclass
class Scores:
    precision: float
    recall: float
    iou: float
    f1: float
    degenerate: bool = False

    def astuple(self):
        return (self.precision, self.recall, self.iou, self.f1)


def accumulate(counts: ConfusionCounts, pred, truth) -> ConfusionCounts:
    """Add one pred/truth mask pair into the counters (positive = fire)."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs truth {truth.shape}")
    for name, arr in (("pred", pred), ("truth", truth)):
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError(f"{name} mask must be strictly binary")
    p = pred == 1
    t = truth == 1
    counts.tp += int(np.count_nonzero(p & t))
    counts.fp += int(np.count_nonzero(p & ~t))
    counts.fn += int(np.count_nonzero(~p & t))
    counts.tn += int(np.count_nonzero(~p & ~t))
    return counts


def _ratio(num, den):
    return (num / den, False) if den else (0.0, True)


def scores(c: ConfusionCounts) -> Scores:
    """Precision, recall, IoU, F1. Any 0/0 yields 0 and sets the degenerate flag."""
    precision, d1 = _ratio(c.tp, c.tp + c.fp)
    recall, d2 = _ratio(c.tp, c.tp + c.fn)
    iou, d3 = _ratio(c.tp, c.tp + c.fp + c.fn)
    f1, d4 = _ratio(2.0 * precision * recall, precision + recall)
    return Scores(precision, recall, iou, f1, degenerate=d1 or d2 or d3 or d4)


def format_report(s: Scores) -> str:
    """Tab-separated P, R, IoU, F1 as percentages with one decimal."""
    return "\t".join(f"{100.0 * v:.1f}" for v in s.astuple())
