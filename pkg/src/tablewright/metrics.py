"""Inference-quality metrics for comparing pipelines against their models."""

from __future__ import annotations

import math
from typing import Sequence


def accuracy(truth: Sequence[int], pred: Sequence[int]) -> float:
    if not truth:
        return 0.0
    return sum(1 for t, p in zip(truth, pred) if t == p) / len(truth)


def relative_accuracy(oracle: Sequence[int], pipeline: Sequence[int]) -> float:
    """Agreement ratio between pipeline predictions and the model's own."""
    return accuracy(oracle, pipeline)


def confusion_matrix(truth: Sequence[int], pred: Sequence[int],
                     n_classes: int) -> list[list[int]]:
    m = [[0] * n_classes for _ in range(n_classes)]
    for t, p in zip(truth, pred):
        m[t][p] += 1
    return m


def macro_f1(truth: Sequence[int], pred: Sequence[int], n_classes: int) -> float:
    """Unweighted mean of per-class F1 = 2TP / (2TP + FP + FN)."""
    cm = confusion_matrix(truth, pred, n_classes)
    scores = []
    for c in range(n_classes):
        tp = cm[c][c]
        fn = sum(cm[c]) - tp
        fp = sum(cm[r][c] for r in range(n_classes)) - tp
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return sum(scores) / n_classes


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation coefficient; 0.0 when either side is constant."""
    n = len(xs)
    if n < 2:
        return 0.0
    mx = sum(xs) / n
    my = sum(ys) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = sum((x - mx) ** 2 for x in xs)
    vy = sum((y - my) ** 2 for y in ys)
    if vx == 0 or vy == 0:
        return 0.0
    return cov / math.sqrt(vx * vy)
