"""k-fold validation, confusion-matrix metrics, and workload-savings arithmetic.

Metrics with a zero denominator are reported as None and listed in
MetricsReport.undefined; they never raise. Labels are 1 for true-positive
alerts (escalation-worthy) and 0 for false positives (noise to filter).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .features import FeatureVector, as_matrix
from .forest import Forest, ForestParams, predict_proba_batch, train_forest


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts keyed truth-then-prediction; tp_as_fp is a missed attack."""

    tp_as_tp: int = 0
    tp_as_fp: int = 0
    fp_as_fp: int = 0
    fp_as_tp: int = 0

    def __post_init__(self):
        for name in ("tp_as_tp", "tp_as_fp", "fp_as_fp", "fp_as_tp"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")

    @property
    def total(self) -> int:
        return self.tp_as_tp + self.tp_as_fp + self.fp_as_fp + self.fp_as_tp


@dataclass(frozen=True)
class MetricsReport:
    tp_precision: float | None
    tp_recall: float | None
    fp_precision: float | None
    fp_recall: float | None
    accuracy: float | None

    @property
    def undefined(self) -> tuple[str, ...]:
        """Names of metrics whose denominator was zero."""
        return tuple(
            name
            for name in ("tp_precision", "tp_recall", "fp_precision", "fp_recall", "accuracy")
            if getattr(self, name) is None
        )


def confusion(predictions: Sequence[int], truths: Sequence[int]) -> ConfusionMatrix:
    """Count (truth, prediction) pairs; labels are 1 = TP alert, 0 = FP."""
    if len(predictions) != len(truths):
        raise ValidationError(
            f"{len(predictions)} predictions vs {len(truths)} truths"
        )
    counts = {(1, 1): 0, (1, 0): 0, (0, 0): 0, (0, 1): 0}
    for pred, truth in zip(predictions, truths):
        key = (int(truth), int(pred))
        if key not in counts:
            raise ValidationError(f"labels must be 0/1, got truth={truth} pred={pred}")
        counts[key] += 1
    return ConfusionMatrix(
        tp_as_tp=counts[(1, 1)],
        tp_as_fp=counts[(1, 0)],
        fp_as_fp=counts[(0, 0)],
        fp_as_tp=counts[(0, 1)],
    )


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    return MetricsReport(
        tp_precision=_ratio(cm.tp_as_tp, cm.tp_as_tp + cm.fp_as_tp),
        tp_recall=_ratio(cm.tp_as_tp, cm.tp_as_tp + cm.tp_as_fp),
        fp_precision=_ratio(cm.fp_as_fp, cm.fp_as_fp + cm.tp_as_fp),
        fp_recall=_ratio(cm.fp_as_fp, cm.fp_as_fp + cm.fp_as_tp),
        accuracy=_ratio(cm.tp_as_tp + cm.fp_as_fp, cm.total),
    )


def kfold_split(n: int, k: int, seed: int) -> list[list[int]]:
    """Shuffle 0..n-1 and cut into k folds of size floor(n/k) or ceil(n/k).

    The first n mod k folds take the larger size. Deterministic per seed.
    """
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    if k > n:
        raise ValidationError(f"k={k} exceeds sample count n={n}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    order = rng.permutation(n)
    base = n // k
    extra = n % k
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append([int(j) for j in order[start : start + size]])
        start += size
    return folds


@dataclass(frozen=True)
class CrossValidation:
    reports: tuple[MetricsReport, ...]
    accuracies: tuple[float, ...]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def accuracy_variance(self) -> float:
        return float(np.var(self.accuracies))


def cross_validate(
    matrix: Sequence[FeatureVector] | np.ndarray,
    labels: Sequence[int],
    params: ForestParams | None = None,
    k: int = 10,
    seed: int = 42,
    threshold: float = 0.5,
) -> CrossValidation:
    """Train on each fold's complement, evaluate on the fold, in fold order."""
    X = as_matrix(matrix)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ValidationError(f"{X.shape[0]} rows vs {y.shape[0]} labels")
    params = params or ForestParams()
    folds = kfold_split(X.shape[0], k, seed)
    reports = []
    accuracies = []
    for i, fold in enumerate(folds):
        held = np.asarray(fold, dtype=np.int64)
        mask = np.ones(X.shape[0], dtype=bool)
        mask[held] = False
        train_y = y[mask]
        if len(np.unique(train_y)) < 2:
            raise ValidationError(f"fold {i}: training complement has a single class")
        forest = train_forest(X[mask], train_y, params)
        proba = predict_proba_batch(forest, X[held])
        preds = (proba >= threshold).astype(int)
        report = metrics(confusion(preds.tolist(), y[held].tolist()))
        reports.append(report)
        accuracies.append(report.accuracy if report.accuracy is not None else 0.0)
    return CrossValidation(reports=tuple(reports), accuracies=tuple(accuracies))


def evaluate_forest(
    forest: Forest,
    matrix: Sequence[FeatureVector] | np.ndarray,
    labels: Sequence[int],
    threshold: float = 0.5,
) -> tuple[ConfusionMatrix, MetricsReport]:
    """Holdout evaluation of a trained forest on a labeled matrix."""
    X = as_matrix(matrix)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ValidationError(f"{X.shape[0]} rows vs {y.shape[0]} labels")
    proba = predict_proba_batch(forest, X)
    preds = (proba >= threshold).astype(int)
    cm = confusion(preds.tolist(), y.tolist())
    return cm, metrics(cm)


def workload_savings(filtered_fp_count: int, minutes_per_alert: float = 4.0) -> float:
    """Analyst hours saved by suppressing that many alerts from review."""
    if filtered_fp_count < 0:
        raise ValidationError("filtered_fp_count must be >= 0")
    if minutes_per_alert <= 0:
        raise ValidationError("minutes_per_alert must be > 0")
    return filtered_fp_count * minutes_per_alert / 60.0
