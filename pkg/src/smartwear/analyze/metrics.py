"""Confusion matrix and per-class / macro accuracy."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..sensorsim import CLASS_NAMES


@dataclass
class Metrics:
    matrix: np.ndarray
    per_class_accuracy: np.ndarray
    mean_accuracy: float

    @property
    def total(self):
        return int(self.matrix.sum())


def confusion_and_metrics(preds, labels, num_classes: int = 6) -> Metrics:
    """Rows are true classes, columns predictions; class ids start at 1.

    Mean accuracy is the unweighted mean over the classes present in ``labels``.
    """
    preds = np.asarray(preds).astype(np.int64).ravel()
    labels = np.asarray(labels).astype(np.int64).ravel()
    if preds.shape != labels.shape:
        raise ValueError(f"{len(preds)} predictions for {len(labels)} labels")
    if preds.size == 0:
        raise ValueError("no predictions")
    for arr in (preds, labels):
        if arr.min() < 1 or arr.max() > num_classes:
            raise ValueError(f"class ids must lie in 1..{num_classes}")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (labels - 1, preds - 1), 1)
    support = cm.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_class = np.where(support > 0, np.diag(cm) / support, np.nan)
    return Metrics(cm, per_class, float(np.nanmean(per_class)))


def write_confusion_csv(m: Metrics, path):
    names = [CLASS_NAMES.get(i + 1, str(i + 1)) for i in range(len(m.matrix))]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["true\\pred"] + names)
        for name, row in zip(names, m.matrix):
            w.writerow([name] + [int(v) for v in row])


def write_metrics_csv(m: Metrics, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class_id", "class", "support", "accuracy"])
        for i, acc in enumerate(m.per_class_accuracy):
            w.writerow([i + 1, CLASS_NAMES.get(i + 1, str(i + 1)), int(m.matrix[i].sum()),
                        "" if np.isnan(acc) else repr(float(acc))])
        w.writerow(["mean", "macro", m.total, repr(m.mean_accuracy)])
