"""Classification metrics from a confusion matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import nn
from ..errors import DataError


@dataclass(frozen=True)
class Metrics:
    """Error rate and F1 scores in percent; ``confusion[true, predicted]``."""

    error: float
    macro_f1: float
    f1: np.ndarray
    confusion: np.ndarray

    @classmethod
    def from_confusion(cls, confusion) -> "Metrics":
        cm = np.asarray(confusion, dtype=np.int64)
        total = cm.sum()
        if total == 0:
            raise DataError("empty confusion matrix")
        tp = np.diag(cm).astype(np.float64)
        fp = cm.sum(axis=0) - tp
        fn = cm.sum(axis=1) - tp
        denom = 2 * tp + fp + fn
        f1 = np.divide(200.0 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
        error = 100.0 * (1.0 - tp.sum() / total)
        return cls(error=float(error), macro_f1=float(f1.mean()), f1=f1, confusion=cm)


def confusion_matrix(labels, predictions, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(labels), np.asarray(predictions)), 1)
    return cm


def predict(params, features, batch_size: int = 4096) -> np.ndarray:
    out = np.empty(len(features), dtype=np.int64)
    for start in range(0, len(features), batch_size):
        chunk = features[start:start + batch_size]
        out[start:start + len(chunk)] = nn.forward(params, chunk).argmax(axis=1)
    return out


def evaluate(params, dataset) -> Metrics:
    """Deterministic forward pass, argmax, then confusion-derived metrics."""
    if len(dataset) == 0:
        raise DataError("cannot evaluate on an empty dataset")
    pred = predict(params, dataset.features)
    return Metrics.from_confusion(confusion_matrix(dataset.labels, pred, dataset.n_classes))
