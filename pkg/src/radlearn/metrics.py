"""Accuracy, macro-F1 and the Hot / Hot-Truth training-data ratios."""
from __future__ import annotations

import numpy as np


def accuracy_from_confusion(cm: np.ndarray) -> float:
    return float(np.trace(cm) / cm.sum())


def f1_macro(cm: np.ndarray) -> float:
    """Unweighted mean of per-class F1; a class with no true and no predicted rows scores 0."""
    cm = np.asarray(cm, dtype=np.float64)
    tp = np.diag(cm)
    denom = cm.sum(axis=0) + cm.sum(axis=1)
    f1 = np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
    return float(f1.mean())


def compute_hot_metrics(cleansed_sizes, rescued_sizes, clean_counts, batch_sizes,
                        corrected_sizes=None) -> tuple[float, float | None]:
    """Cumulative Hot ``A`` and Hot-Truth ``A^T`` over batches 1..i.

    ``A`` is admitted over received instances, ``A^T`` is truly clean over
    admitted. The clean kick-start batch must not be included. Oracle
    corrections, when given, count as admitted. ``A^T`` is None while nothing
    has been admitted.
    """
    admitted = np.sum(cleansed_sizes) + np.sum(rescued_sizes)
    if corrected_sizes is not None:
        admitted += np.sum(corrected_sizes)
    received = np.sum(batch_sizes)
    if received <= 0:
        raise ValueError("no batches observed")
    A = float(admitted / received)
    AT = float(np.sum(clean_counts) / admitted) if admitted > 0 else None
    return A, AT
