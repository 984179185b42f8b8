"""Accuracy-weighted choice between the label-quality model and the classifier."""
from __future__ import annotations

import numpy as np


def ensemble_predict(probs_L: np.ndarray, probs_C: np.ndarray, alpha_L: float, alpha_C: float) -> np.ndarray:
    """Final class per row from two probability matrices.

    Where the two argmaxes agree that class is returned. Otherwise the
    classifier wins only if ``alpha_C * max(probs_C)`` is strictly larger than
    ``alpha_L * max(probs_L)``; equality goes to the label-quality model.
    """
    probs_L = np.asarray(probs_L, dtype=np.float64)
    probs_C = np.asarray(probs_C, dtype=np.float64)
    if probs_L.shape != probs_C.shape or probs_L.ndim != 2:
        raise ValueError(f"probability matrices differ in shape: {probs_L.shape} vs {probs_C.shape}")
    for a in (alpha_L, alpha_C):
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"accuracy weight {a} outside [0, 1]")
    pick_L = np.argmax(probs_L, axis=1)
    pick_C = np.argmax(probs_C, axis=1)
    use_C = alpha_C * probs_C.max(axis=1) > alpha_L * probs_L.max(axis=1)
    return np.where((pick_L == pick_C) | use_C, pick_C, pick_L)
