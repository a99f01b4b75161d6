"""Segmentation quality metrics on binary masks."""

import numpy as np


def _pair(predicted, truth):
    predicted = np.asarray(predicted, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if predicted.shape != truth.shape:
        raise ValueError(f"mask dimensions differ: {predicted.shape} vs {truth.shape}")
    return predicted, truth


def seg_error(predicted, truth):
    """Area of the symmetric difference (squared-difference integral), px^2."""
    predicted, truth = _pair(predicted, truth)
    return int(np.logical_xor(predicted, truth).sum())


def dice(predicted, truth):
    """Dice coefficient 2|A^B| / (|A|+|B|); 1.0 for two empty masks."""
    predicted, truth = _pair(predicted, truth)
    total = int(predicted.sum()) + int(truth.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(predicted, truth).sum()) / total
