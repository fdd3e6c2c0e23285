"""Per-axis error metrics between predicted and reference position series."""

from __future__ import annotations

import numpy as np

__all__ = ["rmse", "max_abs_error"]


def _pair(pred, ref):
    pred = np.atleast_2d(np.asarray(pred, dtype=float))
    ref = np.atleast_2d(np.asarray(ref, dtype=float))
    if pred.shape != ref.shape or pred.shape[0] < 1:
        raise ValueError(f"series shapes differ: {pred.shape} vs {ref.shape}")
    return pred, ref


def rmse(pred, ref) -> np.ndarray:
    """Per-axis root-mean-square error of an (N, 3) series pair."""
    pred, ref = _pair(pred, ref)
    return np.sqrt(np.mean((pred - ref) ** 2, axis=0))


def max_abs_error(pred, ref) -> np.ndarray:
    """Per-axis worst-case absolute error of an (N, 3) series pair."""
    pred, ref = _pair(pred, ref)
    return np.max(np.abs(pred - ref), axis=0)
