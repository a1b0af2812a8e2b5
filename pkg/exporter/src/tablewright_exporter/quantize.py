"""Feature quantization: real-valued columns onto unsigned integer domains.

The compiler keys tables on integer header-field values, so every feature is
min-max scaled and floor-quantized to its declared bit width before training.
Models are trained on the quantized integers, which keeps their parameters
(thresholds, centroids, Gaussians) in the same domain the tables match on.
"""

from __future__ import annotations

import numpy as np


def quantize_features(X: np.ndarray, bits: list[int]):
    """Floor-quantize each column to [0, 2^bits - 1].

    Returns (quantized int array, scaling records). Constant columns map to 0
    with a degenerate scaling record.
    """
    X = np.asarray(X, dtype=float)
    out = np.zeros_like(X, dtype=np.int64)
    scaling = []
    for j in range(X.shape[1]):
        lo = float(np.min(X[:, j]))
        hi = float(np.max(X[:, j]))
        top = (1 << bits[j]) - 1
        if hi > lo:
            q = np.floor((X[:, j] - lo) / (hi - lo) * top)
        else:
            q = np.zeros(X.shape[0])
        out[:, j] = np.clip(q, 0, top).astype(np.int64)
        scaling.append({"min": lo, "max": hi})
    return out, scaling


def apply_scaling(X: np.ndarray, scaling: list[dict], bits: list[int]) -> np.ndarray:
    """Quantize new rows with previously recorded scaling parameters."""
    X = np.asarray(X, dtype=float)
    out = np.zeros_like(X, dtype=np.int64)
    for j, rec in enumerate(scaling):
        top = (1 << bits[j]) - 1
        span = rec["max"] - rec["min"]
        if span > 0:
            q = np.floor((X[:, j] - rec["min"]) / span * top)
        else:
            q = np.zeros(X.shape[0])
        out[:, j] = np.clip(q, 0, top).astype(np.int64)
    return out
