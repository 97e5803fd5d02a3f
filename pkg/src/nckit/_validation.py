"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def as_float_matrix(a, name: str, *, allow_empty: bool = False) -> np.ndarray:
    """Coerce to a 2-D float64 array and reject non-finite entries."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {out.shape}")
    if not allow_empty and out.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains a non-finite value")
    return out


def as_float_vector(a, name: str) -> np.ndarray:
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains a non-finite value")
    return out


def check_labels(y, name: str = "y") -> np.ndarray:
    """Validate an integer label vector and return it as int64."""
    out = np.asarray(y)
    if out.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {out.shape}")
    if out.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.issubdtype(out.dtype, np.integer):
        cast = out.astype(np.int64)
        if np.any(cast != out):
            raise ValueError(f"{name} must contain integers")
        out = cast
    return out.astype(np.int64)


def check_consistent_length(X: np.ndarray, y: np.ndarray) -> None:
    if X.shape[0] != y.shape[0]:
        raise ValueError(
            f"X and y have inconsistent lengths: {X.shape[0]} != {y.shape[0]}"
        )
