"""Input validation helpers shared by the estimators and free functions."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array


def check_points(points, *, name="points", allow_empty=False, n_dims=3) -> np.ndarray:
    """Return ``points`` as a finite float array of shape (n, n_dims)."""
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        if allow_empty:
            return arr.reshape(0, n_dims)
        raise ValueError(f"{name} must be non-empty")
    arr = check_array(arr, ensure_2d=True, dtype=np.float64, input_name=name)
    if arr.shape[1] != n_dims:
        raise ValueError(f"{name} must have {n_dims} columns, got {arr.shape[1]}")
    return arr


def check_vector(v, *, name="vector", size=3) -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (size,):
        raise ValueError(f"{name} must have exactly {size} components")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_positive(value, name) -> float:
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value
