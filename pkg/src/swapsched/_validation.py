"""Small input-checking helpers shared by the estimators and functions."""

from __future__ import annotations

import numbers

import numpy as np


class DataValidationError(ValueError):
    """Input data violates a documented schema or invariant."""


def check_finite(value, name):
    value = float(value)
    if not np.isfinite(value):
        raise DataValidationError(f"{name} must be finite, got {value!r}")
    return value


def check_probability(value, name="prob"):
    value = check_finite(value, name)
    if not 0.0 <= value <= 1.0:
        raise DataValidationError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def check_nonnegative(value, name):
    value = check_finite(value, name)
    if value < 0:
        raise DataValidationError(f"{name} must be >= 0, got {value!r}")
    return value


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise DataValidationError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise DataValidationError(f"{name} must be >= {minimum}, got {value!r}")
    return int(value)


def check_series(values, name="series", min_length=1):
    """Return `values` as a finite 1-D float array of at least `min_length`."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DataValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise DataValidationError(
            f"{name} needs at least {min_length} points, got {arr.size}"
        )
    if not np.all(np.isfinite(arr)):
        raise DataValidationError(f"{name} contains non-finite values")
    return arr


def check_counts(values, name, length=None):
    """Return `values` as a non-negative int64 array, optionally of fixed length."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DataValidationError(f"{name} must be one-dimensional")
    if arr.size and not np.all(np.isfinite(arr.astype(float))):
        raise DataValidationError(f"{name} contains non-finite values")
    as_int = arr.astype(np.int64)
    if arr.size and not np.array_equal(as_int, arr.astype(float)):
        raise DataValidationError(f"{name} must hold integers")
    if np.any(as_int < 0):
        raise DataValidationError(f"{name} must be non-negative")
    if length is not None and as_int.size != length:
        raise DataValidationError(f"{name} must have length {length}, got {as_int.size}")
    return as_int
