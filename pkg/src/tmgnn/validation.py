"""Small input-validation helpers used across the package."""

import numpy as np

from .errors import ConfigurationError, ContractError, DataError, ShapeError


def check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN or Inf values")


def check_square(name, a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")
    return a


def check_symmetric(name, a):
    if not np.array_equal(a, a.T):
        raise DataError(f"{name} must be exactly symmetric")


def check_nonnegative(name, a):
    if np.any(np.asarray(a) < 0):
        raise DataError(f"{name} must be non-negative")


def check_partition(assignments, n, k):
    assignments = np.asarray(assignments, dtype=np.int64)
    if assignments.shape != (n,):
        raise ContractError(
            f"partition length {assignments.shape} does not match node count {n}"
        )
    if assignments.size and (assignments.min() < 0 or assignments.max() >= k):
        raise ContractError(
            f"cluster indices must lie in [0, {k}); got range "
            f"[{assignments.min()}, {assignments.max()}]"
        )
    return assignments


def check_fraction(name, value):
    if not (0.0 < value < 1.0):
        raise ConfigurationError(
            f"{name} must lie strictly between 0 and 1, got {value}"
        )
