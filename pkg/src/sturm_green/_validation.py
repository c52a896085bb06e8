"""Argument checks shared by the estimators and the CLI."""

import math

import numpy as np

from .errors import PreconditionError, SamplingError
from .potential import Potential


def check_positive(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise PreconditionError(f"{name} must be a number, got {value!r}") from None
    if not (value > 0 and math.isfinite(value)):
        raise PreconditionError(f"{name} must be positive and finite, got {value}")
    return value


def check_potential(q):
    if not isinstance(q, Potential):
        raise PreconditionError(f"expected a Potential, got {type(q).__name__}")
    return q


def check_points(x, name="x"):
    """1-D float array of finite abscissae; ``(n, 1)`` columns are flattened."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1 or arr.size == 0:
        raise SamplingError(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SamplingError(f"{name} contains non-finite values")
    return arr


def check_samples(F, n_nodes):
    """2-D ``(n_samples, n_nodes)`` array of forcing values on a fixed grid."""
    arr = np.asarray(F, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != n_nodes:
        raise SamplingError(
            f"forcing samples must have shape (n_samples, {n_nodes}), got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise SamplingError("forcing samples contain non-finite values")
    return arr
