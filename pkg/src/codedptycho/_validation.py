"""Input validation helpers shared by the public functions and estimators."""
import numbers

import numpy as np


class DimensionError(ValueError):
    """Array shapes do not agree with what an operation requires."""


class ParameterError(ValueError):
    """A scalar parameter violates its documented precondition.

    ``field`` names the offending configuration key when known, so the CLI can
    report it.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ConvergenceError(RuntimeError):
    """An iterative numerical method failed to reach its tolerance."""

    def __init__(self, message, last_estimate=None):
        super().__init__(message)
        self.last_estimate = last_estimate


def check_image(x, shape=None, name="x"):
    """Return ``x`` as a 2-D complex128 array, optionally of a given shape."""
    arr = np.asarray(x)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise DimensionError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_square(x, name="x"):
    arr = check_image(x, name=name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def check_int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ParameterError(f"{name} must be an integer, got {value!r}", name)
    value = int(value)
    if minimum is not None and value < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {value}", name)
    return value


def check_nonneg(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ParameterError(f"{name} must be a real number, got {value!r}", name)
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ParameterError(f"{name} must be a finite nonnegative number, got {value}", name)
    return value
