"""Input validation helpers shared by the filters and the experiment code."""

from __future__ import annotations

import numbers

import numpy as np


class InsertionError(RuntimeError):
    """Raised when a cuckoo insertion gives up after ``max_kicks`` displacements.

    ``unplaced`` is the element left without a cell (the last evictee), which
    is not necessarily the element whose insertion was requested.
    """

    def __init__(self, message, unplaced=None):
        super().__init__(message)
        self.unplaced = unplaced


class UsageError(ValueError):
    """A precondition of an operation was violated by the caller."""


def check_keys(X) -> np.ndarray:
    """Return ``X`` as a 1-D ``uint64`` array of canonical elements.

    Integer arrays are taken as-is (negative values are rejected).  Sequences
    of bytes or text go through :func:`adaptive_cuckoo.hashing.as_element`.
    """
    if isinstance(X, np.ndarray):
        if X.dtype == np.uint64:
            return np.ascontiguousarray(X.reshape(-1))
        if np.issubdtype(X.dtype, np.integer):
            if X.size and X.min() < 0:
                raise ValueError("integer keys must be non-negative")
            return np.ascontiguousarray(X.reshape(-1).astype(np.uint64))
        if X.ndim != 1:
            raise ValueError(f"expected a 1-D array of keys, got shape {X.shape}")
        X = X.tolist()
    elif isinstance(X, (str, bytes, numbers.Integral)):
        raise TypeError("expected a sequence of keys, got a single key")
    from .hashing import as_element

    return np.fromiter((as_element(k) for k in X), dtype=np.uint64)


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_seed(random_state) -> int:
    """Turn ``random_state`` into a 64-bit master seed.

    ``None`` draws fresh entropy, an int is used directly and a
    ``numpy.random.Generator`` contributes one 64-bit draw.
    """
    if random_state is None:
        return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(0, 2**64, dtype=np.uint64))
    if isinstance(random_state, numbers.Integral) and not isinstance(random_state, bool):
        if not 0 <= int(random_state) < 2**64:
            raise ValueError("random_state must fit in 64 unsigned bits")
        return int(random_state)
    raise TypeError(f"cannot use {random_state!r} as a random_state")


def check_fraction(value, name: str, *, open_low=False, open_high=False) -> float:
    value = float(value)
    lo_ok = value > 0 if open_low else value >= 0
    hi_ok = value < 1 if open_high else value <= 1
    if not (lo_ok and hi_ok):
        raise ValueError(f"{name} must lie in the unit interval, got {value}")
    return value
