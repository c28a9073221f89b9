"""Input validation helpers shared by the functional API and the estimators."""

import numpy as np
from sklearn.utils import check_array

from .exceptions import TooShort


def check_values(values, name="values", min_length=2):
    """Return ``values`` as a finite, contiguous 1-D float64 array."""
    arr = check_array(
        values, ensure_2d=False, dtype=np.float64, ensure_all_finite=True, input_name=name
    )
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if len(arr) < min_length:
        raise TooShort(f"{name} needs at least {min_length} entries, got {len(arr)}")
    return np.ascontiguousarray(arr)


def check_times_values(times, values):
    """Validate a value array and an optional strictly increasing abscissa."""
    p = check_values(values)
    if times is None:
        return None, p
    t = check_values(times, name="times")
    if t.shape != p.shape:
        raise ValueError("times and values must have the same length")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    return t, p


def check_degrees(degrees):
    """Return a 1-D int64 array of non-negative integer observations."""
    arr = np.asarray(degrees)
    if arr.ndim != 1:
        raise ValueError("degree sequence must be one-dimensional")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        as_int = arr.astype(np.int64)
        if not np.array_equal(as_int, arr):
            raise ValueError("degree sequence must hold integers")
        arr = as_int
    arr = arr.astype(np.int64, copy=False)
    if arr.size and arr.min() < 0:
        raise ValueError("degrees must be non-negative")
    return arr


def seed_children(seed, n: int) -> list[np.random.SeedSequence]:
    """The first ``n`` children of ``seed`` without mutating it.

    ``seed`` is an int, ``None`` or a ``SeedSequence``; repeated calls return
    the same children.
    """
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    key = tuple(root.spawn_key)
    return [
        np.random.SeedSequence(root.entropy, spawn_key=key + (i,), pool_size=root.pool_size)
        for i in range(int(n))
    ]
