"""Input checks shared by the estimator classes."""

import numpy as np
from sklearn.utils.validation import check_array

from nmcopula.exceptions import DataError


def check_bivariate(X, *, unit=False, open_unit=False):
    """Validate a two-column float array.

    Parameters
    ----------
    X : array-like of shape (n_samples, 2)
    unit : bool
        Require values in [0, 1].
    open_unit : bool
        Require values strictly inside (0, 1).
    """
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    if X.shape[1] != 2:
        raise DataError(f"expected 2 columns, got {X.shape[1]}")
    if open_unit and np.any((X <= 0) | (X >= 1)):
        raise DataError("values must lie strictly inside (0, 1)")
    if unit and np.any((X < 0) | (X > 1)):
        raise DataError("values must lie in [0, 1]")
    return X


def check_n_samples(n):
    n = int(n)
    if n < 1:
        raise ValueError("n_samples must be at least 1")
    return n


def seed_from_random_state(random_state):
    """Turn a sklearn-style ``random_state`` into a seed for numpy's Generator."""
    if random_state is None or isinstance(random_state, (int, np.integer)):
        return random_state
    if isinstance(random_state, np.random.RandomState):
        return int(random_state.randint(0, 2**31 - 1))
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(0, 2**31 - 1))
    raise ValueError(f"cannot use {random_state!r} as a random state")
