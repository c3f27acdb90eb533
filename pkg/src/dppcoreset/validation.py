"""Input validation helpers used by every public entry point."""

from __future__ import annotations

import numpy as np

from .exceptions import ParameterError


def check_rng(random_state=None) -> np.random.Generator:
    """Coerce ``random_state`` into a numpy Generator.

    ``None`` gives a fresh nondeterministic generator; an int (or a sequence
    of ints) seeds a new PCG64 generator; an existing Generator passes
    through unchanged.
    """
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Deterministic RNG stream addressed by (seed, *key).

    Streams for distinct keys are statistically independent, so work can be
    fanned out across workers without the results depending on scheduling.
    """
    return np.random.default_rng([int(seed), *map(int, key)])


def check_points(X, min_points: int = 1, name: str = "X") -> np.ndarray:
    """Validate a point set: 2-D float array, finite, at least ``min_points`` rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ParameterError(f"{name} must be a 2-D array, got ndim={X.ndim}")
    if X.shape[0] < min_points:
        raise ParameterError(f"{name} needs at least {min_points} points, got {X.shape[0]}")
    if X.shape[1] < 1:
        raise ParameterError(f"{name} needs at least one coordinate")
    if not np.all(np.isfinite(X)):
        raise ParameterError(f"{name} contains non-finite coordinates")
    return X


def check_vector(v, n: int | None = None, name: str = "v") -> np.ndarray:
    """Validate a 1-D finite float vector, optionally of fixed length."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ParameterError(f"{name} must be 1-D, got ndim={v.ndim}")
    if n is not None and v.shape[0] != n:
        raise ParameterError(f"{name} must have length {n}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ParameterError(f"{name} contains non-finite values")
    return v


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ParameterError(f"{name} must be a positive finite real, got {value}")
    return value


def check_in_open_unit(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ParameterError(f"{name} must lie in (0, 1), got {value}")
    return value


def check_indices(indices, n: int, name: str = "indices", allow_empty: bool = True) -> np.ndarray:
    """Validate a sequence of distinct point indices into range(n)."""
    idx = np.asarray(indices, dtype=np.intp).ravel()
    if idx.size == 0:
        if allow_empty:
            return idx
        raise ParameterError(f"{name} must be non-empty")
    if idx.min() < 0 or idx.max() >= n:
        raise ParameterError(f"{name} out of range [0, {n})")
    if np.unique(idx).size != idx.size:
        raise ParameterError(f"{name} contains duplicates")
    return idx


def inverse_cdf_draw(weights: np.ndarray, rng: np.random.Generator) -> int:
    """Draw an index proportional to ``weights`` via inverse CDF.

    Uses one uniform from the 64-bit generator against the cumulative sums;
    ties resolve to the lowest index. Negative entries must be clamped by
    the caller; the total mass must be positive.
    """
    c = np.cumsum(weights)
    u = rng.random() * c[-1]
    return min(int(np.searchsorted(c, u, side="right")), len(c) - 1)
