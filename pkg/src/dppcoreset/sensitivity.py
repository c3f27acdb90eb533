"""Sensitivities: the worst-case share each point can take of the total cost.

For 1-means there is a closed form; for general k only upper bounds are
tractable, obtained from a rough randomized clustering. Sampling
probabilities proportional to (bounds on) sensitivity are what make
importance-sampled coresets work.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateDataError, ParameterError
from .validation import check_points, check_rng

EXACT_1MEANS = "exact_1means"
UPPER_BOUND = "upper_bound"


@dataclass(frozen=True)
class SensitivityProfile:
    """Per-point sensitivities in (0, 1] with their total."""

    sigma: np.ndarray
    total: float
    kind: str


@dataclass(frozen=True)
class OutlierSplit:
    """Partition of indices into outliers (sensitivity above threshold) and the rest."""

    outlier_indices: np.ndarray
    kept_indices: np.ndarray
    threshold: float


def one_means_sensitivity(X) -> SensitivityProfile:
    """Exact 1-means sensitivities: sigma_i = (1 + ||x_i - mean||^2 / v) / N.

    Here v is the mean squared distance to the centroid; the data is centered
    internally so the formula applies to any input. The sensitivities always
    sum to 2 and each lies in [1/N, 1].
    """
    X = check_points(X, min_points=2)
    n = X.shape[0]
    centered = X - X.mean(axis=0)
    sq_norms = np.sum(centered**2, axis=1)
    v = float(sq_norms.mean())
    if v <= 0.0:
        raise DegenerateDataError("all points identical: 1-means sensitivity undefined")
    sigma = (1.0 + sq_norms / v) / n
    return SensitivityProfile(sigma=sigma, total=float(sigma.sum()), kind=EXACT_1MEANS)


def bicriteria_sensitivity_bound(X, k: int, rng=None) -> SensitivityProfile:
    """Upper-bound k-means sensitivities from a squared-distance-seeded rough clustering.

    Seeds k centers by D^2 sampling, then scores each point by its squared
    distance to the centers (relative to the average), its cell's average
    cost, and an inverse cell-size term. The raw score divided by N upper
    bounds the true sensitivity with high probability; values are clipped at
    1 since no sensitivity can exceed 1.
    """
    from .kmeans import d2_seeding  # local import to avoid a module cycle

    X = check_points(X, min_points=2)
    n = X.shape[0]
    k = int(k)
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if n <= k:
        raise ParameterError(f"need more points than centers, got N={n}, k={k}")
    rng = check_rng(rng)
    centers = X[d2_seeding(X, k, rng)]
    d2 = np.sum((X[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    cell = np.argmin(d2, axis=1)
    dist2 = d2[np.arange(n), cell]
    mean_cost = float(dist2.mean())
    if mean_cost <= 0.0:
        raise DegenerateDataError("rough clustering has zero cost: data is degenerate")
    cell_sizes = np.bincount(cell, minlength=k)
    cell_costs = np.bincount(cell, weights=dist2, minlength=k)
    alpha = 16.0 * (np.log2(k) + 2.0)
    raw = (
        alpha * dist2 / mean_cost
        + 2.0 * alpha * cell_costs[cell] / (cell_sizes[cell] * mean_cost)
        + 4.0 * n / cell_sizes[cell]
    )
    sigma = np.minimum(raw / n, 1.0)
    return SensitivityProfile(sigma=sigma, total=float(sigma.sum()), kind=UPPER_BOUND)


def split_outliers(profile: SensitivityProfile, threshold: float) -> OutlierSplit:
    """Split indices at a sensitivity threshold in [1/N, 1].

    Points above the threshold are meant to be force-included downstream
    with weight 1 and inclusion probability 1; the sampling theorems then
    apply to the kept part only.
    """
    sigma = profile.sigma
    n = sigma.size
    threshold = float(threshold)
    if not (1.0 / n <= threshold <= 1.0):
        raise ParameterError(f"threshold must lie in [1/N, 1] = [{1.0 / n}, 1], got {threshold}")
    outliers = np.flatnonzero(sigma > threshold)
    kept = np.flatnonzero(sigma <= threshold)
    return OutlierSplit(outlier_indices=outliers, kept_indices=kept, threshold=threshold)
