"""Cost models, importance-sampling estimators, and coreset-quality evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from joblib import Parallel, delayed

from .dpp import MarginalKernelView, WeightedSample, dpp_marginals
from .exceptions import DegenerateDataError, ParameterError
from .kmeans import kmeans_point_costs, pairwise_sq_dists
from .validation import check_indices, check_points, check_rng, substream

IMPORTANCE = "importance"
VORONOI = "voronoi"
ESTIMATOR_KINDS = (IMPORTANCE, VORONOI)


@dataclass(frozen=True)
class CostModel:
    """A decomposable cost: per-point values f(x, theta) >= 0 summed over the data."""

    per_point: Callable  # (X, theta) -> length-N array

    def evaluate(self, x, theta) -> float:
        return float(self.per_point(np.atleast_2d(np.asarray(x, dtype=float)), theta)[0])

    def total(self, X, theta, weights=None) -> float:
        f = self.per_point(X, theta)
        if weights is None:
            return float(f.sum())
        return float(np.asarray(weights, dtype=float) @ f)


KMEANS_COST = CostModel(per_point=kmeans_point_costs)


def kmeans_cost(X, centroids, weights=None) -> float:
    """Weighted k-means cost sum_i w_i min_c ||x_i - c||^2 (unit weights if None)."""
    return KMEANS_COST.total(check_points(X), centroids, weights)


def estimate_iid(X, theta, cost: CostModel, counts, probs, m: int) -> float:
    """Importance-sampling estimate from m iid draws with replacement.

    ``counts`` holds how many times each point was drawn; the estimate is
    sum_i f(x_i) counts_i / (m p_i), unbiased for the total cost.
    """
    X = check_points(X)
    counts = np.asarray(counts, dtype=float).ravel()
    probs = np.asarray(probs, dtype=float).ravel()
    if counts.shape != (X.shape[0],) or probs.shape != (X.shape[0],):
        raise ParameterError("counts and probs must have one entry per point")
    m = int(m)
    if counts.sum() != m:
        raise ParameterError(f"counts must sum to m={m}, got {counts.sum()}")
    drawn = counts > 0
    if np.any(probs[drawn] <= 0):
        raise ParameterError("a point with zero probability was drawn")
    if not drawn.any():
        return 0.0
    f = cost.per_point(X[drawn], theta)
    return float(np.sum(f * counts[drawn] / (m * probs[drawn])))


def estimate_correlated(X, theta, cost: CostModel, sample: WeightedSample) -> float:
    """Importance-sampling estimate for a point-process sample: sum f(x_s) / pi_s."""
    X = check_points(X)
    if sample.size == 0:
        return 0.0
    idx = check_indices(sample.indices, X.shape[0], "sample indices")
    if np.any(sample.inclusion_probs <= 0):
        raise ParameterError("inclusion probabilities must be positive")
    f = cost.per_point(X[idx], theta)
    return float(np.sum(f / sample.inclusion_probs))


def voronoi_weights(X, indices) -> np.ndarray:
    """Number of data points in each sample's Voronoi cell (ties to the
    lowest sample index); aligned with the order of ``indices``."""
    X = check_points(X)
    idx = check_indices(indices, X.shape[0], "indices", allow_empty=False)
    order = np.argsort(idx, kind="stable")
    d2 = pairwise_sq_dists(X, X[idx[order]])
    nearest = np.argmin(d2, axis=1)
    counts_sorted = np.bincount(nearest, minlength=idx.size)
    counts = np.empty(idx.size, dtype=np.intp)
    counts[order] = counts_sorted
    return counts


def weighted_cost_estimate(X, theta, sample: WeightedSample, kind: str = IMPORTANCE,
                           cost: CostModel = KMEANS_COST) -> float:
    """Estimated total cost for a weighted sample under the chosen weighting.

    ``importance`` uses the weights carried by the sample; ``voronoi``
    replaces them with Voronoi cell counts.
    """
    if kind not in ESTIMATOR_KINDS:
        raise ParameterError(f"unknown estimator kind {kind!r}")
    if sample.size == 0:
        return 0.0
    X = check_points(X)
    f = cost.per_point(X[sample.indices], theta)
    if kind == VORONOI:
        w = voronoi_weights(X, sample.indices).astype(float)
    else:
        w = sample.weights
    return float(w @ f)


def draw_centroid_sets(X, n_centroids: int, n_draws: int, rng) -> np.ndarray:
    """Random k-means parameters: each centroid uniform in the bounding box of X.

    Returns an array of shape (n_draws, n_centroids, d).
    """
    X = check_points(X)
    rng = check_rng(rng)
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    shape = (int(n_draws), int(n_centroids), X.shape[1])
    return lo + (hi - lo) * rng.random(shape)


def _success_count(X, sample, thetas, epsilon, kind, cost) -> int:
    hits = 0
    for theta in thetas:
        total = cost.total(X, theta)
        if total <= 0.0:
            raise DegenerateDataError("total cost is zero for a drawn parameter")
        est = weighted_cost_estimate(X, theta, sample, kind=kind, cost=cost)
        if abs(est / total - 1.0) <= epsilon:
            hits += 1
    return hits


def coreset_success_probability(X, sampler, epsilon: float, *, n_centroids: int = 1,
                                theta_draws: int = 50, trials: int = 100,
                                estimator: str = IMPORTANCE, cost: CostModel = KMEANS_COST,
                                random_state=None, n_jobs: int = 1) -> float:
    """Fraction of (trial, parameter) pairs where the weighted estimate is
    within a relative ``epsilon`` of the exact cost.

    Each trial draws a fresh sample via ``sampler(rng)`` and fresh random
    parameters (centroids uniform in the data's bounding box). Trial t uses
    the RNG stream (seed, t), so results do not depend on ``n_jobs``.
    """
    X = check_points(X)
    if int(theta_draws) < 1 or int(trials) < 1:
        raise ParameterError("theta_draws and trials must be >= 1")
    if estimator not in ESTIMATOR_KINDS:
        raise ParameterError(f"unknown estimator kind {estimator!r}")
    if isinstance(random_state, (int, np.integer)):
        seed = int(random_state)
    else:
        seed = int(check_rng(random_state).integers(2**63))

    def one_trial(t: int) -> int:
        rng = substream(seed, t)
        sample = sampler(rng)
        thetas = draw_centroid_sets(X, n_centroids, theta_draws, rng)
        return _success_count(X, sample, thetas, epsilon, estimator, cost)

    if n_jobs == 1:
        hits = [one_trial(t) for t in range(int(trials))]
    else:
        hits = Parallel(n_jobs=n_jobs)(delayed(one_trial)(t) for t in range(int(trials)))
    return float(sum(hits)) / (int(trials) * int(theta_draws))


def variance_decomposition(view: MarginalKernelView, f_values):
    """Exact variance of the inverse-probability estimator under the DPP.

    Returns ``(var_dpp, var_iid, correction)`` where ``var_iid`` is the
    variance of the same estimator under independent inclusion with equal
    marginals, and ``correction`` is the (nonnegative) reduction bought by
    the negative correlations:

        var_dpp = var_iid - sum_{i != j} K_ij^2 f_i f_j / (pi_i pi_j).
    """
    f = np.asarray(f_values, dtype=float).ravel()
    if f.size != view.n_points:
        raise ParameterError("f_values must have one entry per point")
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise ParameterError("f_values must be finite and nonnegative")
    pi = dpp_marginals(view)
    active = f > 0
    if np.any(pi[active] <= 0):
        raise ParameterError("a point with zero inclusion probability has nonzero cost")
    g = np.zeros_like(f)
    g[active] = f[active] / pi[active]
    var_iid = float(np.sum(f[active] ** 2 * (1.0 - pi[active]) / pi[active]))
    # sum_{ij} g_i g_j K_ij^2 = trace(P^2) with P = V^T diag(g) V, K = V V^T
    nu = view.values
    w = np.where(nu > 0, nu / (1.0 + nu), 0.0)
    if view._U is not None:
        V = view._U * np.sqrt(w)
    else:
        kept = view.kept
        T = view._features.psi.T @ view._dual.vectors[:, kept]
        V = T / np.sqrt(1.0 + nu[kept])
    P = V.T @ (g[:, None] * V)
    correction = max(float(np.sum(P * P) - np.sum(f[active] ** 2)), 0.0)
    return var_iid - correction, var_iid, correction
