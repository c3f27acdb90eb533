"""Weighted Lloyd iterations, squared-distance seeding, and partition metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import DegenerateDataError, ParameterError
from .validation import check_points, check_rng, inverse_cdf_draw

_REL_EPS = 1e-12


@dataclass(frozen=True)
class ClusteringResult:
    centroids: np.ndarray
    labels: np.ndarray
    cost: float
    iterations: int


def pairwise_sq_dists(X, C) -> np.ndarray:
    """Squared Euclidean distances, one row per point of X, one column per row of C."""
    X = np.asarray(X, dtype=float)
    C = np.asarray(C, dtype=float)
    if X.shape[1] != C.shape[1]:
        raise ParameterError(f"dimension mismatch: points are {X.shape[1]}-d, centroids {C.shape[1]}-d")
    d2 = (
        np.sum(X * X, axis=1)[:, None]
        + np.sum(C * C, axis=1)[None, :]
        - 2.0 * (X @ C.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def assign_labels(X, centroids) -> np.ndarray:
    """Nearest-centroid index per point; ties go to the lowest centroid index."""
    X = check_points(X)
    centroids = check_points(np.asarray(centroids, dtype=float), name="centroids")
    return np.argmin(pairwise_sq_dists(X, centroids), axis=1)


def kmeans_point_costs(X, centroids) -> np.ndarray:
    """Per-point cost min_c ||x - c||^2."""
    X = check_points(X)
    centroids = check_points(np.asarray(centroids, dtype=float), name="centroids")
    return np.min(pairwise_sq_dists(X, centroids), axis=1)


def d2_seeding(X, m: int, rng=None, weights=None) -> np.ndarray:
    """Pick m distinct indices: first at random, then proportional to the
    squared distance to the closest already-picked point.

    With ``weights`` the draw probabilities are weight * squared distance
    (and the first draw is weight-proportional). If every remaining point
    sits at distance zero, the draw falls back to uniform over the
    unsampled indices.
    """
    X = check_points(X)
    n = X.shape[0]
    m = int(m)
    if not 1 <= m <= n:
        raise ParameterError(f"m must lie in [1, {n}], got {m}")
    rng = check_rng(rng)
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,) or np.any(w < 0) or not np.any(w > 0):
            raise ParameterError("weights must be nonnegative with positive total")
    chosen = np.empty(m, dtype=np.intp)
    chosen[0] = inverse_cdf_draw(w, rng)
    closest = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    taken = np.zeros(n, dtype=bool)
    taken[chosen[0]] = True
    for t in range(1, m):
        mass = w * closest
        mass[taken] = 0.0
        if mass.sum() <= 0.0:
            mass = np.where(taken, 0.0, 1.0)
        idx = inverse_cdf_draw(mass, rng)
        chosen[t] = idx
        taken[idx] = True
        np.minimum(closest, np.sum((X - X[idx]) ** 2, axis=1), out=closest)
    return chosen


def _count_distinct_rows(X, mask) -> int:
    return np.unique(X[mask], axis=0).shape[0] if mask.any() else 0


def weighted_lloyd(X, k: int, weights=None, init=None, rng=None,
                   max_iters: int = 100, tol: float = 1e-6) -> ClusteringResult:
    """Lloyd's alternation on a weighted point set.

    Assignment ignores weights; centroid updates are weighted means; the
    weighted cost is non-increasing across iterations. An empty cluster is
    repaired by moving its centroid onto the point contributing most to the
    current weighted cost. Stops when the relative cost improvement drops
    below ``tol`` or after ``max_iters`` assignment rounds.

    ``init`` may be a sequence of point indices, an explicit k x d centroid
    matrix, or None for squared-distance seeding with ``rng``.
    """
    X = check_points(X)
    n, d = X.shape
    k = int(k)
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != (n,):
            raise ParameterError("weights must have one entry per point")
        if np.any(w < 0) or not np.any(w > 0):
            raise ParameterError("weights must be nonnegative and not all zero")
    if _count_distinct_rows(X, w > 0) < k:
        raise DegenerateDataError(
            f"fewer than k={k} distinct points with positive weight"
        )
    if init is None:
        centroids = X[d2_seeding(X, k, check_rng(rng), weights=w)].copy()
    else:
        init = np.asarray(init)
        if init.ndim == 1:
            centroids = X[np.asarray(init, dtype=np.intp)].copy()
        else:
            centroids = np.asarray(init, dtype=float).copy()
        if centroids.shape != (k, d):
            raise ParameterError(f"init must give {k} centroids of dimension {d}")

    d2 = pairwise_sq_dists(X, centroids)
    labels = np.argmin(d2, axis=1)
    point_cost = d2[np.arange(n), labels]
    cost = float(w @ point_cost)
    iterations = 0
    for _ in range(max_iters):
        new_centroids = np.zeros_like(centroids)
        cluster_w = np.zeros(k)
        np.add.at(cluster_w, labels, w)
        for j in range(d):
            np.add.at(new_centroids[:, j], labels, w * X[:, j])
        occupied = cluster_w > 0
        new_centroids[occupied] /= cluster_w[occupied, None]
        if not occupied.all():
            contrib = w * point_cost
            claimed = np.zeros(n, dtype=bool)
            for c in np.flatnonzero(~occupied):
                avail = np.where(claimed, -np.inf, contrib)
                top = int(np.argmax(avail))
                new_centroids[c] = X[top]
                claimed[top] = True

        d2 = pairwise_sq_dists(X, new_centroids)
        new_labels = np.argmin(d2, axis=1)
        point_cost = d2[np.arange(n), new_labels]
        new_cost = float(w @ point_cost)
        iterations += 1
        assert new_cost <= cost * (1.0 + 1e-9) + 1e-12, "Lloyd cost increased"
        converged = (cost - new_cost) <= tol * max(cost, _REL_EPS)
        centroids, labels, cost = new_centroids, new_labels, new_cost
        if converged:
            break
    return ClusteringResult(centroids=centroids, labels=labels, cost=cost, iterations=iterations)


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected pair-counting agreement between two partitions.

    Computed from the pair confusion counts; 1 for identical partitions
    (up to relabeling), around 0 for independent ones, negative for
    disagreement beyond chance.
    """
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.size != b.size:
        raise ParameterError(f"label sequences differ in length: {a.size} vs {b.size}")
    if a.size < 2:
        raise ParameterError("need at least 2 points to compare partitions")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1.0)

    def comb2(x):
        return x * (x - 1.0) / 2.0

    n = float(a.size)
    tp = float(np.sum(comb2(table)))
    pairs_a = float(np.sum(comb2(table.sum(axis=1))))
    pairs_b = float(np.sum(comb2(table.sum(axis=0))))
    fn = pairs_a - tp
    fp = pairs_b - tp
    tn = comb2(n) - tp - fn - fp
    if fn == 0.0 and fp == 0.0:
        return 1.0
    return 2.0 * (tp * tn - fn * fp) / ((tp + fn) * (fn + tn) + (tp + fp) * (fp + tn))


class WeightedKMeans(BaseEstimator):
    """k-means on (optionally) weighted data, scikit-learn style.

    Lloyd iterations with squared-distance seeding; ``fit`` accepts a
    ``sample_weight`` so the estimator can consume weighted coreset samples
    directly.

    Attributes after fit: ``cluster_centers_``, ``labels_``, ``inertia_``,
    ``n_iter_``.
    """

    def __init__(self, n_clusters=8, n_restarts=1, max_iter=100, tol=1e-6,
                 random_state=None):
        self.n_clusters = n_clusters
        self.n_restarts = n_restarts
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None, sample_weight=None):
        rng = check_rng(self.random_state)
        best = None
        for _ in range(int(self.n_restarts)):
            result = weighted_lloyd(
                X, self.n_clusters, weights=sample_weight, rng=rng,
                max_iters=self.max_iter, tol=self.tol,
            )
            if best is None or result.cost < best.cost:
                best = result
        self.cluster_centers_ = best.centroids
        self.labels_ = best.labels
        self.inertia_ = best.cost
        self.n_iter_ = best.iterations
        return self

    def predict(self, X):
        return assign_labels(X, self.cluster_centers_)

    def fit_predict(self, X, y=None, sample_weight=None):
        return self.fit(X, sample_weight=sample_weight).labels_
