"""Scikit-learn style estimators wrapping the sampling pipeline.

``MDPPCoresetSampler`` is the headline object: fit builds the Fourier
feature embedding and its dual eigendecomposition once, after which
``sample`` draws any number of fixed-size weighted coresets cheaply.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .dpp import MarginalKernelView, WeightedSample, mdpp_marginals, sample_dpp, sample_mdpp
from .exceptions import NumericalDegeneracyError, ParameterError
from .rff import draw_frequencies, feature_matrix, gaussian_kernel_matrix, mean_interdistance
from .sensitivity import one_means_sensitivity, split_outliers
from .validation import check_points, check_rng

AUTO = "auto"
# Interdistance pairs used to resolve bandwidth="auto".
BANDWIDTH_PAIRS = 1000
# Fourier features per requested sample under n_frequencies="auto".
FREQUENCIES_PER_SAMPLE = 4


def resolve_bandwidth(X, bandwidth, rng=None) -> float:
    """Turn "auto" into the mean interdistance heuristic; pass floats through."""
    if bandwidth == AUTO or bandwidth is None:
        return mean_interdistance(X, pairs=BANDWIDTH_PAIRS, rng=check_rng(rng))
    value = float(bandwidth)
    if value <= 0:
        raise ParameterError(f"bandwidth must be positive, got {value}")
    return value


def resolve_n_frequencies(n_frequencies, m: int):
    """Resolve the feature count: "auto" scales with m, None means exact kernel."""
    if n_frequencies is None:
        return None
    if n_frequencies == AUTO:
        return max(FREQUENCIES_PER_SAMPLE * int(m), 1)
    r = int(n_frequencies)
    if r < 1:
        raise ParameterError(f"n_frequencies must be >= 1, got {r}")
    return r


def build_kernel_view(X, bandwidth: float, n_frequencies, rng) -> MarginalKernelView:
    """Spectral view of the Gaussian L-ensemble, exact or via Fourier features."""
    X = check_points(X)
    if n_frequencies is None:
        return MarginalKernelView.from_l_ensemble(gaussian_kernel_matrix(X, bandwidth))
    freqs = draw_frequencies(X.shape[1], n_frequencies, bandwidth, rng)
    return MarginalKernelView.from_features(feature_matrix(X, freqs))


class FourierFeatureMap(BaseEstimator, TransformerMixin):
    """Random Fourier feature embedding approximating the Gaussian kernel.

    ``transform`` maps points to 2 * n_frequencies coordinates whose inner
    products estimate exp(-||x - y||^2 / bandwidth^2). With
    bandwidth="auto" the mean interdistance of the fit data is used.
    """

    def __init__(self, n_frequencies=100, bandwidth=AUTO, random_state=None):
        self.n_frequencies = n_frequencies
        self.bandwidth = bandwidth
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_points(X)
        rng = check_rng(self.random_state)
        self.bandwidth_ = resolve_bandwidth(X, self.bandwidth, rng)
        self.frequencies_ = draw_frequencies(
            X.shape[1], int(self.n_frequencies), self.bandwidth_, rng
        )
        return self

    def transform(self, X):
        return feature_matrix(check_points(X), self.frequencies_).psi.T


class MDPPCoresetSampler(BaseEstimator):
    """Fixed-size determinantal coreset sampler for k-means.

    Fit pipeline: draw Fourier features of the Gaussian kernel at the chosen
    bandwidth, form the small dual Gram matrix, diagonalize it, and
    precompute the fixed-size inclusion probabilities. Each ``sample`` call
    then draws exactly ``n_samples`` distinct points, weighted by inverse
    inclusion probability, so the weighted cost of the sample estimates the
    full cost unbiasedly for every choice of centroids.

    Parameters
    ----------
    n_samples : int
        Coreset size m.
    bandwidth : float or "auto"
        Gaussian kernel parameter; larger means more repulsion. "auto" uses
        the mean interdistance of the fit data.
    n_frequencies : int, "auto", or None
        Fourier features r (the embedding has 2r coordinates). "auto" picks
        4 * n_samples; None skips the embedding and diagonalizes the exact
        kernel (small N only).
    random_state : int, Generator, or None
        Drives both the feature draw at fit time and, by default, sampling.

    Attributes after fit: ``bandwidth_``, ``n_frequencies_``, ``view_``,
    ``marginals_``, ``numerical_rank_``.
    """

    def __init__(self, n_samples=20, bandwidth=AUTO, n_frequencies=AUTO,
                 random_state=None):
        self.n_samples = n_samples
        self.bandwidth = bandwidth
        self.n_frequencies = n_frequencies
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_points(X)
        m = int(self.n_samples)
        if m < 0 or m > X.shape[0]:
            raise ParameterError(f"n_samples must lie in [0, {X.shape[0]}], got {m}")
        rng = check_rng(self.random_state)
        self.bandwidth_ = resolve_bandwidth(X, self.bandwidth, rng)
        self.n_frequencies_ = resolve_n_frequencies(self.n_frequencies, max(m, 1))
        self._rng = rng
        if m == 0:
            self.view_ = None
            self.marginals_ = np.zeros(X.shape[0])
            self.numerical_rank_ = 0
            return self
        view = build_kernel_view(X, self.bandwidth_, self.n_frequencies_, rng)
        self.numerical_rank_ = view.numerical_rank
        if self.numerical_rank_ < m:
            raise NumericalDegeneracyError(
                f"numerical rank {self.numerical_rank_} of the kernel embedding is below "
                f"n_samples={m}; increase n_frequencies or decrease the bandwidth"
            )
        self.view_ = view
        self.marginals_ = mdpp_marginals(view, m)
        return self

    def sample(self, random_state=None) -> WeightedSample:
        """Draw one weighted coreset of exactly ``n_samples`` points."""
        rng = self._rng if random_state is None else check_rng(random_state)
        if int(self.n_samples) == 0:
            return WeightedSample(np.array([], dtype=np.intp), np.array([]), np.array([]))
        return sample_mdpp(self.view_, int(self.n_samples), rng)

    def fit_sample(self, X, y=None) -> WeightedSample:
        return self.fit(X).sample()


class GaussianDPPSampler(BaseEstimator):
    """Variable-size DPP sampler with the Gaussian L-ensemble.

    Like MDPPCoresetSampler but without conditioning on the sample size; the
    number of points drawn is random with mean ``expected_size_``.
    """

    def __init__(self, bandwidth=AUTO, n_frequencies=None, random_state=None):
        self.bandwidth = bandwidth
        self.n_frequencies = n_frequencies
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_points(X)
        rng = check_rng(self.random_state)
        self.bandwidth_ = resolve_bandwidth(X, self.bandwidth, rng)
        r = self.n_frequencies
        r = None if r is None else int(r)
        self.n_frequencies_ = r
        self.view_ = build_kernel_view(X, self.bandwidth_, r, rng)
        self.expected_size_ = self.view_.expected_size
        self._rng = rng
        return self

    def sample(self, random_state=None) -> WeightedSample:
        rng = self._rng if random_state is None else check_rng(random_state)
        return sample_dpp(self.view_, rng)


def sample_mdpp_coreset(X, m: int, bandwidth=AUTO, n_frequencies=AUTO, rng=None,
                        sigma_star: float = 1.0) -> WeightedSample:
    """One-shot coreset draw: features, dual spectrum, fixed-size DPP, weights.

    With ``sigma_star`` below 1, points whose exact 1-means sensitivity
    exceeds it are split off first and force-included with weight 1 and
    inclusion probability 1; the determinantal sample of size m is drawn
    from the remaining points only.
    """
    X = check_points(X)
    rng = check_rng(rng)
    if sigma_star >= 1.0:
        return MDPPCoresetSampler(
            n_samples=m, bandwidth=bandwidth, n_frequencies=n_frequencies,
            random_state=rng,
        ).fit_sample(X)
    split = split_outliers(one_means_sensitivity(X), sigma_star)
    kept = split.kept_indices
    inner = MDPPCoresetSampler(
        n_samples=m, bandwidth=bandwidth, n_frequencies=n_frequencies, random_state=rng,
    ).fit_sample(X[kept])
    n_out = split.outlier_indices.size
    return WeightedSample(
        indices=np.concatenate([split.outlier_indices, kept[inner.indices]]),
        weights=np.concatenate([np.ones(n_out), inner.weights]),
        inclusion_probs=np.concatenate([np.ones(n_out), inner.inclusion_probs]),
    )
