"""Determinantal point process samplers over spectral representations.

A DPP with L-ensemble L = U diag(nu) U^T is sampled in two stages: pick a
random set of eigenvectors (independent Bernoullis with success nu/(1+nu),
or conditioned on exactly m successes for the fixed-size variant), then run
the projective sampler on the chosen orthonormal columns. Everything here
works from eigenvalues plus an eigenvector source, so the same code drives
both exact small-N ensembles and the larger Fourier-feature pipeline, where
eigenvectors are reconstructed lazily from the dual representation.

Brute-force subset distributions (N <= 14) are included as validation
oracles; statistical tests compare sampler output laws against them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .exceptions import NumericalDegeneracyError, ParameterError
from .rff import (
    RANK_TOLERANCE,
    FeatureMatrix,
    SpectralPair,
    numerical_rank,
    reconstruct_eigenvectors,
    sym_eig,
)
from .validation import check_rng, inverse_cdf_draw

BRUTE_FORCE_MAX_POINTS = 14


@dataclass
class WeightedSample:
    """Sampled indices with estimator weights and inclusion probabilities.

    For DPP pipelines the weight of index s is 1/pi_s; iid pipelines store
    count_s / (m p_s) so that in both cases the weighted cost estimate is
    sum_s weight_s * f(x_s).
    """

    indices: np.ndarray
    weights: np.ndarray
    inclusion_probs: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.intp).ravel()
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        self.inclusion_probs = np.asarray(self.inclusion_probs, dtype=float).ravel()
        n = self.indices.size
        if self.weights.size != n or self.inclusion_probs.size != n:
            raise ParameterError("indices, weights and inclusion_probs must align")
        if np.unique(self.indices).size != n:
            raise ParameterError("sample indices must be distinct")
        if n and (self.inclusion_probs.min() <= 0 or self.inclusion_probs.max() > 1 + 1e-12):
            raise ParameterError("inclusion probabilities must lie in (0, 1]")
        if n and self.weights.min() <= 0:
            raise ParameterError("weights must be positive")

    @property
    def size(self) -> int:
        return self.indices.size


@dataclass(frozen=True)
class SubsetDistribution:
    """Exact law over subsets of {0..N-1}; keys are sorted index tuples."""

    n_points: int
    probabilities: dict

    def total_variation(self, other: dict) -> float:
        keys = set(self.probabilities) | set(other)
        return 0.5 * sum(
            abs(self.probabilities.get(k, 0.0) - other.get(k, 0.0)) for k in keys
        )

    def marginals(self) -> np.ndarray:
        pi = np.zeros(self.n_points)
        for subset, p in self.probabilities.items():
            for i in subset:
                pi[i] += p
        return pi


def empirical_subset_law(samples) -> dict:
    """Frequency map over sorted index tuples, for comparison with oracles."""
    counts: dict = {}
    for s in samples:
        key = tuple(sorted(int(i) for i in s))
        counts[key] = counts.get(key, 0) + 1
    total = sum(counts.values())
    return {k: v / total for k, v in counts.items()}


class MarginalKernelView:
    """Spectral view of an L-ensemble, with lazy eigenvectors and caching.

    Holds eigenvalues ``nu`` plus one of two eigenvector sources: an explicit
    orthonormal N x q matrix, or a feature matrix with the eigendecomposition
    of its small dual Gram matrix (columns are then reconstructed on demand).
    Marginal probabilities and elementary-polynomial tables are cached, since
    they are reused across every draw from the same ensemble.
    """

    def __init__(self, values, eigenvectors=None, features: FeatureMatrix = None,
                 dual: SpectralPair = None, validate: bool = True):
        values = np.asarray(values, dtype=float).copy()
        if values.ndim != 1:
            raise ParameterError("eigenvalues must be a 1-D sequence")
        if not np.all(np.isfinite(values)):
            raise ParameterError("eigenvalues must be finite")
        scale = max(1.0, float(values.max(initial=0.0)))
        if values.min(initial=0.0) < -1e-10 * scale:
            raise ParameterError("L-ensemble eigenvalues must be nonnegative")
        np.clip(values, 0.0, None, out=values)
        self.values = values
        if (eigenvectors is None) == (features is None):
            raise ParameterError("provide exactly one of eigenvectors or (features, dual)")
        if features is not None and dual is None:
            raise ParameterError("features require the dual eigendecomposition")
        self._U = None if eigenvectors is None else np.asarray(eigenvectors, dtype=float)
        self._features = features
        self._dual = dual
        if self._U is not None:
            if self._U.ndim != 2 or self._U.shape[1] != values.size:
                raise ParameterError("eigenvector matrix must be N x len(values)")
            if validate and self._U.shape[1]:
                G = self._U.T @ self._U
                if float(np.abs(G - np.eye(G.shape[0])).max()) > 1e-6:
                    raise ParameterError("eigenvector columns must be orthonormal to 1e-6")
        top = float(values.max(initial=0.0))
        self.kept = np.flatnonzero(values > RANK_TOLERANCE * top) if top > 0 else np.array([], dtype=np.intp)
        # Discard below-tolerance eigenvalues outright: their eigenvectors
        # cannot be reconstructed stably, and their selection probability is
        # negligible anyway.
        discard = np.ones(values.size, dtype=bool)
        discard[self.kept] = False
        values[discard] = 0.0
        self._row_sq = None  # (N, q) squared eigenvector entries, built lazily
        self._dpp_marginals = None
        self._mdpp_cache: dict = {}
        self._log_poly_cache: dict = {}

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_l_ensemble(cls, L) -> "MarginalKernelView":
        """Exact view for a small symmetric PSD L-ensemble matrix."""
        pair = sym_eig(L)
        values = np.clip(pair.values, 0.0, None)
        return cls(values=values, eigenvectors=pair.vectors, validate=False)

    @classmethod
    def from_features(cls, features: FeatureMatrix) -> "MarginalKernelView":
        """Dual view for the Gram L-ensemble psi.T @ psi of a feature matrix."""
        C = features.psi @ features.psi.T
        pair = sym_eig(0.5 * (C + C.T))
        return cls(values=np.clip(pair.values, 0.0, None), features=features,
                   dual=pair, validate=False)

    # -- basic geometry ----------------------------------------------------

    @property
    def n_points(self) -> int:
        return self._U.shape[0] if self._U is not None else self._features.n_points

    @property
    def numerical_rank(self) -> int:
        return self.kept.size

    @property
    def expected_size(self) -> float:
        """Trace of the marginal kernel: mean cardinality of the DPP."""
        nu = self.values[self.kept]
        return float(np.sum(nu / (1.0 + nu)))

    def eigenvector_columns(self, idx) -> np.ndarray:
        """Orthonormal eigenvector columns for the given eigenvalue indices."""
        idx = np.asarray(idx, dtype=np.intp).ravel()
        if self._U is not None:
            return self._U[:, idx]
        return reconstruct_eigenvectors(self._features, self._dual, idx)

    def _row_squares(self) -> np.ndarray:
        """Matrix of u_k(i)^2, with zero rows for discarded eigenvalues."""
        if self._row_sq is None:
            if self._U is not None:
                self._row_sq = self._U**2
            else:
                sq = np.zeros((self.n_points, self.values.size))
                if self.kept.size:
                    T = self._features.psi.T @ self._dual.vectors[:, self.kept]
                    sq[:, self.kept] = T**2 / self.values[self.kept]
                self._row_sq = sq
        return self._row_sq

    def log_polynomial_table(self, order: int) -> np.ndarray:
        if order not in self._log_poly_cache:
            self._log_poly_cache[order] = elementary_polynomials(self.values, order)
        return self._log_poly_cache[order]


def elementary_polynomials(values, order: int) -> np.ndarray:
    """Log-domain table of elementary symmetric polynomials over prefixes.

    Entry [n, j] holds log e_n(nu_1..nu_j), built with the recurrence
    e_n^(j) = e_n^(j-1) + nu_j e_{n-1}^(j-1); the last column is therefore
    log e_n over all eigenvalues. Working with logarithms keeps the table
    finite for hundreds of eigenvalues spanning many orders of magnitude,
    where the plain recurrence over- or underflows.
    """
    nu = np.asarray(values, dtype=float)
    if nu.ndim != 1:
        raise ParameterError("eigenvalues must be 1-D")
    if np.any(nu < 0) or not np.all(np.isfinite(nu)):
        raise ParameterError("eigenvalues must be finite and nonnegative")
    q = nu.size
    order = int(order)
    if not 0 <= order <= q:
        raise ParameterError(f"order must lie in [0, {q}], got {order}")
    with np.errstate(divide="ignore"):
        log_nu = np.log(nu)
    E = np.full((order + 1, q + 1), -np.inf)
    E[0, :] = 0.0
    for j in range(1, q + 1):
        E[1:, j] = np.logaddexp(E[1:, j - 1], log_nu[j - 1] + E[:-1, j - 1])
    return E


def _suffix_polynomials(values, order: int) -> np.ndarray:
    """Mirror of elementary_polynomials: entry [n, j] is log e_n(nu_{j+1}..nu_q)."""
    nu = np.asarray(values, dtype=float)
    q = nu.size
    with np.errstate(divide="ignore"):
        log_nu = np.log(nu)
    S = np.full((order + 1, q + 1), -np.inf)
    S[0, :] = 0.0
    for j in range(q - 1, -1, -1):
        S[1:, j] = np.logaddexp(S[1:, j + 1], log_nu[j] + S[:-1, j + 1])
    return S


def dpp_eigen_select(values, rng) -> np.ndarray:
    """Independent Bernoulli selection of eigenvalue indices.

    Index k is kept with probability nu_k / (1 + nu_k), so the expected
    number kept equals the trace of the marginal kernel.
    """
    nu = np.asarray(values, dtype=float)
    if np.any(nu < 0) or not np.all(np.isfinite(nu)):
        raise ParameterError("eigenvalues must be finite and nonnegative")
    rng = check_rng(rng)
    probs = nu / (1.0 + nu)
    return np.flatnonzero(rng.random(nu.size) < probs)


def mdpp_eigen_select(values, m: int, rng, log_table=None) -> np.ndarray:
    """Select exactly m eigenvalue indices with probability prop. to their product.

    Backward recursion over the elementary-polynomial table: scanning from
    the last eigenvalue, index j is kept with conditional probability
    nu_j e_{rem-1}(nu_1..nu_{j-1}) / e_rem(nu_1..nu_j). All ratios are
    formed in the log domain.
    """
    nu = np.asarray(values, dtype=float)
    m = int(m)
    if m < 0:
        raise ParameterError("m must be nonnegative")
    if m == 0:
        return np.array([], dtype=np.intp)
    if numerical_rank(nu) < m:
        raise NumericalDegeneracyError(
            f"numerical rank {numerical_rank(nu)} is below the requested size {m}"
        )
    rng = check_rng(rng)
    E = elementary_polynomials(nu, m) if log_table is None else log_table
    with np.errstate(divide="ignore"):
        log_nu = np.log(nu)
    selected = []
    rem = m
    for j in range(nu.size, 0, -1):
        if rem == 0:
            break
        p = np.exp(log_nu[j - 1] + E[rem - 1, j - 1] - E[rem, j])
        if rng.random() < p:
            selected.append(j - 1)
            rem -= 1
    if rem != 0:  # pragma: no cover - excluded by the rank check
        raise NumericalDegeneracyError("eigenvalue selection ran out of mass")
    return np.array(selected[::-1], dtype=np.intp)


def sample_projective(W, rng) -> np.ndarray:
    """Sample a projection DPP with kernel W @ W.T; always |S| = W.shape[1].

    Sequential algorithm: start with selection mass p(i) = ||row_i||^2,
    repeatedly draw an index proportional to p, extend an orthonormal basis
    of the selected rows by Gram-Schmidt, and deflate p by the squared
    component along the new basis vector. Round-off can push p slightly
    negative, which is clamped to zero before each draw.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise ParameterError("W must be 2-D")
    n, J = W.shape
    if J == 0:
        return np.array([], dtype=np.intp)
    G = W.T @ W
    if float(np.abs(G - np.eye(J)).max()) > 1e-6:
        raise ParameterError("columns of W must be orthonormal to 1e-6")
    rng = check_rng(rng)
    p = np.sum(W * W, axis=1)
    F = np.empty((J, J))
    chosen = np.empty(J, dtype=np.intp)
    for step in range(J):
        np.clip(p, 0.0, None, out=p)
        if p.sum() <= 0.0:
            raise NumericalDegeneracyError("selection mass vanished before completing the sample")
        s = inverse_cdf_draw(p, rng)
        chosen[step] = s
        y = W[s]
        f = y - F[:step].T @ (F[:step] @ y) if step else y.copy()
        norm2 = float(f @ y)
        if norm2 <= 0.0:
            raise NumericalDegeneracyError("degenerate Gram-Schmidt step in projective sampler")
        f /= np.sqrt(norm2)
        F[step] = f
        p -= (W @ f) ** 2
    return chosen


def dpp_marginals(view: MarginalKernelView) -> np.ndarray:
    """Inclusion probabilities pi_i = sum_k (nu_k/(1+nu_k)) u_k(i)^2."""
    if view._dpp_marginals is None:
        nu = view.values
        weights = np.where(nu > 0, nu / (1.0 + nu), 0.0)
        view._dpp_marginals = view._row_squares() @ weights
    return view._dpp_marginals


def mdpp_marginals(view: MarginalKernelView, m: int) -> np.ndarray:
    """Inclusion probabilities of the size-m DPP; sums to m.

    pi_i = sum_k w_k u_k(i)^2 with w_k = nu_k e_{m-1}(nu minus nu_k) / e_m,
    where the leave-one-out polynomials are assembled from prefix and suffix
    tables in the log domain.
    """
    m = int(m)
    if m == 0:
        return np.zeros(view.n_points)
    if view.numerical_rank < m:
        raise NumericalDegeneracyError(
            f"numerical rank {view.numerical_rank} is below the requested size {m}"
        )
    if m not in view._mdpp_cache:
        pi = view._row_squares() @ mdpp_eigenvalue_weights(view.values, m)
        # The identity sum(pi) = m holds exactly in math; reconstruction noise
        # from near-zero eigenvalues perturbs it at ~1e-10 relative, so rescale.
        pi *= m / pi.sum()
        view._mdpp_cache[m] = pi
    return view._mdpp_cache[m]


def mdpp_eigenvalue_weights(values, m: int) -> np.ndarray:
    """Per-eigenvalue inclusion probabilities of the size-m selection step.

    Entry k is P(k selected) = nu_k e_{m-1}(nu with k removed) / e_m(nu);
    the entries sum to m.
    """
    nu = np.asarray(values, dtype=float)
    q = nu.size
    m = int(m)
    if m < 1:
        raise ParameterError("m must be >= 1")
    full = elementary_polynomials(nu, m)
    pre = full[:m]
    suf = _suffix_polynomials(nu, m - 1)
    log_em = full[m, q]
    if not np.isfinite(log_em):
        raise NumericalDegeneracyError("no size-m subset has positive eigenvalue mass")
    with np.errstate(divide="ignore"):
        log_nu = np.log(nu)
    # leave-one-out: e_{m-1}(nu \ nu_k) = sum_a e_a(prefix before k) e_{m-1-a}(suffix after k)
    stacked = pre[:m, :q] + suf[m - 1 :: -1, 1 : q + 1]
    with np.errstate(invalid="ignore"):
        log_loo = logsumexp(stacked, axis=0)
    log_w = log_nu + log_loo - log_em
    w = np.exp(log_w)
    w[~np.isfinite(log_w)] = 0.0
    return w


def sample_dpp(view: MarginalKernelView, rng) -> WeightedSample:
    """Draw one DPP sample; weights are inverse inclusion probabilities."""
    rng = check_rng(rng)
    kept = view.kept
    local = dpp_eigen_select(view.values[kept], rng)
    chosen_eigs = kept[local]
    pi = dpp_marginals(view)
    if chosen_eigs.size == 0:
        return WeightedSample(np.array([], dtype=np.intp), np.array([]), np.array([]))
    W = view.eigenvector_columns(chosen_eigs)
    S = sample_projective(W, rng)
    pi_s = pi[S]
    return WeightedSample(indices=S, weights=1.0 / pi_s, inclusion_probs=pi_s)


def sample_mdpp(view: MarginalKernelView, m: int, rng) -> WeightedSample:
    """Draw one fixed-size DPP sample of exactly m points."""
    m = int(m)
    rng = check_rng(rng)
    if m == 0:
        return WeightedSample(np.array([], dtype=np.intp), np.array([]), np.array([]))
    if view.numerical_rank < m:
        raise NumericalDegeneracyError(
            f"numerical rank {view.numerical_rank} is below the requested sample size {m}; "
            "increase the number of Fourier features or decrease the bandwidth"
        )
    chosen_eigs = mdpp_eigen_select(view.values, m, rng, log_table=view.log_polynomial_table(m))
    W = view.eigenvector_columns(chosen_eigs)
    S = sample_projective(W, rng)
    pi = mdpp_marginals(view, m)
    pi_s = np.clip(pi[S], None, 1.0)
    return WeightedSample(indices=S, weights=1.0 / pi_s, inclusion_probs=pi_s)


def joint_pair_probability(view: MarginalKernelView, i: int, j: int) -> float:
    """P(both i and j sampled) = pi_i pi_j - K_ij^2 for the plain DPP."""
    i, j = int(i), int(j)
    if i == j:
        raise ParameterError("indices must be distinct")
    pi = dpp_marginals(view)
    nu = view.values
    weights = np.where(nu > 0, nu / (1.0 + nu), 0.0)
    if view._U is not None:
        k_ij = float(np.sum(weights * view._U[i] * view._U[j]))
    else:
        kept = view.kept
        Ti = view._features.psi[:, i] @ view._dual.vectors[:, kept]
        Tj = view._features.psi[:, j] @ view._dual.vectors[:, kept]
        k_ij = float(np.sum(Ti * Tj / (1.0 + view.values[kept])))
    return float(pi[i] * pi[j] - k_ij**2)


# -- brute-force oracles ---------------------------------------------------


def _check_small_spd(L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ParameterError("L must be square")
    n = L.shape[0]
    if n > BRUTE_FORCE_MAX_POINTS:
        raise ParameterError(f"brute force is limited to N <= {BRUTE_FORCE_MAX_POINTS}")
    if float(np.abs(L - L.T).max(initial=0.0)) > 1e-8 * max(1.0, float(np.abs(L).max())):
        raise ParameterError("L must be symmetric")
    return L


def brute_force_dpp(L) -> SubsetDistribution:
    """Exact subset law P(S) = det(L_S) / det(I + L) over all 2^N subsets."""
    L = _check_small_spd(L)
    n = L.shape[0]
    Z = float(np.linalg.det(np.eye(n) + L))
    probs = {}
    for size in range(n + 1):
        for subset in itertools.combinations(range(n), size):
            idx = np.asarray(subset, dtype=np.intp)
            det = float(np.linalg.det(L[np.ix_(idx, idx)])) if size else 1.0
            probs[subset] = max(det, 0.0) / Z
    return SubsetDistribution(n_points=n, probabilities=probs)


def brute_force_mdpp(L, m: int) -> SubsetDistribution:
    """Exact law over size-m subsets, P(S) = det(L_S) / sum of size-m determinants."""
    L = _check_small_spd(L)
    n = L.shape[0]
    m = int(m)
    if not 0 <= m <= n:
        raise ParameterError(f"m must lie in [0, {n}]")
    dets = {}
    for subset in itertools.combinations(range(n), m):
        idx = np.asarray(subset, dtype=np.intp)
        det = float(np.linalg.det(L[np.ix_(idx, idx)])) if m else 1.0
        dets[subset] = max(det, 0.0)
    Z = sum(dets.values())
    if Z <= 0.0:
        raise NumericalDegeneracyError(f"no size-{m} subset has positive mass")
    return SubsetDistribution(n_points=n, probabilities={k: v / Z for k, v in dets.items()})
