"""Gaussian kernel, random Fourier features, and the dual spectral machinery.

The Gaussian similarity matrix over N points costs O(N^2 d) to form and
O(N^3) to diagonalize. Random Fourier features sidestep both: a 2r x N
feature matrix ``psi`` satisfies ``psi.T @ psi ~=` kernel matrix, and the
small 2r x 2r dual matrix ``psi @ psi.T`` shares its nonzero spectrum with
the big N x N one, so all spectral work happens in dimension 2r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import NumericalDegeneracyError, ParameterError
from .validation import check_points, check_positive, check_rng

# Eigenvalues at or below RANK_TOLERANCE * max(eigenvalue) are treated as
# numerically zero: reconstructing their eigenvectors divides by sqrt(value)
# and amplifies noise without bound.
RANK_TOLERANCE = 1e-12


@dataclass(frozen=True)
class FrequencyMatrix:
    """r Gaussian frequency vectors (rows) for a bandwidth-s kernel."""

    omegas: np.ndarray  # (r, d)
    bandwidth: float
    seed: int | None = None

    @property
    def n_frequencies(self) -> int:
        return self.omegas.shape[0]

    @property
    def dim(self) -> int:
        return self.omegas.shape[1]


@dataclass(frozen=True)
class FeatureMatrix:
    """Fourier feature matrix, one unit-norm column per data point."""

    psi: np.ndarray  # (2r, N)
    bandwidth: float

    @property
    def n_points(self) -> int:
        return self.psi.shape[1]

    @property
    def n_features(self) -> int:
        return self.psi.shape[0]


@dataclass(frozen=True)
class SpectralPair:
    """Orthonormal eigenvectors (columns) with ascending eigenvalues."""

    vectors: np.ndarray  # (p, q)
    values: np.ndarray  # (q,)


def gaussian_kernel_entry(x, y, bandwidth: float) -> float:
    """Similarity exp(-||x - y||^2 / s^2) between two points."""
    s = check_positive(bandwidth, "bandwidth")
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ParameterError(f"points have mismatched dimensions {x.shape} vs {y.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ParameterError("points must be finite")
    d2 = float(np.sum((x - y) ** 2))
    return float(np.exp(-d2 / s**2))


def gaussian_kernel_matrix(X, bandwidth: float) -> np.ndarray:
    """Exact N x N Gaussian similarity matrix (small-N path)."""
    s = check_positive(bandwidth, "bandwidth")
    X = check_points(X)
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / s**2)


def draw_frequencies(dim: int, n_frequencies: int, bandwidth: float, rng) -> FrequencyMatrix:
    """Draw r iid frequency vectors from N(0, 2/s^2 I_d).

    That spectral density is the one whose cosine features average to the
    bandwidth-s Gaussian kernel.
    """
    if int(n_frequencies) < 1:
        raise ParameterError(f"n_frequencies must be >= 1, got {n_frequencies}")
    if int(dim) < 1:
        raise ParameterError(f"dim must be >= 1, got {dim}")
    s = check_positive(bandwidth, "bandwidth")
    rng = check_rng(rng)
    omegas = rng.normal(0.0, np.sqrt(2.0) / s, size=(int(n_frequencies), int(dim)))
    return FrequencyMatrix(omegas=omegas, bandwidth=s)


def feature_matrix(X, frequencies: FrequencyMatrix) -> FeatureMatrix:
    """Stack cosines over sines of the frequency projections, scaled by 1/sqrt(r).

    Column j is (1/sqrt(r)) [cos(w_1.x_j), ..., cos(w_r.x_j),
    sin(w_1.x_j), ..., sin(w_r.x_j)], which has squared norm exactly 1, and
    inner products psi_i.psi_j that are unbiased estimates of the kernel.
    """
    X = check_points(X)
    if X.shape[1] != frequencies.dim:
        raise ParameterError(
            f"points have dimension {X.shape[1]} but frequencies expect {frequencies.dim}"
        )
    proj = frequencies.omegas @ X.T  # (r, N)
    r = frequencies.n_frequencies
    psi = np.concatenate([np.cos(proj), np.sin(proj)], axis=0) / np.sqrt(r)
    return FeatureMatrix(psi=psi, bandwidth=frequencies.bandwidth)


def dual_matrix(features: FeatureMatrix) -> np.ndarray:
    """Small Gram form psi @ psi.T; symmetric PSD with trace N."""
    psi = features.psi
    C = psi @ psi.T
    return 0.5 * (C + C.T)


def sym_eig(M) -> SpectralPair:
    """Eigendecomposition of a symmetric matrix, ascending eigenvalues.

    Raises on visibly asymmetric input. Negative eigenvalues of magnitude
    below RANK_TOLERANCE * scale are zeroed; genuine negatives pass through
    untouched so reconstruction stays exact.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ParameterError(f"matrix must be square, got shape {M.shape}")
    scale = max(1.0, float(np.abs(M).max()))
    if float(np.abs(M - M.T).max()) > 1e-8 * scale:
        raise ParameterError("matrix is not symmetric to 1e-8")
    try:
        values, vectors = scipy.linalg.eigh(0.5 * (M + M.T))
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalDegeneracyError(f"eigendecomposition failed: {exc}") from exc
    tol = RANK_TOLERANCE * max(1.0, float(np.abs(values).max()))
    values[(values < 0.0) & (values > -tol)] = 0.0
    return SpectralPair(vectors=vectors, values=values)


def numerical_rank(values, tolerance: float = RANK_TOLERANCE) -> int:
    """Count eigenvalues meaningfully above zero relative to the largest."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0
    top = values.max()
    if top <= 0:
        return 0
    return int(np.sum(values > tolerance * top))


def reconstruct_eigenvectors(features: FeatureMatrix, dual: SpectralPair, kept) -> np.ndarray:
    """Lift dual eigenvectors to eigenvectors of the big Gram matrix.

    For each kept index k, psi.T @ v_k / sqrt(nu_k) is a unit eigenvector of
    psi.T @ psi with the same eigenvalue. Indices whose eigenvalue sits at or
    below the rank tolerance are rejected: the normalization would blow up.
    """
    kept = np.asarray(kept, dtype=np.intp).ravel()
    if kept.size == 0:
        return np.zeros((features.n_points, 0))
    values = dual.values[kept]
    top = float(dual.values.max()) if dual.values.size else 0.0
    if np.any(values <= RANK_TOLERANCE * max(top, 1e-300)):
        raise NumericalDegeneracyError(
            "requested eigenvector with numerically zero eigenvalue; "
            "increase the number of Fourier features or decrease the bandwidth"
        )
    W = features.psi.T @ (dual.vectors[:, kept] / np.sqrt(values))
    # Reconstruction noise scales like eps * max(nu) / nu_k, so columns for
    # eigenvalues near the rank floor can miss the orthonormality contract.
    # The downstream projective sampler depends only on the column span, so
    # re-orthonormalizing is transparent; signs follow the raw reconstruction.
    G = W.T @ W
    if float(np.abs(G - np.eye(kept.size)).max()) > 1e-8:
        Q, R = np.linalg.qr(W)
        W = Q * np.sign(np.diag(R))
    return W


def mean_interdistance(X, pairs: int = 1000, rng=None) -> float:
    """Average Euclidean distance over uniformly chosen distinct pairs.

    The usual kernel-bandwidth heuristic. If ``pairs`` covers all N(N-1)/2
    pairs the exact mean is returned; otherwise pairs are drawn uniformly at
    random (deterministic given the seed).
    """
    X = check_points(X, min_points=2)
    n = X.shape[0]
    total_pairs = n * (n - 1) // 2
    if int(pairs) < 1:
        raise ParameterError(f"pairs must be >= 1, got {pairs}")
    if pairs >= total_pairs:
        d = 0.0
        for i in range(n - 1):
            d += float(np.sum(np.sqrt(np.sum((X[i + 1 :] - X[i]) ** 2, axis=1))))
        return d / total_pairs
    rng = check_rng(rng)
    i = rng.integers(0, n, size=int(pairs))
    j = rng.integers(0, n - 1, size=int(pairs))
    j = np.where(j >= i, j + 1, j)  # uniform over j != i
    return float(np.mean(np.sqrt(np.sum((X[i] - X[j]) ** 2, axis=1))))
