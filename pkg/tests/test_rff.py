import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dppcoreset import (
    NumericalDegeneracyError,
    ParameterError,
    draw_frequencies,
    dual_matrix,
    feature_matrix,
    gaussian_kernel_entry,
    gaussian_kernel_matrix,
    mean_interdistance,
    reconstruct_eigenvectors,
    sym_eig,
)


class TestGaussianKernelEntry:
    def test_zero_distance_is_one(self):
        x = np.array([1.5, -2.0])
        assert gaussian_kernel_entry(x, x, 3.0) == 1.0

    def test_unit_ratio_distance(self):
        assert gaussian_kernel_entry([0.0], [2.0], 2.0) == pytest.approx(np.exp(-1.0))

    def test_three_four_five_triangle(self):
        # ||x - y|| = 5 equals the bandwidth, so the value is e^{-1}
        assert gaussian_kernel_entry([0, 0], [3, 4], 5.0) == pytest.approx(np.exp(-1.0), rel=1e-12)

    def test_rejects_nonpositive_bandwidth(self):
        with pytest.raises(ParameterError):
            gaussian_kernel_entry([0.0], [1.0], 0.0)
        with pytest.raises(ParameterError):
            gaussian_kernel_entry([0.0], [1.0], -1.0)

    def test_matrix_agrees_with_entries(self, rng):
        X = rng.normal(size=(5, 3))
        K = gaussian_kernel_matrix(X, 1.7)
        for i in range(5):
            for j in range(5):
                assert K[i, j] == pytest.approx(
                    gaussian_kernel_entry(X[i], X[j], 1.7), abs=1e-14
                )


class TestDrawFrequencies:
    def test_empty_draw_rejected(self, rng):
        with pytest.raises(ParameterError):
            draw_frequencies(2, 0, 1.0, rng)

    def test_deterministic_given_seed(self):
        a = draw_frequencies(3, 7, 2.0, np.random.default_rng(5)).omegas
        b = draw_frequencies(3, 7, 2.0, np.random.default_rng(5)).omegas
        np.testing.assert_array_equal(a, b)

    def test_variance_matches_spectral_density(self):
        # entries are N(0, 2/s^2); law of large numbers at r = 1e5
        freqs = draw_frequencies(1, 100_000, 1.0, np.random.default_rng(0))
        assert freqs.omegas.var() == pytest.approx(2.0, rel=0.05)


class TestFeatureMatrix:
    def test_columns_have_unit_norm(self, rng):
        X = rng.normal(size=(20, 3))
        psi = feature_matrix(X, draw_frequencies(3, 11, 1.5, rng)).psi
        np.testing.assert_allclose(np.sum(psi**2, axis=0), 1.0, atol=1e-12)

    def test_identical_points_share_a_column(self, rng):
        X = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
        psi = feature_matrix(X, draw_frequencies(2, 6, 1.0, rng)).psi
        np.testing.assert_array_equal(psi[:, 0], psi[:, 1])

    def test_inner_products_concentrate_on_kernel(self):
        rng = np.random.default_rng(21)
        X = rng.normal(size=(2, 4))
        psi = feature_matrix(X, draw_frequencies(4, 5000, 2.0, rng)).psi
        approx = float(psi[:, 0] @ psi[:, 1])
        exact = gaussian_kernel_entry(X[0], X[1], 2.0)
        assert abs(approx - exact) < 0.05

    def test_dimension_mismatch(self, rng):
        freqs = draw_frequencies(3, 4, 1.0, rng)
        with pytest.raises(ParameterError):
            feature_matrix(np.zeros((5, 2)), freqs)

    def test_unbiased_over_frequency_draws(self):
        # mean of psi_i . psi_j over independent draws deviates from the
        # kernel by at most 4 standard errors
        rng = np.random.default_rng(3)
        X = rng.normal(size=(2, 3))
        exact = gaussian_kernel_entry(X[0], X[1], 1.5)
        estimates = []
        for seed in range(50):
            psi = feature_matrix(X, draw_frequencies(3, 200, 1.5, np.random.default_rng(seed))).psi
            estimates.append(float(psi[:, 0] @ psi[:, 1]))
        estimates = np.asarray(estimates)
        se = estimates.std(ddof=1) / np.sqrt(estimates.size)
        assert abs(estimates.mean() - exact) <= 4.0 * se

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 8), st.floats(0.2, 5.0), st.integers(0, 10_000))
    def test_unit_norm_property(self, d, r, s, seed):
        gen = np.random.default_rng(seed)
        X = gen.normal(size=(4, d))
        psi = feature_matrix(X, draw_frequencies(d, r, s, gen)).psi
        assert np.max(np.abs(np.sum(psi**2, axis=0) - 1.0)) <= 1e-12


class TestDualMatrix:
    def test_single_point_outer_product(self, rng):
        X = rng.normal(size=(1, 2))
        feats = feature_matrix(X, draw_frequencies(2, 3, 1.0, rng))
        C = dual_matrix(feats)
        np.testing.assert_allclose(C, np.outer(feats.psi[:, 0], feats.psi[:, 0]), atol=1e-14)
        assert np.linalg.matrix_rank(C) == 1

    def test_trace_counts_points(self, rng):
        X = rng.normal(size=(17, 2))
        C = dual_matrix(feature_matrix(X, draw_frequencies(2, 9, 1.0, rng)))
        assert np.trace(C) == pytest.approx(17.0, abs=1e-9)
        assert np.abs(C - C.T).max() <= 1e-12

    def test_shared_nonzero_spectrum_with_big_gram(self, rng):
        # psi psi^T and psi^T psi have the same nonzero eigenvalues
        X = rng.normal(size=(12, 2))
        feats = feature_matrix(X, draw_frequencies(2, 4, 1.0, rng))
        small = np.linalg.eigvalsh(dual_matrix(feats))
        big = np.linalg.eigvalsh(feats.psi.T @ feats.psi)
        nz_small = np.sort(small[small > 1e-9])[::-1]
        nz_big = np.sort(big[big > 1e-9])[::-1]
        assert nz_small.size == nz_big.size
        np.testing.assert_allclose(nz_small, nz_big, rtol=1e-8)


class TestSymEig:
    def test_identity(self):
        pair = sym_eig(np.eye(4))
        np.testing.assert_allclose(pair.values, 1.0)

    def test_diagonal_ascending(self):
        pair = sym_eig(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(pair.values, [1.0, 3.0])
        np.testing.assert_allclose(np.abs(pair.vectors), np.eye(2)[:, ::-1], atol=1e-12)

    def test_reconstruction_residual(self, rng):
        A = rng.normal(size=(5, 5))
        M = A + A.T
        pair = sym_eig(M)
        R = pair.vectors @ np.diag(pair.values) @ pair.vectors.T
        assert np.abs(R - M).max() <= 1e-8 * np.abs(M).max()

    def test_rejects_asymmetric(self):
        with pytest.raises(ParameterError):
            sym_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestReconstructEigenvectors:
    def _setup(self, rng, n=15, r=4):
        X = rng.normal(size=(n, 2))
        feats = feature_matrix(X, draw_frequencies(2, r, 1.0, rng))
        dual = sym_eig(dual_matrix(feats))
        return feats, dual

    def test_empty_selection(self, rng):
        feats, dual = self._setup(rng)
        W = reconstruct_eigenvectors(feats, dual, [])
        assert W.shape == (15, 0)

    def test_orthonormal_columns(self, rng):
        feats, dual = self._setup(rng)
        kept = np.flatnonzero(dual.values > 1e-8)
        W = reconstruct_eigenvectors(feats, dual, kept)
        np.testing.assert_allclose(W.T @ W, np.eye(kept.size), atol=1e-6)

    def test_columns_are_big_gram_eigenvectors(self, rng):
        feats, dual = self._setup(rng)
        kept = np.flatnonzero(dual.values > 1e-8)
        W = reconstruct_eigenvectors(feats, dual, kept)
        G = feats.psi.T @ feats.psi
        for col, k in enumerate(kept):
            lhs = G @ W[:, col]
            rhs = dual.values[k] * W[:, col]
            assert np.linalg.norm(lhs - rhs) <= 1e-6 * max(np.linalg.norm(rhs), 1e-12)

    def test_rejects_null_eigenvalue(self, rng):
        # 3 points cannot fill 8 feature dimensions, so the dual matrix is
        # rank deficient and its bottom eigenvector is not reconstructible
        feats, dual = self._setup(rng, n=3, r=4)
        assert dual.values[0] <= 1e-10 * dual.values[-1]
        with pytest.raises(NumericalDegeneracyError):
            reconstruct_eigenvectors(feats, dual, [0])


class TestMeanInterdistance:
    def test_single_pair(self):
        assert mean_interdistance(np.array([[0.0], [3.0]])) == pytest.approx(3.0)

    def test_identical_points(self):
        assert mean_interdistance(np.zeros((5, 2))) == 0.0

    def test_needs_two_points(self):
        with pytest.raises(ParameterError):
            mean_interdistance(np.zeros((1, 2)))

    def test_standard_gaussian_2d_scale(self):
        # the reference scale for bandwidth selection in the plane is ~1.5
        gen = np.random.default_rng(0)
        X = gen.normal(size=(1000, 2))
        value = mean_interdistance(X, pairs=1000, rng=gen)
        assert abs(value - 1.5) / 1.5 <= 0.2

    def test_deterministic(self):
        gen = np.random.default_rng(8)
        X = gen.normal(size=(50, 2))
        a = mean_interdistance(X, pairs=20, rng=np.random.default_rng(4))
        b = mean_interdistance(X, pairs=20, rng=np.random.default_rng(4))
        assert a == b
