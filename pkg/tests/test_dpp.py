import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dppcoreset import (
    MarginalKernelView,
    NumericalDegeneracyError,
    ParameterError,
    brute_force_dpp,
    brute_force_mdpp,
    dpp_eigen_select,
    dpp_marginals,
    elementary_polynomials,
    empirical_subset_law,
    joint_pair_probability,
    mdpp_eigen_select,
    mdpp_eigenvalue_weights,
    mdpp_marginals,
    sample_dpp,
    sample_mdpp,
    sample_projective,
)
from dppcoreset.rff import gaussian_kernel_matrix


def enumerate_elementary(nu, n):
    """Independent oracle: sum over all size-n subsets of eigenvalue products."""
    return sum(float(np.prod(c)) for c in itertools.combinations(nu, n)) if n else 1.0


class TestDppEigenSelect:
    def test_all_zero(self, rng):
        for _ in range(20):
            assert dpp_eigen_select(np.zeros(5), rng).size == 0

    def test_saturating_bernoulli(self, rng):
        hits = sum(0 in dpp_eigen_select(np.array([1e15]), rng) for _ in range(10_000))
        assert hits / 10_000 > 0.999

    def test_mean_selection_count(self, rng):
        # nu = (1, 1): each kept with probability 1/2, E|J| = 1
        draws = 100_000
        total = sum(dpp_eigen_select(np.array([1.0, 1.0]), rng).size for _ in range(draws))
        se = np.sqrt(2 * 0.25 / draws)
        assert abs(total / draws - 1.0) <= 3 * se


class TestElementaryPolynomials:
    def test_order_zero_is_one(self, rng):
        nu = rng.uniform(0, 5, size=6)
        table = elementary_polynomials(nu, 0)
        np.testing.assert_allclose(np.exp(table[0]), 1.0)

    def test_order_one_is_sum(self, rng):
        nu = rng.uniform(0, 5, size=6)
        table = elementary_polynomials(nu, 1)
        assert np.exp(table[1, -1]) == pytest.approx(nu.sum(), rel=1e-12)

    def test_second_order_example(self):
        table = elementary_polynomials(np.array([1.0, 2.0, 3.0]), 2)
        # 1*2 + 1*3 + 2*3
        assert np.exp(table[2, -1]) == pytest.approx(11.0, rel=1e-10)

    def test_rejects_order_above_size(self):
        with pytest.raises(ParameterError):
            elementary_polynomials(np.ones(3), 4)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0.0, 50.0), min_size=1, max_size=12), st.data())
    def test_matches_enumeration(self, nu, data):
        nu = np.asarray(nu)
        n = data.draw(st.integers(0, len(nu)))
        table = elementary_polynomials(nu, n)
        expected = enumerate_elementary(nu, n)
        got = float(np.exp(table[n, -1]))
        if expected == 0.0:
            assert got == 0.0
        else:
            assert got == pytest.approx(expected, rel=1e-10)

    def test_stable_for_wide_eigenvalue_range(self):
        # q = 500 spanning 18 orders of magnitude: log table stays finite
        gen = np.random.default_rng(2)
        nu = np.exp(gen.uniform(np.log(1e-12), np.log(1e6), size=500))
        table = elementary_polynomials(nu, 60)
        assert np.all(np.isfinite(table[:, -1]))
        weights = mdpp_eigenvalue_weights(nu, 60)
        assert np.all(np.isfinite(weights))
        assert weights.sum() == pytest.approx(60.0, rel=1e-9)


class TestMdppEigenSelect:
    def test_full_order_selects_everything(self, rng):
        nu = np.array([0.5, 1.0, 2.0])
        np.testing.assert_array_equal(mdpp_eigen_select(nu, 3, rng), [0, 1, 2])

    def test_symmetric_eigenvalues_uniform(self, rng):
        draws = 100_000
        counts = np.zeros(3)
        for _ in range(draws):
            counts[mdpp_eigen_select(np.ones(3), 1, rng)[0]] += 1
        se = np.sqrt((1 / 3) * (2 / 3) / draws)
        np.testing.assert_allclose(counts / draws, 1 / 3, atol=3 * se)

    def test_law_proportional_to_products(self, rng):
        # nu = (1, 2, 4), m = 2: subset weights (1*2, 1*4, 2*4) / 14
        draws = 200_000
        law = empirical_subset_law(
            [mdpp_eigen_select(np.array([1.0, 2.0, 4.0]), 2, rng) for _ in range(draws)]
        )
        exact = {(0, 1): 2 / 14, (0, 2): 4 / 14, (1, 2): 8 / 14}
        tv = 0.5 * sum(abs(law.get(k, 0.0) - v) for k, v in exact.items())
        assert tv <= 0.01

    def test_rank_error(self, rng):
        with pytest.raises(NumericalDegeneracyError):
            mdpp_eigen_select(np.array([1.0, 0.0, 0.0]), 2, rng)


class TestSampleProjective:
    def test_point_mass(self, rng):
        W = np.array([[1.0], [0.0]])
        for _ in range(10):
            np.testing.assert_array_equal(sample_projective(W, rng), [0])

    def test_size_and_distinctness(self, rng):
        A = rng.normal(size=(8, 3))
        W, _ = np.linalg.qr(A)
        for _ in range(50):
            s = sample_projective(W, rng)
            assert s.size == 3
            assert np.unique(s).size == 3

    def test_rejects_non_orthonormal(self, rng):
        with pytest.raises(ParameterError):
            sample_projective(np.ones((4, 2)), rng)

    def test_law_matches_projective_determinants(self, rng):
        # exhaustive oracle: P(S) = det((W W^T)_S) for |S| = J
        gen = np.random.default_rng(17)
        W, _ = np.linalg.qr(gen.normal(size=(6, 2)))
        P = W @ W.T
        exact = {}
        for pair in itertools.combinations(range(6), 2):
            idx = np.asarray(pair)
            exact[pair] = max(float(np.linalg.det(P[np.ix_(idx, idx)])), 0.0)
        total = sum(exact.values())
        exact = {k: v / total for k, v in exact.items()}
        draws = 100_000
        law = empirical_subset_law([sample_projective(W, rng) for _ in range(draws)])
        keys = set(exact) | set(law)
        tv = 0.5 * sum(abs(exact.get(k, 0.0) - law.get(k, 0.0)) for k in keys)
        assert tv <= 0.02


class TestBruteForce:
    def test_zero_ensemble(self):
        dist = brute_force_dpp(np.zeros((3, 3)))
        assert dist.probabilities[()] == pytest.approx(1.0)

    def test_identity_two_points(self):
        dist = brute_force_dpp(np.eye(2))
        for subset in [(), (0,), (1,), (0, 1)]:
            assert dist.probabilities[subset] == pytest.approx(0.25)

    def test_pair_probability_formula(self):
        L = np.array([[2.0, 0.7], [0.7, 1.5]])
        dist = brute_force_dpp(L)
        z = np.linalg.det(np.eye(2) + L)
        assert dist.probabilities[(0, 1)] == pytest.approx((2.0 * 1.5 - 0.7**2) / z, rel=1e-12)

    def test_probabilities_sum_to_one(self, small_gaussian_ensemble):
        _, L, _ = small_gaussian_ensemble
        assert sum(brute_force_dpp(L).probabilities.values()) == pytest.approx(1.0, abs=1e-10)

    def test_mdpp_full_size(self):
        L = np.diag([1.0, 2.0, 4.0])
        dist = brute_force_mdpp(L, 3)
        assert dist.probabilities[(0, 1, 2)] == pytest.approx(1.0)

    def test_mdpp_diagonal_products(self):
        dist = brute_force_mdpp(np.diag([1.0, 2.0, 4.0]), 2)
        assert dist.probabilities[(0, 1)] == pytest.approx(2 / 14)
        assert dist.probabilities[(0, 2)] == pytest.approx(4 / 14)
        assert dist.probabilities[(1, 2)] == pytest.approx(8 / 14)
        assert sum(dist.probabilities.values()) == pytest.approx(1.0, abs=1e-10)

    def test_size_cap(self):
        with pytest.raises(ParameterError):
            brute_force_dpp(np.eye(15))


class TestMarginals:
    def test_uniform_eigenvector(self):
        n = 4
        U = np.full((n, 1), 1 / np.sqrt(n))
        view = MarginalKernelView(values=np.array([3.0]), eigenvectors=U)
        np.testing.assert_allclose(dpp_marginals(view), (3.0 / 4.0) / n)

    def test_trace_identity(self, small_gaussian_ensemble):
        _, _, view = small_gaussian_ensemble
        nu = view.values
        assert dpp_marginals(view).sum() == pytest.approx(
            np.sum(nu / (1 + nu)), abs=1e-10
        )

    def test_matches_brute_force(self, rng):
        X = rng.normal(size=(5, 2))
        L = gaussian_kernel_matrix(X, 0.8)
        view = MarginalKernelView.from_l_ensemble(L)
        oracle = brute_force_dpp(L).marginals()
        assert np.abs(dpp_marginals(view) - oracle).max() <= 1e-10

    def test_mdpp_sum_is_m(self, small_gaussian_ensemble):
        _, _, view = small_gaussian_ensemble
        for m in (1, 2, 3):
            assert mdpp_marginals(view, m).sum() == pytest.approx(m, abs=1e-9)

    def test_mdpp_exchangeable_when_symmetric(self):
        # identical eigenvalues with a symmetric orthonormal basis: all equal
        n = 4
        U = np.linalg.qr(np.ones((n, n)) + np.eye(n))[0]
        view = MarginalKernelView(values=np.full(n, 2.0), eigenvectors=U)
        pi = mdpp_marginals(view, 2)
        np.testing.assert_allclose(pi, pi[0], rtol=1e-9)

    def test_mdpp_matches_brute_force(self, rng):
        X = rng.normal(size=(6, 2))
        L = gaussian_kernel_matrix(X, 0.8)
        view = MarginalKernelView.from_l_ensemble(L)
        oracle = brute_force_mdpp(L, 2).marginals()
        assert np.abs(mdpp_marginals(view, 2) - oracle).max() <= 1e-9

    def test_lazy_view_matches_explicit(self, rng):
        from dppcoreset import draw_frequencies, feature_matrix

        X = rng.normal(size=(9, 2))
        feats = feature_matrix(X, draw_frequencies(2, 5, 1.0, rng))
        lazy = MarginalKernelView.from_features(feats)
        explicit = MarginalKernelView.from_l_ensemble(feats.psi.T @ feats.psi)
        np.testing.assert_allclose(dpp_marginals(lazy), dpp_marginals(explicit), atol=1e-8)
        np.testing.assert_allclose(mdpp_marginals(lazy, 3), mdpp_marginals(explicit, 3), atol=1e-8)


class TestSampleDpp:
    def test_zero_values_give_empty_sample(self, rng):
        view = MarginalKernelView(values=np.zeros(3), eigenvectors=np.eye(3))
        s = sample_dpp(view, rng)
        assert s.size == 0

    def test_mean_size(self, small_gaussian_ensemble, rng):
        _, _, view = small_gaussian_ensemble
        draws = 20_000
        sizes = np.array([sample_dpp(view, rng).size for _ in range(draws)])
        nu = view.values
        expect = float(np.sum(nu / (1 + nu)))
        se = sizes.std(ddof=1) / np.sqrt(draws)
        assert abs(sizes.mean() - expect) <= 3 * se

    def test_weights_are_inverse_marginals(self, small_gaussian_ensemble, rng):
        _, _, view = small_gaussian_ensemble
        pi = dpp_marginals(view)
        s = sample_dpp(view, rng)
        np.testing.assert_allclose(s.weights, 1.0 / pi[s.indices], rtol=1e-12)

    def test_law_against_oracle(self, small_gaussian_ensemble):
        _, L, view = small_gaussian_ensemble
        oracle = brute_force_dpp(L)
        gen = np.random.default_rng(5)
        draws = 60_000
        law = empirical_subset_law(
            [tuple(sample_dpp(view, gen).indices) for _ in range(draws)]
        )
        # TV noise floor at this draw count is about 0.012
        assert oracle.total_variation(law) <= 0.035

    def test_deterministic(self, small_gaussian_ensemble):
        _, _, view = small_gaussian_ensemble
        a = sample_dpp(view, np.random.default_rng(42)).indices
        b = sample_dpp(view, np.random.default_rng(42)).indices
        np.testing.assert_array_equal(a, b)


class TestSampleMdpp:
    def test_zero_size(self, small_gaussian_ensemble, rng):
        _, _, view = small_gaussian_ensemble
        assert sample_mdpp(view, 0, rng).size == 0

    def test_exact_size_always(self, small_gaussian_ensemble, rng):
        _, _, view = small_gaussian_ensemble
        for _ in range(200):
            s = sample_mdpp(view, 2, rng)
            assert s.size == 2

    def test_rank_error_surfaces(self, rng):
        view = MarginalKernelView(values=np.array([1.0, 0.0]), eigenvectors=np.eye(2))
        with pytest.raises(NumericalDegeneracyError):
            sample_mdpp(view, 2, rng)

    def test_law_against_oracle(self, small_gaussian_ensemble):
        _, L, view = small_gaussian_ensemble
        oracle = brute_force_mdpp(L, 2)
        gen = np.random.default_rng(6)
        draws = 60_000
        law = empirical_subset_law(
            [tuple(sample_mdpp(view, 2, gen).indices) for _ in range(draws)]
        )
        assert oracle.total_variation(law) <= 0.035

    def test_inclusion_frequencies_match_marginals(self, small_gaussian_ensemble):
        _, _, view = small_gaussian_ensemble
        pi = mdpp_marginals(view, 2)
        gen = np.random.default_rng(7)
        draws = 50_000
        counts = np.zeros(6)
        for _ in range(draws):
            counts[sample_mdpp(view, 2, gen).indices] += 1
        freq = counts / draws
        se = np.sqrt(pi * (1 - pi) / draws)
        assert np.all(np.abs(freq - pi) <= 4 * se)

    def test_deterministic(self, small_gaussian_ensemble):
        _, _, view = small_gaussian_ensemble
        a = sample_mdpp(view, 3, np.random.default_rng(9)).indices
        b = sample_mdpp(view, 3, np.random.default_rng(9)).indices
        np.testing.assert_array_equal(a, b)


class TestJointPairProbability:
    def test_duplicate_points_never_cosampled(self, rng):
        X = np.vstack([rng.normal(size=(4, 2)), rng.normal(size=(1, 2))])
        X = np.vstack([X, X[-1]])  # duplicate the last point
        L = gaussian_kernel_matrix(X, 1.0)
        view = MarginalKernelView.from_l_ensemble(L)
        assert joint_pair_probability(view, 4, 5) == pytest.approx(0.0, abs=1e-10)

    def test_diagonal_kernel_independence(self):
        view = MarginalKernelView(values=np.array([1.0, 3.0]), eigenvectors=np.eye(2))
        pi = dpp_marginals(view)
        assert joint_pair_probability(view, 0, 1) == pytest.approx(pi[0] * pi[1], rel=1e-12)

    def test_matches_brute_force(self, rng):
        X = rng.normal(size=(5, 2))
        L = gaussian_kernel_matrix(X, 0.9)
        view = MarginalKernelView.from_l_ensemble(L)
        dist = brute_force_dpp(L)
        for i, j in itertools.combinations(range(5), 2):
            exact = sum(p for s, p in dist.probabilities.items() if i in s and j in s)
            assert joint_pair_probability(view, i, j) == pytest.approx(exact, abs=1e-10)

    def test_repulsion_bound(self, small_gaussian_ensemble):
        _, _, view = small_gaussian_ensemble
        pi = dpp_marginals(view)
        for i, j in itertools.combinations(range(6), 2):
            assert joint_pair_probability(view, i, j) <= pi[i] * pi[j] + 1e-15

    def test_same_index_rejected(self, small_gaussian_ensemble):
        _, _, view = small_gaussian_ensemble
        with pytest.raises(ParameterError):
            joint_pair_probability(view, 2, 2)
