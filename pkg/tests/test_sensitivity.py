import numpy as np
import pytest

from dppcoreset import (
    DegenerateDataError,
    ParameterError,
    bicriteria_sensitivity_bound,
    one_means_sensitivity,
    split_outliers,
)


def sensitivity_oracle(X, i, grid_points=4001):
    """Maximize the cost-share ratio of point i over candidate centroids.

    Scans centroids along the ray from x_i through the data mean (where the
    maximizer lies), over a fine radius grid bracketing the stationary
    radius a/b.
    """
    Xc = X - X.mean(axis=0)
    xi = Xc[i]
    a = float(np.sum((Xc - xi) ** 2))
    b = float(np.linalg.norm(Xc.sum(axis=0) - Xc.shape[0] * xi))
    direction = -xi / np.linalg.norm(xi)
    best = 0.0
    for radius in (a / b) * np.linspace(0.5, 2.0, grid_points):
        c = xi + radius * direction
        best = max(best, float(np.sum((xi - c) ** 2) / np.sum((Xc - c) ** 2)))
    return best


class TestOneMeansSensitivity:
    def test_two_symmetric_points(self):
        profile = one_means_sensitivity(np.array([[-1.0], [1.0]]))
        np.testing.assert_allclose(profile.sigma, [1.0, 1.0])
        assert profile.total == pytest.approx(2.0, abs=1e-12)

    def test_total_is_two(self, rng):
        X = rng.normal(size=(80, 5)) * 3.0
        assert one_means_sensitivity(X).total == pytest.approx(2.0, abs=1e-12)

    def test_matches_numeric_maximization(self, rng):
        X = rng.normal(size=(30, 2))
        profile = one_means_sensitivity(X)
        for i in range(0, 30, 5):
            oracle = sensitivity_oracle(X, i)
            assert abs(oracle - profile.sigma[i]) / profile.sigma[i] <= 1e-4

    def test_range_and_min_product(self, rng):
        X = rng.normal(size=(40, 3))
        sigma = one_means_sensitivity(X).sigma
        n = 40
        assert np.all(sigma >= 1.0 / n - 1e-15)
        assert np.all(sigma <= 1.0 + 1e-15)
        assert n * sigma.min() >= 1.0 - 1e-12

    def test_translation_invariance(self, rng):
        X = rng.normal(size=(25, 4))
        a = one_means_sensitivity(X).sigma
        b = one_means_sensitivity(X + 57.3).sigma
        # invariant up to re-centering roundoff
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)

    def test_degenerate_data(self):
        with pytest.raises(DegenerateDataError):
            one_means_sensitivity(np.ones((5, 2)))


class TestBicriteriaBound:
    def test_valid_distribution(self, rng):
        X = rng.normal(size=(60, 3))
        profile = bicriteria_sensitivity_bound(X, 3, rng)
        assert profile.kind == "upper_bound"
        assert np.all(profile.sigma > 0)
        p = profile.sigma / profile.total
        assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_dominates_exact_one_means(self):
        # upper-bound property against the closed form, over seeds
        gen = np.random.default_rng(0)
        dominated = total = 0
        for seed in range(20):
            X = np.random.default_rng(seed).normal(size=(100, 2))
            exact = one_means_sensitivity(X).sigma
            bound = bicriteria_sensitivity_bound(X, 1, gen).sigma
            dominated += int(np.sum(bound >= exact))
            total += exact.size
        assert dominated / total >= 0.95

    def test_duplication_halves_bounds(self):
        # N large enough that the bounds sit below the sigma <= 1 cap
        gen = np.random.default_rng(3)
        X = np.random.default_rng(1).normal(size=(400, 2))
        base = bicriteria_sensitivity_bound(X, 2, gen).sigma
        doubled = bicriteria_sensitivity_bound(np.vstack([X, X]), 2, gen).sigma
        # same-point bounds shrink roughly inversely with N; allow slack for
        # the randomized seeding (compare medians rather than pointwise)
        ratio = np.median(doubled[:400] / base)
        assert 0.25 <= ratio <= 0.75
        assert np.mean(base >= 1.0) < 0.1  # cap must not be doing the work

    def test_monotone_in_n(self):
        # mean bound scales like 1/N once unclipped
        gen = np.random.default_rng(5)
        means = []
        for n in (300, 600, 1200):
            X = np.random.default_rng(2).normal(size=(n, 2))
            means.append(bicriteria_sensitivity_bound(X, 2, gen).sigma.mean())
        assert means[0] > means[1] > means[2]

    def test_rejects_bad_k(self, rng):
        X = rng.normal(size=(10, 2))
        with pytest.raises(ParameterError):
            bicriteria_sensitivity_bound(X, 0, rng)
        with pytest.raises(ParameterError):
            bicriteria_sensitivity_bound(X, 10, rng)


class TestSplitOutliers:
    def test_threshold_one_keeps_everything(self, rng):
        profile = one_means_sensitivity(rng.normal(size=(20, 2)))
        split = split_outliers(profile, 1.0)
        assert split.outlier_indices.size == 0
        assert split.kept_indices.size == 20

    def test_threshold_at_floor(self, rng):
        profile = one_means_sensitivity(rng.normal(size=(20, 2)))
        split = split_outliers(profile, 1.0 / 20)
        expected = np.flatnonzero(profile.sigma > 1.0 / 20)
        np.testing.assert_array_equal(split.outlier_indices, expected)

    def test_single_heavy_point(self):
        from dppcoreset.sensitivity import SensitivityProfile

        sigma = np.full(10, 0.01)
        sigma[3] = 0.9
        profile = SensitivityProfile(sigma=sigma, total=float(sigma.sum()), kind="exact_1means")
        split = split_outliers(profile, 0.5)
        np.testing.assert_array_equal(split.outlier_indices, [3])
        assert split.kept_indices.size == 9

    def test_partition(self, rng):
        profile = one_means_sensitivity(rng.normal(size=(30, 2)))
        split = split_outliers(profile, 0.2)
        merged = np.sort(np.concatenate([split.outlier_indices, split.kept_indices]))
        np.testing.assert_array_equal(merged, np.arange(30))

    def test_threshold_out_of_range(self, rng):
        profile = one_means_sensitivity(rng.normal(size=(20, 2)))
        with pytest.raises(ParameterError):
            split_outliers(profile, 0.01)
        with pytest.raises(ParameterError):
            split_outliers(profile, 1.5)
