import numpy as np
import pytest

from dppcoreset import MarginalKernelView, gaussian_kernel_matrix


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_gaussian_ensemble():
    """6-point planar cloud with its exact Gaussian L-ensemble and view."""
    gen = np.random.default_rng(99)
    X = gen.normal(size=(6, 2))
    L = gaussian_kernel_matrix(X, 1.0)
    return X, L, MarginalKernelView.from_l_ensemble(L)
