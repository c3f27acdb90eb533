"""Sufficient-sample-size calculators for the coreset guarantees.

Covering numbers are astronomically large, so they travel in log form
throughout; every bound takes ``log_n`` rather than n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError
from .validation import check_in_open_unit, check_points, check_positive, check_vector

DPP_VARIANT = "dpp"
MDPP_VARIANT = "mdpp"


@dataclass(frozen=True)
class BoundInputs:
    """Shared ingredients of the sample-size bounds.

    ``pi`` holds inclusion probabilities whose normalized form pi/mu enters
    the bounds; ``log_n`` is the natural log of the covering number of the
    parameter space.
    """

    sigma: np.ndarray
    pi: np.ndarray
    mu: float
    epsilon: float
    delta: float
    log_n: float

    def __post_init__(self):
        sigma = check_vector(self.sigma, name="sigma")
        pi = check_vector(self.pi, n=sigma.size, name="pi")
        if np.any(sigma <= 0) or np.any(pi <= 0):
            raise ParameterError("sensitivities and inclusion probabilities must be positive")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "pi", pi)
        check_positive(self.mu, "mu")
        check_in_open_unit(self.epsilon, "epsilon")
        check_in_open_unit(self.delta, "delta")
        if not np.isfinite(self.log_n) or self.log_n < 0:
            raise ParameterError(f"log_n must be a nonnegative real, got {self.log_n}")

    @property
    def n_points(self) -> int:
        return self.sigma.size

    @property
    def normalized_pi(self) -> np.ndarray:
        return self.pi / self.mu

    @property
    def max_sensitivity_ratio(self) -> float:
        return float(np.max(self.sigma / self.normalized_pi))


@dataclass(frozen=True)
class DppSampleBound:
    mu1: float
    mu2: float
    mu_star: float
    min_sensitivity_condition: bool  # N * sigma_min >= 1, which forces mu1 >= mu2


def dpp_sample_size_bound(inputs: BoundInputs) -> DppSampleBound:
    """Expected sample size sufficient for the coreset property under DPP sampling.

    mu1 covers the cost concentration over a covering of the parameter
    space; mu2 covers the concentration of the sample-size estimator itself;
    the binding constraint is their max. When N * min(sigma) >= 1 the first
    always dominates.
    """
    eps, delta = inputs.epsilon, inputs.delta
    ratio = inputs.max_sensitivity_ratio
    log10n = np.log(10.0 / delta) + inputs.log_n
    mu1 = 32.0 / eps**2 * (eps * ratio + 4.0 * ratio**2) * log10n
    pibar_min = float(np.min(inputs.normalized_pi))
    n = inputs.n_points
    mu2 = (
        32.0 / eps**2
        * (eps / (n * pibar_min) + 4.0 / (n * pibar_min) ** 2)
        * np.log(10.0 / delta)
    )
    condition = bool(n * float(np.min(inputs.sigma)) >= 1.0)
    return DppSampleBound(
        mu1=float(mu1), mu2=float(mu2), mu_star=float(max(mu1, mu2)),
        min_sensitivity_condition=condition,
    )


def mdpp_sample_size_bound(inputs: BoundInputs) -> float:
    """Fixed sample size sufficient for the coreset property under size-m DPP sampling."""
    eps, delta = inputs.epsilon, inputs.delta
    ratio = inputs.max_sensitivity_ratio
    return float(32.0 / eps**2 * ratio**2 * (np.log(4.0 / delta) + inputs.log_n))


@dataclass(frozen=True)
class ProportionalityReport:
    alpha: float
    beta: float
    threshold: float  # required lower bound on alpha / beta
    satisfied: bool
    implied_bound: float
    feasible: bool  # whether any (alpha, beta=1) could satisfy the threshold


def proportionality_conditions(sigma, pi, epsilon: float, delta: float, log_n: float,
                               total_sensitivity: float,
                               variant: str = DPP_VARIANT) -> ProportionalityReport:
    """Check how close inclusion probabilities are to sensitivity-proportional.

    Fits the tightest alpha (min pi/sigma) and spread beta, then evaluates
    the sufficient condition alpha/beta >= threshold for the chosen sampling
    variant, reporting the implied sample-size bound. ``feasible`` is False
    when even probabilities exactly proportional to sigma (beta = 1, alpha
    at its cap 1/max(sigma)) could not meet the threshold.
    """
    sigma = check_vector(sigma, name="sigma")
    pi = check_vector(pi, n=sigma.size, name="pi")
    if np.any(sigma <= 0):
        raise ParameterError("sensitivities must be positive")
    if np.any(pi <= 0) or np.any(pi > 1.0 + 1e-12):
        raise ParameterError("inclusion probabilities must lie in (0, 1]")
    eps = check_in_open_unit(epsilon, "epsilon")
    delta = check_in_open_unit(delta, "delta")
    total = check_positive(total_sensitivity, "total_sensitivity")
    ratios = pi / sigma
    alpha = float(ratios.min())
    beta = float(ratios.max() / alpha)
    if variant == DPP_VARIANT:
        threshold = 32.0 / eps**2 * (eps + 4.0 * total) * (np.log(10.0 / delta) + log_n)
        implied = 32.0 / eps**2 * beta * total * (eps + 4.0 * total) * (np.log(10.0 / delta) + log_n)
    elif variant == MDPP_VARIANT:
        threshold = 32.0 / eps**2 * total * (np.log(4.0 / delta) + log_n)
        implied = 32.0 / eps**2 * beta * total**2 * (np.log(4.0 / delta) + log_n)
    else:
        raise ParameterError(f"unknown variant {variant!r}")
    return ProportionalityReport(
        alpha=alpha, beta=beta, threshold=float(threshold),
        satisfied=bool(alpha / beta >= threshold), implied_bound=float(implied),
        feasible=bool(1.0 / float(sigma.max()) >= threshold),
    )


def kmeans_covering_number_log(diameter: float, epsilon: float, mean_opt_cost: float,
                               k: int, d: int) -> float:
    """Log covering number of the k-means parameter space.

    k*d * log(24 rho^2 / (eps <f>) + 1), from covering the enclosing ball of
    diameter rho by balls whose radius reflects the 2*rho Lipschitz constant
    of the per-point cost.
    """
    rho = check_positive(diameter, "diameter")
    eps = check_positive(epsilon, "epsilon")
    fbar = check_positive(mean_opt_cost, "mean_opt_cost")
    if int(k) < 1 or int(d) < 1:
        raise ParameterError("k and d must be positive integers")
    return float(int(k) * int(d) * np.log(24.0 * rho**2 / (eps * fbar) + 1.0))


def min_enclosing_diameter(X, rel_tol: float = 0.005, max_iters: int = 20000) -> float:
    """Diameter of the minimum enclosing ball, to about 1% relative accuracy.

    Starts from the centroid and repeatedly steps toward the current
    farthest point with shrinking step sizes. The largest pairwise distance
    among visited farthest points lower-bounds the diameter, giving an early
    exit; the iteration cap alone already guarantees the accuracy target.
    """
    X = check_points(X)
    n = X.shape[0]
    if n == 1:
        return 0.0

    def farthest_from(point):
        d2 = np.sum((X - point) ** 2, axis=1)
        far = int(np.argmax(d2))
        return far, float(np.sqrt(d2[far]))

    # Ritter-style start: p far from the centroid, q far from p; the ball on
    # the segment pq is exact whenever the diameter is attained by a pair.
    p_idx, _ = farthest_from(X.mean(axis=0))
    q_idx, pair_dist = farthest_from(X[p_idx])
    if pair_dist == 0.0:
        return 0.0
    center = 0.5 * (X[p_idx] + X[q_idx])
    support = [X[p_idx].copy(), X[q_idx].copy()]
    best_pair = pair_dist
    radius = 0.0
    for t in range(1, int(max_iters) + 1):
        far, radius = farthest_from(center)
        p = X[far]
        for s in support:
            best_pair = max(best_pair, float(np.linalg.norm(p - s)))
        if 2.0 * radius <= (1.0 + rel_tol) * best_pair:
            return 2.0 * radius
        if not any(np.array_equal(p, s) for s in support):
            support.append(p.copy())
        center = center + (p - center) / (t + 1.0)
    return 2.0 * radius
