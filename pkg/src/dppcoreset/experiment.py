"""Experiment orchestration: sweeps of sampling methods against datasets.

For each (bandwidth, m, trial) the harness draws a data realization, a
shared batch of random centroid sets, and one sample per method, then
scores the fraction of parameters for which the weighted cost estimate is
within epsilon of the truth, optionally together with the clustering
agreement of weighted k-means run on the sample.

Randomness is addressed by named substreams of the master seed (data,
parameters, pipeline, per-method sampling, per-method clustering), so
results are reproducible from the config alone, identical across thread
counts, and paired across methods within a trial.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, fields, replace

import numpy as np
from joblib import Parallel, delayed

from .costs import (
    ESTIMATOR_KINDS,
    IMPORTANCE,
    KMEANS_COST,
    VORONOI,
    draw_centroid_sets,
    voronoi_weights,
    weighted_cost_estimate,
)
from .datasets import SbmSpec, gaussian_with_outliers, load_csv, sbm_critical_zeta, sbm_graph, spectral_features
from .dpp import WeightedSample
from .exceptions import ConfigurationError, DegenerateDataError
from .kmeans import adjusted_rand_index, assign_labels, d2_seeding, weighted_lloyd
from .samplers import AUTO, MDPPCoresetSampler, resolve_bandwidth, resolve_n_frequencies, sample_mdpp_coreset
from .sensitivity import bicriteria_sensitivity_bound, one_means_sensitivity
from .validation import substream

METHODS = ("mdpp", "matched_iid", "uniform_iid", "sensitivity_iid", "d2")
DATASETS = ("gaussian", "sbm", "csv")
CSV_HEADER = "method,m,s,r,seed,epsilon,estimator,success_rate,ari,wall_ms"

# Substream tags: (seed, trial, TAG[, method index]).
_DATA, _THETA, _PIPELINE, _SAMPLING, _LLOYD = range(5)

THREADS_ENV_VAR = "DPPC_THREADS"

logger = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    """Flat description of one experiment sweep; see README for the key list."""

    dataset: str = "gaussian"
    n: int = 1000
    d: int = 2
    outlier_fraction: float = 0.0
    csv_path: str | None = None
    csv_header: bool = False
    csv_labels: bool = False
    sbm_blocks: int = 2
    sbm_zeta: float | None = None  # None: quarter of the detectability threshold
    sbm_avg_degree: float = 16.0
    # d2 is opt-in: it only supports the voronoi estimator
    methods: tuple = ("mdpp", "matched_iid", "uniform_iid", "sensitivity_iid")
    m_grid: tuple = (20, 40, 60, 80, 100)
    epsilon: float = 0.1
    theta_draws: int = 50
    trials: int = 100
    seed: int = 0
    bandwidth: tuple = (AUTO,)
    n_frequencies: object = AUTO
    estimator: str = IMPORTANCE
    k: int = 1
    threads: int = 0  # 0: take DPPC_THREADS, else 1
    lloyd_restarts: int = 1
    compute_ari: bool = False
    sigma_star: float = 1.0
    output: str | None = None
    timing: bool = True

    def validate(self) -> None:
        if self.dataset not in DATASETS:
            raise ConfigurationError(f"unknown dataset {self.dataset!r}")
        if self.dataset == "csv" and not self.csv_path:
            raise ConfigurationError("dataset 'csv' requires csv_path")
        if not self.methods:
            raise ConfigurationError("methods must be non-empty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigurationError(f"unknown methods {unknown}; roster is {METHODS}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        grid = tuple(int(m) for m in self.m_grid)
        if not grid or any(m <= 0 for m in grid) or list(grid) != sorted(grid):
            raise ConfigurationError("m_grid must be positive and ascending")
        if self.estimator not in ESTIMATOR_KINDS:
            raise ConfigurationError(f"estimator must be one of {ESTIMATOR_KINDS}")
        if "d2" in self.methods and self.estimator == IMPORTANCE:
            raise ConfigurationError(
                "d2 has no known inclusion probabilities; use estimator=voronoi "
                "or drop d2 from methods"
            )
        if self.trials < 1 or self.theta_draws < 1:
            raise ConfigurationError("trials and theta_draws must be >= 1")
        if self.compute_ari and self.dataset == "csv" and not self.csv_labels:
            raise ConfigurationError("compute_ari needs ground-truth labels")

    def n_threads(self) -> int:
        if self.threads and int(self.threads) != 0:
            return int(self.threads)
        env = os.environ.get(THREADS_ENV_VAR)
        return int(env) if env else 1


@dataclass
class ResultRow:
    method: str
    m: int
    s: float
    r: int
    seed: int
    epsilon: float
    estimator: str
    success_rate: float
    ari: float | None
    wall_ms: float

    def csv_fields(self) -> list:
        return [
            self.method,
            str(self.m),
            format(self.s, ".6g"),
            str(self.r),
            str(self.seed),
            format(self.epsilon, ".6g"),
            self.estimator,
            repr(float(self.success_rate)),
            "" if self.ari is None else format(self.ari, ".6f"),
            format(self.wall_ms, ".3f"),
        ]


def _coerce(name: str, text: str):
    """Parse one config value from its flat text form."""
    bool_keys = {"csv_header", "csv_labels", "compute_ari", "timing"}
    int_keys = {"n", "d", "sbm_blocks", "theta_draws", "trials", "seed", "k",
                "threads", "lloyd_restarts"}
    float_keys = {"outlier_fraction", "sbm_avg_degree", "epsilon", "sigma_star"}
    text = text.strip()
    if name in bool_keys:
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"{name} expects a boolean, got {text!r}")
    if name in int_keys:
        return int(text)
    if name in float_keys:
        return float(text)
    if name == "sbm_zeta":
        return None if text.lower() in ("", "auto") else float(text)
    if name == "methods":
        return tuple(part.strip() for part in text.split(",") if part.strip())
    if name == "m_grid":
        return tuple(int(part) for part in text.split(","))
    if name == "bandwidth":
        return tuple(
            AUTO if part.strip() == AUTO else float(part) for part in text.split(",")
        )
    if name == "n_frequencies":
        return AUTO if text == AUTO else int(text)
    return text


def parse_config_file(path) -> dict:
    """Read a flat ``key = value`` config file (# starts a comment)."""
    known = {f.name for f in fields(ExperimentConfig)}
    values: dict = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in known:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, value)
    return values


def config_from_sources(file_path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from an optional file plus CLI overrides (flags win)."""
    values = parse_config_file(file_path) if file_path else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = _coerce(key, value) if isinstance(value, str) else value
    return ExperimentConfig(**values)


def draw_dataset(config: ExperimentConfig, rng):
    """One realization of the configured dataset: (X, labels-or-None)."""
    if config.dataset == "gaussian":
        return gaussian_with_outliers(config.n, config.d, config.outlier_fraction, rng)
    if config.dataset == "sbm":
        k = int(config.sbm_blocks)
        zeta = config.sbm_zeta
        if zeta is None:
            zeta = sbm_critical_zeta(config.sbm_avg_degree, k) / 4.0
        base = config.n // k
        sizes = [base + (1 if i < config.n % k else 0) for i in range(k)]
        spec = SbmSpec(block_sizes=tuple(sizes), zeta=zeta, avg_degree=config.sbm_avg_degree)
        adjacency, labels = sbm_graph(spec, rng)
        return spectral_features(adjacency, k), labels
    return load_csv(config.csv_path, header=config.csv_header, labels=config.csv_labels)


def _iid_sample(probs, m: int, rng) -> WeightedSample:
    """m draws with replacement; duplicates fold into weights count/(m p)."""
    probs = np.asarray(probs, dtype=float)
    probs = probs / probs.sum()
    counts = rng.multinomial(m, probs)
    idx = np.flatnonzero(counts)
    return WeightedSample(
        indices=idx,
        weights=counts[idx] / (m * probs[idx]),
        inclusion_probs=np.clip(probs[idx], None, 1.0),
    )


def run_method(name: str, X, m: int, config: ExperimentConfig, rng,
               pipeline: MDPPCoresetSampler | None = None):
    """Draw one weighted sample by the named method.

    Returns ``(sample, estimator_kind)``. The mdpp and matched_iid methods
    need the fitted spectral pipeline; if none is passed one is fitted here
    (with ``rng``, so results stay reproducible). d2 always reports the
    voronoi kind since its inclusion probabilities are unknown.
    """
    if name not in METHODS:
        raise ConfigurationError(f"unknown method {name!r}; roster is {METHODS}")
    kind = config.estimator
    if name == "d2":
        if config.estimator == IMPORTANCE:
            raise ConfigurationError("d2 supports only the voronoi estimator")
        idx = d2_seeding(X, m, rng)
        counts = voronoi_weights(X, idx).astype(float)
        sample = WeightedSample(indices=idx, weights=counts, inclusion_probs=np.ones(m))
        return sample, VORONOI
    if name in ("mdpp", "matched_iid"):
        if pipeline is None:
            pipeline = MDPPCoresetSampler(
                n_samples=m, bandwidth=config.bandwidth[0],
                n_frequencies=config.n_frequencies, random_state=rng,
            ).fit(X)
        if name == "mdpp":
            if config.sigma_star < 1.0:
                return sample_mdpp_coreset(
                    X, m, bandwidth=pipeline.bandwidth_,
                    n_frequencies=config.n_frequencies, rng=rng,
                    sigma_star=config.sigma_star,
                ), kind
            return pipeline.sample(rng), kind
        return _iid_sample(pipeline.marginals_ / m, m, rng), kind
    if name == "uniform_iid":
        return _iid_sample(np.full(X.shape[0], 1.0 / X.shape[0]), m, rng), kind
    # sensitivity_iid: exact closed form for one centroid, rough bound otherwise
    if config.k == 1:
        profile = one_means_sensitivity(X)
    else:
        profile = bicriteria_sensitivity_bound(X, config.k, rng)
    return _iid_sample(profile.sigma / profile.total, m, rng), kind


def _trial(config: ExperimentConfig, m: int, bandwidth, trial: int, fixed_data,
           fixed_pipeline):
    """Run every method once on one realization; returns per-method stats."""
    if fixed_data is None:
        X, labels = draw_dataset(config, substream(config.seed, trial, _DATA))
    else:
        X, labels = fixed_data
    thetas = draw_centroid_sets(
        X, config.k, config.theta_draws, substream(config.seed, trial, _THETA)
    )
    totals = np.array([KMEANS_COST.total(X, theta) for theta in thetas])

    pipeline = fixed_pipeline
    if pipeline is None and ("mdpp" in config.methods or "matched_iid" in config.methods):
        pipeline = MDPPCoresetSampler(
            n_samples=m, bandwidth=bandwidth, n_frequencies=config.n_frequencies,
            random_state=substream(config.seed, trial, _PIPELINE),
        ).fit(X)

    stats = {}
    for mi, name in enumerate(METHODS):
        if name not in config.methods:
            continue
        start = time.perf_counter()
        sample, kind = run_method(
            name, X, m, config, substream(config.seed, trial, _SAMPLING, mi), pipeline
        )
        hits = 0
        for theta, total in zip(thetas, totals):
            est = weighted_cost_estimate(X, theta, sample, kind=kind)
            if abs(est / total - 1.0) <= config.epsilon:
                hits += 1
        ari = None
        if config.compute_ari and labels is not None and sample.size:
            w = (
                voronoi_weights(X, sample.indices).astype(float)
                if kind == VORONOI else sample.weights
            )
            rng_lloyd = substream(config.seed, trial, _LLOYD, mi)
            best = None
            try:
                for _ in range(max(1, int(config.lloyd_restarts))):
                    res = weighted_lloyd(X[sample.indices], config.k, weights=w, rng=rng_lloyd)
                    if best is None or res.cost < best.cost:
                        best = res
                ari = adjusted_rand_index(assign_labels(X, best.centroids), labels)
            except DegenerateDataError as exc:
                # a sample with fewer distinct points than k cannot seed
                # k-means; skip the agreement score for this trial
                logger.warning("trial %d %s: %s", trial, name, exc)
        wall = (time.perf_counter() - start) * 1000.0 if config.timing else 0.0
        stats[name] = (hits, ari, wall)
    return stats


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Execute the sweep; returns rows and (optionally) streams them to CSV."""
    config.validate()
    config = replace(config, m_grid=tuple(int(m) for m in config.m_grid))
    fixed_data = None
    if config.dataset == "csv":
        fixed_data = draw_dataset(config, None)
    n_jobs = config.n_threads()
    rows: list[ResultRow] = []
    out = open(config.output, "w", encoding="utf-8", newline="") if config.output else None
    try:
        if out:
            out.write(CSV_HEADER + "\n")
            out.flush()
        for bandwidth in config.bandwidth:
            # Resolve "auto" once, on the trial-0 realization, so a single
            # number is reported and shared by every trial of this sweep.
            if bandwidth == AUTO:
                X0 = fixed_data[0] if fixed_data else draw_dataset(
                    config, substream(config.seed, 0, _DATA))[0]
                s_value = resolve_bandwidth(X0, AUTO, substream(config.seed, 0, _PIPELINE))
            else:
                s_value = float(bandwidth)
            for m in config.m_grid:
                r_value = resolve_n_frequencies(config.n_frequencies, m)
                fixed_pipeline = None
                needs_pipeline = "mdpp" in config.methods or "matched_iid" in config.methods
                if fixed_data is not None and needs_pipeline:
                    fixed_pipeline = MDPPCoresetSampler(
                        n_samples=m, bandwidth=s_value, n_frequencies=config.n_frequencies,
                        random_state=substream(config.seed, 0, _PIPELINE),
                    ).fit(fixed_data[0])
                run = delayed(_trial)
                results = Parallel(n_jobs=n_jobs)(
                    run(config, m, s_value, t, fixed_data, fixed_pipeline)
                    for t in range(config.trials)
                ) if n_jobs != 1 else [
                    _trial(config, m, s_value, t, fixed_data, fixed_pipeline)
                    for t in range(config.trials)
                ]
                for name in config.methods:
                    hits = sum(res[name][0] for res in results)
                    aris = [res[name][1] for res in results if res[name][1] is not None]
                    wall = sum(res[name][2] for res in results)
                    row = ResultRow(
                        method=name, m=m, s=s_value,
                        r=0 if r_value is None else r_value,
                        seed=config.seed, epsilon=config.epsilon,
                        estimator=VORONOI if name == "d2" else config.estimator,
                        success_rate=hits / (config.trials * config.theta_draws),
                        ari=float(np.mean(aris)) if aris else None,
                        wall_ms=wall,
                    )
                    rows.append(row)
                    if out:
                        out.write(",".join(row.csv_fields()) + "\n")
                        out.flush()
    finally:
        if out:
            out.close()
    return rows
