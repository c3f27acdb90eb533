"""Command-line interface: sample, bounds, experiment, datagen, validate.

Exit codes: 0 success, 2 configuration error, 3 numerical degeneracy,
4 input/output error, 1 failed validation.
"""

from __future__ import annotations

import sys

import click
import numpy as np

from .bounds import (
    BoundInputs,
    dpp_sample_size_bound,
    kmeans_covering_number_log,
    mdpp_sample_size_bound,
    min_enclosing_diameter,
    proportionality_conditions,
)
from .costs import KMEANS_COST, variance_decomposition
from .datasets import gaussian_with_outliers, load_csv, save_csv, sbm_critical_zeta, sbm_graph, SbmSpec, spectral_features
from .dpp import (
    MarginalKernelView,
    brute_force_dpp,
    brute_force_mdpp,
    dpp_marginals,
    elementary_polynomials,
    empirical_subset_law,
    mdpp_marginals,
    sample_dpp,
    sample_mdpp,
)
from .exceptions import (
    ConfigurationError,
    CsvFormatError,
    DegenerateDataError,
    NumericalDegeneracyError,
    ParameterError,
)
from .experiment import METHODS, config_from_sources, run_experiment, run_method, ExperimentConfig
from .kmeans import WeightedKMeans
from .rff import gaussian_kernel_matrix
from .samplers import AUTO
from .sensitivity import bicriteria_sensitivity_bound, one_means_sensitivity
from .validation import check_rng, substream


@click.group()
def cli():
    """Determinantal coreset sampling for k-means."""


def _load_or_generate(csv_path, header, labels, dataset, n, d, q, seed):
    if csv_path:
        return load_csv(csv_path, header=header, labels=labels)
    if dataset == "gaussian":
        return gaussian_with_outliers(n, d, q, check_rng(seed))
    raise ConfigurationError("provide --csv or --dataset gaussian")


@cli.command()
@click.option("--csv", "csv_path", type=click.Path(), default=None, help="Input points.")
@click.option("--header/--no-header", default=False, help="Skip the first CSV line.")
@click.option("--labels/--no-labels", default=False, help="Final CSV column is labels.")
@click.option("--dataset", type=click.Choice(["gaussian"]), default="gaussian",
              help="Generator when no CSV is given.")
@click.option("--n", type=int, default=1000)
@click.option("--d", type=int, default=2)
@click.option("--q", type=float, default=0.0, help="Outlier fraction for the generator.")
@click.option("--method", type=click.Choice(METHODS), default="mdpp")
@click.option("-m", "--m", "m", type=int, required=True, help="Sample size.")
@click.option("--s", default=AUTO, help="Gaussian bandwidth or 'auto'.")
@click.option("--r", default=AUTO, help="Fourier feature count or 'auto'.")
@click.option("--k", type=int, default=1, help="Centroid count (sensitivity_iid).")
@click.option("--sigma-star", type=float, default=1.0,
              help="Force-include points with sensitivity above this threshold.")
@click.option("--seed", type=int, default=0)
@click.option("--output", type=click.Path(), default="-")
def sample(csv_path, header, labels, dataset, n, d, q, method, m, s, r, k,
           sigma_star, seed, output):
    """Emit one weighted sample as CSV rows index,weight,pi."""
    X, _ = _load_or_generate(csv_path, header, labels, dataset, n, d, q, substream(seed, 0))
    config = ExperimentConfig(
        bandwidth=(AUTO if s == AUTO else float(s),),
        n_frequencies=AUTO if r == AUTO else int(r),
        estimator="voronoi" if method == "d2" else "importance",
        k=k, sigma_star=sigma_star, seed=seed,
    )
    ws, kind = run_method(method, X, m, config, substream(seed, 1))
    lines = ["index,weight,pi"]
    for i in range(ws.size):
        pi = "" if method == "d2" else repr(float(ws.inclusion_probs[i]))
        lines.append(f"{int(ws.indices[i])},{repr(float(ws.weights[i]))},{pi}")
    text = "\n".join(lines) + "\n"
    if output == "-":
        click.echo(text, nl=False)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


@cli.command()
@click.option("--csv", "csv_path", type=click.Path(), required=True)
@click.option("--header/--no-header", default=False)
@click.option("--labels/--no-labels", default=False, help="Final CSV column is labels.")
@click.option("--k", type=int, default=1)
@click.option("--epsilon", type=float, default=0.1)
@click.option("--delta", type=float, default=0.1)
@click.option("--mean-opt-cost", type=float, default=None,
              help="Mean optimal per-point cost; default: weighted k-means proxy.")
@click.option("--seed", type=int, default=0)
def bounds(csv_path, header, labels, k, epsilon, delta, mean_opt_cost, seed):
    """Print the sample-size bounds for the coreset property on a dataset.

    Inclusion probabilities are taken proportional to the sensitivities
    (their optimal shape); sensitivities are exact for k=1 and upper bounds
    otherwise, so the reported sizes are conservative for k > 1.
    """
    X, _ = load_csv(csv_path, header=header, labels=labels)
    n, d = X.shape
    rng = substream(seed, 0)
    profile = one_means_sensitivity(X) if k == 1 else bicriteria_sensitivity_bound(X, k, rng)
    rho = min_enclosing_diameter(X)
    if mean_opt_cost is None:
        fit = WeightedKMeans(n_clusters=k, n_restarts=3, random_state=rng).fit(X)
        mean_opt_cost = fit.inertia_ / n
    log_n = kmeans_covering_number_log(rho, epsilon, mean_opt_cost, k, d)
    inputs = BoundInputs(
        sigma=profile.sigma, pi=profile.sigma / profile.total, mu=1.0,
        epsilon=epsilon, delta=delta, log_n=log_n,
    )
    dpp = dpp_sample_size_bound(inputs)
    m_star = mdpp_sample_size_bound(inputs)
    report = proportionality_conditions(
        profile.sigma, np.clip(profile.sigma / profile.total, None, 1.0),
        epsilon, delta, log_n, profile.total,
    )
    click.echo(f"points={n} dim={d} k={k} epsilon={epsilon} delta={delta}")
    click.echo(f"sensitivity kind={profile.kind} total={profile.total:.6g} "
               f"max={profile.sigma.max():.6g}")
    click.echo(f"enclosing diameter={rho:.6g} mean_opt_cost={mean_opt_cost:.6g} "
               f"log_covering_number={log_n:.6g}")
    click.echo(f"dpp expected-size bound: mu1*={dpp.mu1:.6g} mu2*={dpp.mu2:.6g} "
               f"mu*={dpp.mu_star:.6g} (N*sigma_min>=1: {dpp.min_sensitivity_condition})")
    click.echo(f"mdpp size bound: m*={m_star:.6g}")
    click.echo(f"proportionality: alpha={report.alpha:.6g} beta={report.beta:.6g} "
               f"feasible={report.feasible}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Flat key = value config file; flags override it.")
@click.option("--dataset", type=click.Choice(["gaussian", "sbm", "csv"]), default=None)
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("--n", type=int, default=None)
@click.option("--d", type=int, default=None)
@click.option("--q", "outlier_fraction", type=float, default=None)
@click.option("--methods", default=None, help="Comma list from the roster.")
@click.option("--m-grid", default=None, help="Comma list of sample sizes.")
@click.option("--epsilon", type=float, default=None)
@click.option("--theta-draws", type=int, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--s", "bandwidth", default=None, help="Bandwidth grid (comma, or 'auto').")
@click.option("--r", "n_frequencies", default=None, help="Feature count or 'auto'.")
@click.option("--estimator", type=click.Choice(["importance", "voronoi"]), default=None)
@click.option("--k", type=int, default=None)
@click.option("--threads", type=int, default=None, help="Worker count (env DPPC_THREADS).")
@click.option("--lloyd-restarts", type=int, default=None)
@click.option("--ari/--no-ari", "compute_ari", default=None)
@click.option("--sigma-star", type=float, default=None)
@click.option("--output", type=click.Path(), default=None)
def experiment(config_path, **overrides):
    """Run the full sweep and write plot-ready result rows."""
    config = config_from_sources(config_path, overrides)
    rows = run_experiment(config)
    if not config.output:
        click.echo("method,m,s,r,seed,epsilon,estimator,success_rate,ari,wall_ms")
        for row in rows:
            click.echo(",".join(row.csv_fields()))


@cli.command()
@click.option("--dataset", type=click.Choice(["gaussian", "sbm"]), required=True)
@click.option("--n", type=int, default=1000)
@click.option("--d", type=int, default=2)
@click.option("--q", type=float, default=0.0)
@click.option("--blocks", type=int, default=2, help="SBM community count.")
@click.option("--zeta", type=float, default=None,
              help="SBM q2/q1 ratio; default: detectability threshold / 4.")
@click.option("--avg-degree", type=float, default=16.0)
@click.option("--features/--graph-only", default=True,
              help="For sbm, write spectral features (default) rather than nothing.")
@click.option("--seed", type=int, default=0)
@click.option("--output", type=click.Path(), required=True)
def datagen(dataset, n, d, q, blocks, zeta, avg_degree, features, seed, output):
    """Generate a dataset and write it as CSV (labels in the final column)."""
    rng = substream(seed, 0)
    if dataset == "gaussian":
        X, labels = gaussian_with_outliers(n, d, q, rng)
    else:
        if zeta is None:
            zeta = sbm_critical_zeta(avg_degree, blocks) / 4.0
        base = n // blocks
        sizes = tuple(base + (1 if i < n % blocks else 0) for i in range(blocks))
        adjacency, labels = sbm_graph(SbmSpec(sizes, zeta, avg_degree), rng)
        if not features:
            raise ConfigurationError("only spectral-feature output is supported")
        X = spectral_features(adjacency, blocks)
    save_csv(output, X, labels=labels)
    click.echo(f"wrote {X.shape[0]} points of dimension {X.shape[1]} to {output}")


def _validate_once(seed: int, draws: int, echo) -> bool:
    """Small-N statistical checks of the samplers against exhaustive oracles."""
    rng = substream(seed, 0)
    X = rng.normal(size=(6, 2))
    L = gaussian_kernel_matrix(X, 1.0)
    view = MarginalKernelView.from_l_ensemble(L)
    ok = True

    def report(name, passed, detail):
        nonlocal ok
        ok = ok and passed
        echo(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")

    # The 0.02 budget is calibrated for 2e5 draws; TV noise scales as 1/sqrt(draws).
    tv_budget = 0.02 * max(1.0, np.sqrt(200000.0 / draws))

    oracle = brute_force_dpp(L)
    law = empirical_subset_law(
        [tuple(sample_dpp(view, rng).indices) for _ in range(draws)]
    )
    tv = oracle.total_variation(law)
    report("dpp-subset-law", tv <= tv_budget, f"TV={tv:.4f} over {draws} draws")

    m = 2
    oracle_m = brute_force_mdpp(L, m)
    law_m = empirical_subset_law(
        [tuple(sample_mdpp(view, m, rng).indices) for _ in range(draws)]
    )
    tv_m = oracle_m.total_variation(law_m)
    report("mdpp-subset-law", tv_m <= tv_budget, f"TV={tv_m:.4f} over {draws} draws")

    diff = float(np.abs(mdpp_marginals(view, m) - oracle_m.marginals()).max())
    report("mdpp-marginals", diff <= 1e-9, f"max|pi - oracle|={diff:.2e}")
    diff_dpp = float(np.abs(dpp_marginals(view) - oracle.marginals()).max())
    report("dpp-marginals", diff_dpp <= 1e-9, f"max|pi - oracle|={diff_dpp:.2e}")

    theta = X[:1] + 0.3
    f = KMEANS_COST.per_point(X, theta)
    var_dpp, var_iid, _ = variance_decomposition(view, f)
    pi = dpp_marginals(view)
    mean = var = 0.0
    for subset, p in oracle.probabilities.items():
        est = float(np.sum(f[list(subset)] / pi[list(subset)])) if subset else 0.0
        mean += p * est
        var += p * est**2
    var -= mean**2
    l_total = float(f.sum())
    report("estimator-unbiased", abs(mean - l_total) <= 1e-9 * l_total,
           f"|E - L|={abs(mean - l_total):.2e}")
    report("variance-identity", abs(var - var_dpp) <= 1e-9 * max(var_iid, 1.0),
           f"|exhaustive - formula|={abs(var - var_dpp):.2e}")
    report("variance-dominance", var_dpp <= var_iid,
           f"var_dpp={var_dpp:.6g} <= var_iid={var_iid:.6g}")

    table = elementary_polynomials(np.array([1.0, 2.0, 3.0]), 2)
    e2 = float(np.exp(table[2, -1]))
    report("elementary-polynomials", abs(e2 - 11.0) <= 1e-10, f"e2(1,2,3)={e2}")
    return ok


@cli.command()
@click.option("--seed", type=int, default=0)
@click.option("--draws", type=int, default=50000,
              help="Sampler draws per statistical check.")
def validate(seed, draws):
    """Run the brute-force oracle suite; non-zero exit on failure."""
    if not _validate_once(seed, draws, click.echo):
        sys.exit(1)
    click.echo("all checks passed")


def main():
    try:
        cli(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(130)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except (ConfigurationError, ParameterError, DegenerateDataError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except NumericalDegeneracyError as exc:
        click.echo(f"numerical degeneracy: {exc}", err=True)
        sys.exit(3)
    except (CsvFormatError, OSError) as exc:
        click.echo(f"io error: {exc}", err=True)
        sys.exit(4)


if __name__ == "__main__":
    main()
