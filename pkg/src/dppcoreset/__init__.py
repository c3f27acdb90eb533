"""Coresets for k-means through determinantal point process sampling.

Negatively correlated samples cover a dataset with less redundancy than
independent draws; this package builds fixed-size determinantal samples
from a Gaussian similarity kernel (through random Fourier features at
scale), weights them for unbiased cost estimation, and provides the
sensitivity formulas, sample-size bound calculators, validation oracles,
and experiment harness that go with them.
"""

from .bounds import (
    BoundInputs,
    DppSampleBound,
    ProportionalityReport,
    dpp_sample_size_bound,
    kmeans_covering_number_log,
    mdpp_sample_size_bound,
    min_enclosing_diameter,
    proportionality_conditions,
)
from .costs import (
    CostModel,
    KMEANS_COST,
    coreset_success_probability,
    draw_centroid_sets,
    estimate_correlated,
    estimate_iid,
    kmeans_cost,
    variance_decomposition,
    voronoi_weights,
    weighted_cost_estimate,
)
from .datasets import (
    SbmSpec,
    gaussian_with_outliers,
    load_csv,
    save_csv,
    sbm_critical_zeta,
    sbm_graph,
    spectral_features,
)
from .dpp import (
    MarginalKernelView,
    SubsetDistribution,
    WeightedSample,
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
from .exceptions import (
    ConfigurationError,
    CsvFormatError,
    DegenerateDataError,
    NumericalDegeneracyError,
    ParameterError,
)
from .experiment import (
    ExperimentConfig,
    ResultRow,
    run_experiment,
    run_method,
)
from .kmeans import (
    ClusteringResult,
    WeightedKMeans,
    adjusted_rand_index,
    assign_labels,
    d2_seeding,
    kmeans_point_costs,
    weighted_lloyd,
)
from .rff import (
    FeatureMatrix,
    FrequencyMatrix,
    SpectralPair,
    draw_frequencies,
    dual_matrix,
    feature_matrix,
    gaussian_kernel_entry,
    gaussian_kernel_matrix,
    mean_interdistance,
    reconstruct_eigenvectors,
    sym_eig,
)
from .samplers import (
    FourierFeatureMap,
    GaussianDPPSampler,
    MDPPCoresetSampler,
    sample_mdpp_coreset,
)
from .sensitivity import (
    OutlierSplit,
    SensitivityProfile,
    bicriteria_sensitivity_bound,
    one_means_sensitivity,
    split_outliers,
)

__version__ = "0.1.0"
