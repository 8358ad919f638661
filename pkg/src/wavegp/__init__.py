"""Gaussian processes on graphs with learned multi-scale spectral filters.

The package builds covariance operators from a normalized graph Laplacian by
shaping its spectrum with a bank of band-pass wavelets plus a low-pass term,
then learns the scales of that bank by marginal likelihood (regression) or a
variational bound (classification). Large graphs avoid eigendecomposition via
polynomial surrogates whose sample points can be weighted by an estimated
spectral density.
"""

__version__ = "0.1.0"

from .classify import (
    ClassPrediction,
    InducingSet,
    RejectionPoint,
    VariationalFitConfig,
    VariationalFitResult,
    VariationalState,
    WaveletGPClassifier,
    elbo,
    fit_variational,
    gaussian_elbo,
    predict_class,
    rejection_curve,
)
from .datasets import (
    NodeDataset,
    load_dataset,
    polynomial_feature_kernel,
    random_split,
    tfidf,
    write_bundle,
)
from .density import (
    DensityConfig,
    DensityEstimate,
    JacksonChebStep,
    density_weights,
    estimate_cdf,
    estimate_trace,
    jackson_cheb_step,
    jackson_damping,
    step_coefficients,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    emit_plot_data,
    run_classification,
    run_density,
    run_impulse,
    run_morlet_mismatch,
    run_scale_recovery,
    write_report,
)
from .filters import (
    FilterSpec,
    MotherWavelet,
    WaveletMatrix,
    combined_filter,
    evaluate_filter,
    exact_wavelet_matrix,
    filter_gradient,
    impulse_response,
    low_pass,
    mexican_hat,
    morlet,
)
from .graphs import (
    Graph,
    NormalizedLaplacian,
    SpectralDecomposition,
    build_graph,
    dirichlet_energy,
    eigendecompose,
    normalized_laplacian,
    parse_edge_list,
    read_edge_list,
    write_edge_list,
)
from .optim import AdamResult, adam_maximize
from .polyfit import (
    FitMode,
    PolynomialFilter,
    ProjectionMatrix,
    apply_polynomial,
    build_projection,
    chebyshev_fit,
    chebyshev_projection,
    coefficient_gradient,
    fit_polynomial,
    vandermonde,
)
from .regression import (
    FeatureKernel,
    OptimizationResult,
    PosteriorPrediction,
    WaveletGPModel,
    filter_mae,
    identity_kernel,
    log_marginal_likelihood,
    optimize_hyperparameters,
    polynomial_kernel,
    predict,
    prior_covariance,
)
from .synthetic import (
    LabelSample,
    MultiScaleSpec,
    default_multiscale_spec,
    generate_multiscale,
    sample_labels,
    split_nodes,
    write_labels_csv,
)

__all__ = [
    "__version__",
    # graphs
    "Graph", "NormalizedLaplacian", "SpectralDecomposition", "build_graph",
    "normalized_laplacian", "eigendecompose", "dirichlet_energy",
    "parse_edge_list", "read_edge_list", "write_edge_list",
    # filters
    "FilterSpec", "MotherWavelet", "WaveletMatrix", "mexican_hat", "morlet",
    "low_pass", "combined_filter", "evaluate_filter", "filter_gradient",
    "exact_wavelet_matrix", "impulse_response",
    # spectral density
    "DensityConfig", "DensityEstimate", "JacksonChebStep", "jackson_damping",
    "step_coefficients", "jackson_cheb_step", "estimate_trace", "estimate_cdf",
    "density_weights",
    # polynomial surrogates
    "FitMode", "ProjectionMatrix", "PolynomialFilter", "vandermonde",
    "build_projection", "chebyshev_projection", "fit_polynomial",
    "chebyshev_fit", "coefficient_gradient", "apply_polynomial",
    # regression
    "WaveletGPModel", "FeatureKernel", "identity_kernel", "polynomial_kernel",
    "PosteriorPrediction", "OptimizationResult", "log_marginal_likelihood",
    "optimize_hyperparameters", "predict", "prior_covariance", "filter_mae",
    # classification
    "WaveletGPClassifier", "VariationalState", "VariationalFitConfig",
    "VariationalFitResult", "InducingSet", "ClassPrediction", "RejectionPoint",
    "elbo", "fit_variational", "predict_class", "rejection_curve",
    "gaussian_elbo",
    # synthetic data
    "MultiScaleSpec", "LabelSample", "default_multiscale_spec",
    "generate_multiscale", "sample_labels", "split_nodes", "write_labels_csv",
    # datasets
    "NodeDataset", "load_dataset", "write_bundle", "tfidf",
    "polynomial_feature_kernel", "random_split",
    # optimization
    "AdamResult", "adam_maximize",
    # experiments
    "ExperimentConfig", "ExperimentReport", "run_scale_recovery",
    "run_morlet_mismatch", "run_classification", "run_density", "run_impulse",
    "emit_plot_data", "write_report",
]
