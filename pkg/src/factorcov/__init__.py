"""Sparse idiosyncratic covariance estimation for approximate factor models.

Pipeline: principal-components factor fit, residual sample covariance, then
entrywise soft thresholding at studentized plug-in levels that adapt to each
entry's scale. Companion Monte Carlo experiments check the threshold's
simultaneous coverage and the estimator's error-decay rates, and a
deterministic eigencomponent sweep checks population-level recovery.
"""

from factorcov.factors import FactorFit, fit_pc, residual_sample_covariance, residual_term_error
from factorcov.identification import (
    IdentificationReport,
    PopulationModel,
    identification_error,
    identification_sweep,
    population_y_covariance,
    standard_pervasive_model,
    tail_eigen_approximation,
)
from factorcov.kernels import backend_name
from factorcov.linalg import (
    EigenDecomposition,
    banded_matrix,
    frobenius_norm,
    max_norm,
    operator_norm,
    sym_eigen,
)
from factorcov.simulation import (
    Banded,
    BlockDiagonal,
    DGPSpec,
    ExperimentReport,
    MomentDiagnostics,
    RandomSparse,
    SimulatedData,
    coverage_experiment,
    generate_sigma_u,
    moment_diagnostics,
    rate_experiment,
    replication_rng,
    simulate,
    sparsity_measure,
)
from factorcov.thresholding import (
    CovarianceEstimate,
    CrossValidation,
    FixedConstant,
    PlugIn,
    cv_threshold_constant,
    estimate_covariance,
    inv_norm_cdf,
    plugin_thresholds,
    regime_guards,
    soft_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "Banded",
    "BlockDiagonal",
    "CovarianceEstimate",
    "CrossValidation",
    "DGPSpec",
    "EigenDecomposition",
    "ExperimentReport",
    "FactorFit",
    "FixedConstant",
    "IdentificationReport",
    "MomentDiagnostics",
    "PlugIn",
    "PopulationModel",
    "RandomSparse",
    "SimulatedData",
    "backend_name",
    "banded_matrix",
    "coverage_experiment",
    "cv_threshold_constant",
    "estimate_covariance",
    "fit_pc",
    "frobenius_norm",
    "generate_sigma_u",
    "identification_error",
    "identification_sweep",
    "inv_norm_cdf",
    "max_norm",
    "moment_diagnostics",
    "operator_norm",
    "plugin_thresholds",
    "population_y_covariance",
    "rate_experiment",
    "regime_guards",
    "replication_rng",
    "residual_sample_covariance",
    "residual_term_error",
    "simulate",
    "soft_threshold",
    "sparsity_measure",
    "standard_pervasive_model",
    "sym_eigen",
    "tail_eigen_approximation",
]
