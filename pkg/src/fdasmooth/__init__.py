"""Local-linear smoothing estimators for functional data.

Mean, covariance and error-variance estimation from sparse or dense noisy
curves, functional principal components, simulation generators and a
Monte Carlo convergence-rate harness.
"""

from .dataset import (
    Curve,
    EvaluationGrid,
    FunctionalDataset,
    check_functional_data,
    harmonic_mean,
    load_csv,
    make_grid,
    save_csv,
    save_json,
)
from .estimators import FunctionalPCA, LocalLinearCovariance, LocalLinearMean
from .exceptions import FDAError
from .fpca import EigenSystem, align_sign, decompose, eigen_errors, reconstruct
from .kernels import EPANECHNIKOV, KERNELS, TRIANGULAR, UNIFORM, KernelSpec, get_kernel
from .ratestudy import RateFormulas, RateStudyReport, Scenario, run_scenario, theoretical_exponent
from .simgen import (
    BrownianModel,
    DesignSpec,
    KLModelSpec,
    RandomM,
    brownian_spec,
    generate,
    simulation1_spec,
    true_eigensystem,
)
from .smooth1d import estimate_mean, estimate_variance_function
from .smooth2d import estimate_covariance, estimate_raw_covariance, estimate_sigma2

__version__ = "0.1.0"

__all__ = [
    "BrownianModel",
    "Curve",
    "DesignSpec",
    "EPANECHNIKOV",
    "EigenSystem",
    "EvaluationGrid",
    "FDAError",
    "FunctionalDataset",
    "FunctionalPCA",
    "KERNELS",
    "KLModelSpec",
    "KernelSpec",
    "LocalLinearCovariance",
    "LocalLinearMean",
    "RandomM",
    "RateFormulas",
    "RateStudyReport",
    "Scenario",
    "TRIANGULAR",
    "UNIFORM",
    "align_sign",
    "brownian_spec",
    "check_functional_data",
    "decompose",
    "eigen_errors",
    "estimate_covariance",
    "estimate_mean",
    "estimate_raw_covariance",
    "estimate_sigma2",
    "estimate_variance_function",
    "generate",
    "get_kernel",
    "harmonic_mean",
    "load_csv",
    "make_grid",
    "reconstruct",
    "run_scenario",
    "save_csv",
    "save_json",
    "simulation1_spec",
    "theoretical_exponent",
    "true_eigensystem",
]
