"""Edge statistics of determinantal and random-matrix models.

Kernels interpolating between the soft (Airy) edge and the exponential
(Poisson) edge, their Fredholm determinants, exact samplers, and the
convergence experiments tying them together.
"""

__version__ = "0.1.0"

from .dpp import (CountDistribution, PointConfiguration, Rho1Estimate,
                  empirical_rho1, sample_grand_canonical, sample_poisson_exp,
                  sample_shifted_airy_max, von_koch_check)
from .empirical import (dkw_epsilon, ecdf, ks_statistic, ks_two_sample,
                        poisson_binomial, tv_distance)
from .errors import (AccuracyError, ContourError, CutoffViolation, DomainError,
                     ResourceError, SamplerError, TrendFailure)
from .contour import deformed_density, deformed_kernel_matrix
from .fredholm import (NystromConfig, auto_config, clear_cache, expected_count,
                       fermi_airy_cdf, fermi_airy_cdf_rescaled, fredholm_det,
                       operator_spectrum, tracy_widom_cdf)
from .kernels import (KernelHandle, SpectralKernel, airy_kernel,
                      airy_kernel_handle, bulk_kernel, bulk_kernel_approx,
                      correlation_rho, deformed_handle, deformed_kernel,
                      exp_airy_identity_lhs, exp_airy_identity_rhs,
                      fermi_airy_handle, fermi_airy_kernel, fermi_airy_log_f,
                      fermi_airy_rescaled, fermi_hermite_kernel, gue_kernel,
                      gue_spectral)
from .limits import (ConvergenceTable, check_bulk_scaling,
                     check_crossover_edge_scaling, check_edge_cdf_limits,
                     check_edge_kernel_limits, check_finite_kernel_limits,
                     check_poisson_edge_scaling)
from .quadrature import QuadratureRule
from .rmt import (CenteringData, DeformedEdgeReport, DeformedModel, DiagLaw,
                  GumbelMaxReport, centering, deformed_edge_experiment,
                  edge_rescale, gue_eigs_tridiag, gumbel_max_experiment,
                  r_of_n, sample_deformed_max, sample_gue_eigs, solve_wc,
                  tw_gauss_convolution_cdf)
from .specfun import (GumbelScaling, HermiteBasis, airy_ai, gumbel_cdf,
                      gumbel_scaling, hermite_psi, logistic_cdf,
                      mehler_closed_form)

__all__ = [
    "AccuracyError", "ContourError", "CutoffViolation", "DomainError",
    "ResourceError", "SamplerError", "TrendFailure",
    "GumbelScaling", "HermiteBasis", "airy_ai", "gumbel_cdf", "gumbel_scaling",
    "hermite_psi", "logistic_cdf", "mehler_closed_form",
    "QuadratureRule",
    "KernelHandle", "SpectralKernel", "airy_kernel", "airy_kernel_handle",
    "bulk_kernel", "bulk_kernel_approx", "correlation_rho",
    "deformed_density", "deformed_handle", "deformed_kernel",
    "deformed_kernel_matrix",
    "exp_airy_identity_lhs", "exp_airy_identity_rhs", "fermi_airy_handle",
    "fermi_airy_kernel", "fermi_airy_log_f", "fermi_airy_rescaled",
    "fermi_hermite_kernel", "gue_kernel", "gue_spectral",
    "NystromConfig", "auto_config", "expected_count", "fermi_airy_cdf",
    "fermi_airy_cdf_rescaled", "fredholm_det", "clear_cache", "operator_spectrum",
    "tracy_widom_cdf",
    "CountDistribution", "PointConfiguration", "Rho1Estimate",
    "empirical_rho1", "sample_grand_canonical", "sample_poisson_exp",
    "sample_shifted_airy_max", "von_koch_check",
    "dkw_epsilon", "ecdf", "ks_statistic", "ks_two_sample",
    "poisson_binomial", "tv_distance",
    "CenteringData", "DeformedEdgeReport", "DeformedModel", "DiagLaw",
    "GumbelMaxReport", "centering", "deformed_edge_experiment",
    "edge_rescale", "gue_eigs_tridiag", "gumbel_max_experiment", "r_of_n",
    "sample_deformed_max", "sample_gue_eigs", "solve_wc",
    "tw_gauss_convolution_cdf",
    "ConvergenceTable", "check_bulk_scaling", "check_crossover_edge_scaling",
    "check_edge_cdf_limits", "check_edge_kernel_limits",
    "check_finite_kernel_limits", "check_poisson_edge_scaling",
    "__version__",
]
