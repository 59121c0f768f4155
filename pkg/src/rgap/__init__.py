"""Rearrangement and spectral-gap comparison toolkit for discrete metric measure spaces."""

from .model_space import ModelSpace, normalization
from .mms import (
    DiscreteMMS,
    SampledFunction,
    build_model_interval,
    build_suspension,
    build_truncated_model,
    dirichlet_energy,
    edge_gradient,
    measure,
    model_space_of,
    perimeter,
    slope,
)
from .rearrangement import (
    DistributionFunction,
    RearrangedFunction,
    distribution,
    generalized_inverse,
    lipschitz_constant,
    lp_norm,
    lp_norm_df,
    rearrange,
)
from .functionals import (
    DeficitReport,
    coarea_residual,
    distribution_derivative_residual,
    improved_ps_report,
    level_energy_density,
    level_energy_integral,
    levy_gromov_deficit,
    model_energy,
    polya_szego_report,
)
from .eigensolver import (
    EigenResult,
    SolverFailure,
    lambda_domain,
    lambda_model,
    lambda_shooting,
    uniqueness_probe,
)

__all__ = [
    "ModelSpace",
    "normalization",
    "DiscreteMMS",
    "SampledFunction",
    "build_model_interval",
    "build_truncated_model",
    "build_suspension",
    "model_space_of",
    "measure",
    "perimeter",
    "slope",
    "edge_gradient",
    "dirichlet_energy",
    "DistributionFunction",
    "RearrangedFunction",
    "distribution",
    "generalized_inverse",
    "rearrange",
    "lp_norm",
    "lp_norm_df",
    "lipschitz_constant",
    "DeficitReport",
    "model_energy",
    "level_energy_density",
    "level_energy_integral",
    "polya_szego_report",
    "improved_ps_report",
    "coarea_residual",
    "distribution_derivative_residual",
    "levy_gromov_deficit",
    "EigenResult",
    "SolverFailure",
    "lambda_model",
    "lambda_shooting",
    "lambda_domain",
    "uniqueness_probe",
]

__version__ = "0.1.0"
