"""copula-pce: polynomial chaos expansion of reserve bids under Gaussian-copula
dependence, chance-constrained reserve procurement as a second-order cone
program, and Monte-Carlo validation of the procured point.
"""

from copula_pce._version import __version__
from copula_pce.config.loader import load_scenario
from copula_pce.config.types import Scenario
from copula_pce.core.basis import (
    MonomialFilter,
    OrthonormalBasis,
    build_basis,
    generate_monomials,
)
from copula_pce.core.copula import GaussianCopula, JointModel, copula_new, sample
from copula_pce.core.distributions import Beta, Marginal, Normal, Uniform
from copula_pce.core.pce import BidFunction, PceMatrix, combine, expand, expand_all, moments
from copula_pce.core.pipeline import run_all
from copula_pce.core.procurement import (
    ProcurementSolution,
    ProcurementSpec,
    assemble,
    quantile_pair,
    solve,
)
from copula_pce.core.progress import ProgressEvent
from copula_pce.core.quadrature import gauss_hermite, integrate_copula
from copula_pce.core.validation import ValidationReport, validate
from copula_pce.exceptions import (
    ArtifactIntegrityError,
    IllConditionedBasisError,
    IntegrandEvaluationError,
    NotPositiveDefiniteError,
    PceCancellationError,
    PceConfigError,
    PceDomainError,
    PceError,
    PceInfeasibleError,
    PceNumericalError,
    PceParameterError,
    PceResourceError,
    PceValidationError,
)

__all__ = [
    "ArtifactIntegrityError",
    "Beta",
    "BidFunction",
    "GaussianCopula",
    "IllConditionedBasisError",
    "IntegrandEvaluationError",
    "JointModel",
    "Marginal",
    "MonomialFilter",
    "Normal",
    "NotPositiveDefiniteError",
    "OrthonormalBasis",
    "PceCancellationError",
    "PceConfigError",
    "PceDomainError",
    "PceError",
    "PceInfeasibleError",
    "PceMatrix",
    "PceNumericalError",
    "PceParameterError",
    "PceResourceError",
    "PceValidationError",
    "ProcurementSolution",
    "ProcurementSpec",
    "ProgressEvent",
    "Scenario",
    "Uniform",
    "ValidationReport",
    "__version__",
    "assemble",
    "build_basis",
    "combine",
    "copula_new",
    "expand",
    "expand_all",
    "gauss_hermite",
    "generate_monomials",
    "integrate_copula",
    "load_scenario",
    "moments",
    "quantile_pair",
    "run_all",
    "sample",
    "solve",
    "validate",
]
