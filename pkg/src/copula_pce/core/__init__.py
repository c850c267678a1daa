"""Numerical core of copula-pce.

This sub-package contains the marginal distributions, the Gaussian copula,
tensor-grid quadrature, basis construction, bid expansion, the procurement
SOCP, Monte-Carlo validation, artifact serialization, and the pipeline hub
that chains them.
"""

from copula_pce.core.basis import (
    Monomial,
    MonomialFilter,
    MomentTable,
    OrthonormalBasis,
    build_basis,
    evaluate_basis,
    generate_monomials,
    gram_matrix,
    moment_table,
    orthonormalize,
    sampled_gram,
)
from copula_pce.core.copula import (
    GaussianCopula,
    JointModel,
    copula_density,
    copula_new,
    latent_scores,
    marginalize,
    sample,
    sample_independent,
)
from copula_pce.core.distributions import (
    Beta,
    Marginal,
    Normal,
    Uniform,
    marginal_cdf,
    marginal_from_dict,
    marginal_inv_cdf,
    marginal_pdf,
    std_normal_cdf,
    std_normal_inv_cdf,
    std_normal_pdf,
)
from copula_pce.core.pce import (
    BidFunction,
    PceMatrix,
    PolyTerm,
    combine,
    expand,
    expand_all,
    expansion_error,
    moments,
)
from copula_pce.core.pipeline import (
    RunResult,
    StageResult,
    run_all,
    run_basis,
    run_expand,
    run_solve,
    run_validate,
)
from copula_pce.core.procurement import (
    ProcurementSolution,
    ProcurementSpec,
    QuantilePair,
    analytic_quantile_check,
    assemble,
    quantile_pair,
    solve,
)
from copula_pce.core.progress import ProgressEvent
from copula_pce.core.quadrature import (
    QuadratureRule1D,
    TensorGrid,
    gauss_hermite,
    gauss_legendre_unit,
    integrate_copula,
    tensor_grid,
)
from copula_pce.core.validation import (
    ValidationReport,
    compare_expansion,
    summary_table,
    tight_constraints,
    validate,
)

__all__ = [
    "Beta",
    "BidFunction",
    "GaussianCopula",
    "JointModel",
    "Marginal",
    "MomentTable",
    "Monomial",
    "MonomialFilter",
    "Normal",
    "OrthonormalBasis",
    "PceMatrix",
    "PolyTerm",
    "ProcurementSolution",
    "ProcurementSpec",
    "ProgressEvent",
    "QuadratureRule1D",
    "QuantilePair",
    "RunResult",
    "StageResult",
    "TensorGrid",
    "Uniform",
    "ValidationReport",
    "analytic_quantile_check",
    "assemble",
    "build_basis",
    "combine",
    "compare_expansion",
    "copula_density",
    "copula_new",
    "evaluate_basis",
    "expand",
    "expand_all",
    "expansion_error",
    "gauss_hermite",
    "gauss_legendre_unit",
    "generate_monomials",
    "gram_matrix",
    "integrate_copula",
    "latent_scores",
    "marginal_cdf",
    "marginal_from_dict",
    "marginal_inv_cdf",
    "marginal_pdf",
    "marginalize",
    "moment_table",
    "moments",
    "orthonormalize",
    "quantile_pair",
    "run_all",
    "run_basis",
    "run_expand",
    "run_solve",
    "run_validate",
    "sample",
    "sample_independent",
    "sampled_gram",
    "solve",
    "std_normal_cdf",
    "std_normal_inv_cdf",
    "std_normal_pdf",
    "summary_table",
    "tensor_grid",
    "tight_constraints",
    "validate",
]
