"""Compiled default configuration values for copula-pce.

A scenario file only needs the model itself (marginals, correlation, bids,
procurement limits); every other setting falls back to these values.
"""

from __future__ import annotations

from copula_pce.core.basis import DEFAULT_CONDITION_LIMIT, DEFAULT_EIGEN_FLOOR
from copula_pce.core.pce import DEFAULT_ERROR_FLOOR
from copula_pce.core.procurement import DEFAULT_SOLVER
from copula_pce.core.quadrature import DEFAULT_NODE_BUDGET

__all__ = [
    "DEFAULT_BACKEND",
    "DEFAULT_BINS",
    "DEFAULT_CONDITION_LIMIT",
    "DEFAULT_EIGEN_FLOOR",
    "DEFAULT_EPSILON",
    "DEFAULT_ERROR_FLOOR",
    "DEFAULT_NODE_BUDGET",
    "DEFAULT_QUADRATURE_K",
    "DEFAULT_SAMPLES",
    "DEFAULT_SECTIONS",
    "DEFAULT_SEED",
    "DEFAULT_SOLVER",
    "DEFAULT_THREADS",
    "SCENARIO_SCHEMA_VERSION",
]

SCENARIO_SCHEMA_VERSION = 1

# ---------------------------------------------------------------------------
# Scalar defaults
# ---------------------------------------------------------------------------

DEFAULT_QUADRATURE_K = 8
DEFAULT_BACKEND = "hermite"
DEFAULT_SAMPLES = 100_000
DEFAULT_SEED = 1729
DEFAULT_BINS = 50
DEFAULT_THREADS = 1
DEFAULT_EPSILON = 0.01

# ---------------------------------------------------------------------------
# Section defaults (layer 1 of the loader)
# ---------------------------------------------------------------------------

DEFAULT_SECTIONS: dict[str, dict[str, object]] = {
    "monomials": {
        "max_degree": 1,
        "groups": [],
        "keep_cross_terms": True,
        "whitelist": [],
    },
    "quadrature": {
        "k": DEFAULT_QUADRATURE_K,
        "node_budget": DEFAULT_NODE_BUDGET,
        "backend": DEFAULT_BACKEND,
    },
    "procurement": {
        "epsilon": DEFAULT_EPSILON,
    },
    "validation": {
        "n": DEFAULT_SAMPLES,
        "seed": DEFAULT_SEED,
        "bins": DEFAULT_BINS,
    },
    "runtime": {
        "threads": DEFAULT_THREADS,
        "solver": DEFAULT_SOLVER,
        "eigen_floor": DEFAULT_EIGEN_FLOOR,
        "condition_limit": DEFAULT_CONDITION_LIMIT,
        "enforce_condition_limit": True,
        "error_floor": DEFAULT_ERROR_FLOOR,
    },
}
