"""Configuration type definitions for copula-pce.

A scenario is represented by a tree of frozen dataclasses rooted at
``Scenario``.  Every pipeline stage receives the resolved ``Scenario``; no
stage reads files or environment variables for its settings.  To create a
modified copy, use ``dataclasses.replace()``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from copula_pce.config.defaults import (
    DEFAULT_BACKEND,
    DEFAULT_BINS,
    DEFAULT_CONDITION_LIMIT,
    DEFAULT_EIGEN_FLOOR,
    DEFAULT_ERROR_FLOOR,
    DEFAULT_NODE_BUDGET,
    DEFAULT_QUADRATURE_K,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    DEFAULT_SOLVER,
    DEFAULT_THREADS,
    SCENARIO_SCHEMA_VERSION,
)
from copula_pce.core.basis import MonomialFilter
from copula_pce.core.copula import JointModel, copula_new
from copula_pce.core.hashing import hash_json

if TYPE_CHECKING:
    from copula_pce.core.distributions import Marginal
    from copula_pce.core.pce import BidFunction
    from copula_pce.core.procurement import ProcurementSpec

__all__ = [
    "MonomialConfig",
    "QuadratureConfig",
    "RuntimeConfig",
    "Scenario",
    "ValidationConfig",
]


@dataclass(frozen=True)
class MonomialConfig:
    """Monomial set: total degree ν plus the grouping filter."""

    max_degree: int = 1
    groups: tuple[tuple[int, ...], ...] = ()
    keep_cross_terms: bool = True
    whitelist: tuple[tuple[int, ...], ...] = ()

    def to_filter(self) -> MonomialFilter | None:
        if not self.groups and self.keep_cross_terms and not self.whitelist:
            return None
        return MonomialFilter(self.groups, self.keep_cross_terms, self.whitelist)

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_degree": self.max_degree,
            "groups": [list(g) for g in self.groups],
            "keep_cross_terms": self.keep_cross_terms,
            "whitelist": [list(w) for w in self.whitelist],
        }


@dataclass(frozen=True)
class QuadratureConfig:
    k: int = DEFAULT_QUADRATURE_K
    node_budget: int = DEFAULT_NODE_BUDGET
    backend: str = DEFAULT_BACKEND

    def to_dict(self) -> dict[str, Any]:
        return {"k": self.k, "node_budget": self.node_budget, "backend": self.backend}


@dataclass(frozen=True)
class ValidationConfig:
    """Monte-Carlo settings: sample count per mode, seed, histogram bins."""

    n: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    bins: int = DEFAULT_BINS

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "seed": self.seed, "bins": self.bins}


@dataclass(frozen=True)
class RuntimeConfig:
    """Execution and numerical-safety settings that do not change the model."""

    threads: int = DEFAULT_THREADS
    solver: str = DEFAULT_SOLVER
    eigen_floor: float = DEFAULT_EIGEN_FLOOR
    condition_limit: float = DEFAULT_CONDITION_LIMIT
    enforce_condition_limit: bool = True
    error_floor: float = DEFAULT_ERROR_FLOOR

    def to_dict(self) -> dict[str, Any]:
        return {
            "threads": self.threads,
            "solver": self.solver,
            "eigen_floor": self.eigen_floor,
            "condition_limit": self.condition_limit,
            "enforce_condition_limit": self.enforce_condition_limit,
            "error_floor": self.error_floor,
        }


@dataclass(frozen=True)
class Scenario:
    """Immutable, fully validated scenario.

    Bids are ordered zone X first; ``procurement`` carries the matching
    bid counts and costs.
    """

    name: str
    marginals: tuple[Marginal, ...]
    correlation: tuple[tuple[float, ...], ...]
    bids: tuple[BidFunction, ...]
    procurement: ProcurementSpec
    monomials: MonomialConfig = field(default_factory=MonomialConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)
    description: str = ""

    @property
    def dim(self) -> int:
        return len(self.marginals)

    def model(self) -> JointModel:
        return JointModel(copula_new(np.asarray(self.correlation)), self.marginals)

    def to_dict(self) -> dict[str, Any]:
        proc = self.procurement
        return {
            "schema_version": SCENARIO_SCHEMA_VERSION,
            "name": self.name,
            "description": self.description,
            "dimension": self.dim,
            "marginals": [m.to_dict() for m in self.marginals],
            "correlation": [list(row) for row in self.correlation],
            "monomials": self.monomials.to_dict(),
            "quadrature": self.quadrature.to_dict(),
            "bids": [b.to_dict() for b in self.bids],
            "procurement": {
                "reserve_x": proc.reserve_x,
                "reserve_y": proc.reserve_y,
                "tie_xy": proc.tie_xy,
                "tie_yx": proc.tie_yx,
                "epsilon": proc.epsilon,
            },
            "validation": self.validation.to_dict(),
            "runtime": self.runtime.to_dict(),
        }

    def fingerprint(self) -> str:
        """SHA-256 over everything that shapes basis, coefficients and solution.

        Validation and runtime settings are left out, so re-validating with a
        new seed or thread count reuses the upstream artifacts.
        """
        data = self.to_dict()
        for key in ("validation", "runtime", "description"):
            data.pop(key)
        return hash_json(data)
