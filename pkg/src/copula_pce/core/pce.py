"""Polynomial chaos coefficients of bid functions.

A bid E_i(ξ) is a sparse polynomial.  Its projection onto the orthonormal
basis is a_l = Σ_j B[l, j] E[q m_j], and every E[q m_j] expands into monomial
expectations E[ξ^(α_t + β_j)], one per term of q.  Those are integrated on
their own support only and cached in a :class:`MomentTable`, so the
projection shares integrals with the Gram matrix whenever the rule order
matches.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from copula_pce.core.basis import (
    MomentTable,
    Monomial,
    OrthonormalBasis,
    monomial_expectations,
    power_product,
)
from copula_pce.core.copula import sample
from copula_pce.core.quadrature import DEFAULT_NODE_BUDGET, MAX_RULE_ORDER
from copula_pce.exceptions import PceConfigError, PceParameterError

if TYPE_CHECKING:
    import threading
    from collections.abc import Callable, Mapping, Sequence

    from copula_pce.core.copula import JointModel
    from copula_pce.core.progress import ProgressEvent

__all__ = [
    "DEFAULT_ERROR_FLOOR",
    "ZONES",
    "BidFunction",
    "PceMatrix",
    "PolyTerm",
    "combine",
    "default_order",
    "expand",
    "expand_all",
    "expansion_error",
    "moments",
    "relative_error",
]

logger = logging.getLogger(__name__)

DEFAULT_ERROR_FLOOR: float = 1e-12
ZONES: tuple[str, ...] = ("X", "Y")


# ---------------------------------------------------------------------------
# Bid functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolyTerm:
    """coeff · ∏ ξ_var^power over the sparse ``powers`` pairs."""

    coeff: float
    powers: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        merged: dict[int, int] = {}
        for var, power in self.powers:
            var, power = int(var), int(power)
            if var < 0 or power < 0:
                raise PceConfigError(f"term powers must be non-negative, got ({var}, {power})")
            if var in merged:
                raise PceConfigError(f"variable {var} appears twice in one term")
            if power:
                merged[var] = power
        object.__setattr__(self, "coeff", float(self.coeff))
        object.__setattr__(self, "powers", tuple(sorted(merged.items())))
        if not math.isfinite(self.coeff):
            raise PceConfigError(f"term coefficient must be finite, got {self.coeff!r}")

    @property
    def degree(self) -> int:
        return sum(p for _, p in self.powers)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.powers)

    def exponents(self, d: int) -> tuple[int, ...]:
        exps = [0] * d
        for var, power in self.powers:
            exps[var] = power
        return tuple(exps)


@dataclass(frozen=True)
class BidFunction:
    """Random available power E_i(ξ) of one reserve bid."""

    id: str
    terms: tuple[PolyTerm, ...]
    zone: str = "X"
    cost: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise PceConfigError(f"bid {self.id!r} needs at least one term")
        if self.zone not in ZONES:
            raise PceConfigError(f"bid {self.id!r} zone must be 'X' or 'Y', got {self.zone!r}")
        if not (math.isfinite(self.cost) and self.cost >= 0.0):
            raise PceConfigError(f"bid {self.id!r} cost must be >= 0, got {self.cost!r}")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted({v for t in self.terms for v in t.support}))

    @property
    def degree(self) -> int:
        return max(t.degree for t in self.terms)

    def evaluate(self, points: np.ndarray, columns: Mapping[int, int] | None = None) -> np.ndarray:
        """E_i at every row of *points* (columns indexed by variable unless *columns* is given)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        total = np.zeros(pts.shape[0])
        for term in self.terms:
            total = total + term.coeff * power_product(pts, term.powers, columns)
        return total

    def scaled(self, factor: float) -> BidFunction:
        terms = tuple(PolyTerm(t.coeff * factor, t.powers) for t in self.terms)
        return BidFunction(self.id, terms, self.zone, self.cost)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "zone": self.zone,
            "cost": self.cost,
            "terms": [
                {"coeff": t.coeff, "powers": [[v, p] for v, p in t.powers]} for t in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> BidFunction:
        terms = tuple(
            PolyTerm(float(t["coeff"]), tuple((int(v), int(p)) for v, p in t.get("powers", [])))
            for t in data["terms"]
        )
        return cls(
            id=str(data["id"]),
            terms=terms,
            zone=str(data.get("zone", "X")),
            cost=float(data.get("cost", 1.0)),
        )


# ---------------------------------------------------------------------------
# Coefficient matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PceMatrix:
    """Expansion coefficients of Z bids: ``a0`` (length Z) and ``A`` (L x Z)."""

    a0: np.ndarray
    A: np.ndarray
    bid_ids: tuple[str, ...] = field(default_factory=tuple)
    basis_ref: str = ""

    def __post_init__(self) -> None:
        a0 = np.asarray(self.a0, dtype=float).reshape(-1)
        mat = np.asarray(self.A, dtype=float)
        if mat.ndim != 2 or mat.shape[1] != a0.shape[0]:
            raise PceParameterError(
                f"A must have {a0.shape[0]} columns to match a0, got shape {mat.shape}"
            )
        ids = tuple(self.bid_ids) or tuple(f"bid{j}" for j in range(a0.shape[0]))
        if len(ids) != a0.shape[0]:
            raise PceParameterError(f"{len(ids)} bid ids for {a0.shape[0]} columns")
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "A", mat)
        object.__setattr__(self, "bid_ids", ids)

    @property
    def n_bids(self) -> int:
        return int(self.a0.shape[0])

    def full(self) -> np.ndarray:
        """M x Z matrix with a0 as its first row."""
        return np.vstack([self.a0, self.A])

    def column(self, j: int) -> np.ndarray:
        return self.full()[:, j]

    def to_dict(self) -> dict[str, Any]:
        return {
            "basis_ref": self.basis_ref,
            "bid_ids": list(self.bid_ids),
            "a0": self.a0,
            "A": self.A,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> PceMatrix:
        a0 = np.asarray(data["a0"], dtype=float)
        mat = np.asarray(data["A"], dtype=float).reshape(-1, a0.shape[0])
        return cls(a0=a0, A=mat, bid_ids=tuple(data["bid_ids"]), basis_ref=str(data["basis_ref"]))


# ---------------------------------------------------------------------------
# Projection
# ---------------------------------------------------------------------------


def default_order(q: BidFunction, basis: OrthonormalBasis) -> int:
    """k = ceil((deg q + ν) / 2) + 1, exact for latent-polynomial integrands."""
    return min(MAX_RULE_ORDER, math.ceil((q.degree + basis.nu) / 2) + 1)


def _check_bid(q: BidFunction, d: int) -> None:
    bad = [v for v in q.support if v >= d]
    if bad:
        raise PceParameterError(f"bid {q.id!r} uses variable(s) {bad} outside 0..{d - 1}")


def _product_keys(q: BidFunction, basis: OrthonormalBasis) -> list[tuple[int, ...]]:
    d = basis.d
    return [
        (Monomial(t.exponents(d)) * m).exponents for t in q.terms for m in basis.monomials
    ]


def _project(q: BidFunction, basis: OrthonormalBasis, table: MomentTable) -> np.ndarray:
    d = basis.d
    proj = np.empty(basis.size)
    for j, mono in enumerate(basis.monomials):
        proj[j] = math.fsum(
            t.coeff * table[(Monomial(t.exponents(d)) * mono).exponents] for t in q.terms
        )
    return basis.coeffs @ proj


def expand(
    q: BidFunction,
    basis: OrthonormalBasis,
    model: JointModel,
    k: int | None = None,
    *,
    node_budget: int = DEFAULT_NODE_BUDGET,
    backend: str = "hermite",
    table: MomentTable | None = None,
    threads: int = 1,
    cancel_event: threading.Event | None = None,
) -> np.ndarray:
    """Length-M coefficient vector a_l = E[q ψ_l].

    Each monomial expectation is integrated on its own support; *table*
    supplies already computed expectations at the same rule order.

    Raises:
        PceParameterError: Dimension mismatch between *q*, *basis*, *model*.
        PceResourceError: A monomial product exceeds the node budget.
        IntegrandEvaluationError: A non-finite integrand value.
    """
    if basis.d != model.dim:
        raise PceParameterError(f"basis dimension {basis.d} != model dimension {model.dim}")
    _check_bid(q, basis.d)
    order = default_order(q, basis) if k is None else k
    needed = monomial_expectations(
        _product_keys(q, basis),
        model,
        order,
        node_budget=node_budget,
        backend=backend,
        threads=threads,
        known=table,
        cancel_event=cancel_event,
        phase="projection",
    )
    return _project(q, basis, needed)


def expand_all(
    bids: Sequence[BidFunction],
    basis: OrthonormalBasis,
    model: JointModel,
    k: int | None = None,
    *,
    node_budget: int = DEFAULT_NODE_BUDGET,
    backend: str = "hermite",
    table: MomentTable | None = None,
    threads: int = 1,
    basis_ref: str = "",
    progress_callback: Callable[[ProgressEvent], None] | None = None,
    cancel_event: threading.Event | None = None,
) -> PceMatrix:
    """Expand every bid and stack the coefficients into a :class:`PceMatrix`.

    With an explicit *k* all bids share one pass over the union of their
    monomial products; otherwise each bid uses its :func:`default_order`.
    """
    if not bids:
        raise PceParameterError("no bids to expand")
    if basis.d != model.dim:
        raise PceParameterError(f"basis dimension {basis.d} != model dimension {model.dim}")
    for q in bids:
        _check_bid(q, basis.d)

    if k is not None:
        keys = [key for q in bids for key in _product_keys(q, basis)]
        shared = monomial_expectations(
            keys,
            model,
            k,
            node_budget=node_budget,
            backend=backend,
            threads=threads,
            known=table,
            progress_callback=progress_callback,
            cancel_event=cancel_event,
            phase="projection",
        )
        columns = [_project(q, basis, shared) for q in bids]
    else:
        columns = [
            expand(
                q,
                basis,
                model,
                node_budget=node_budget,
                backend=backend,
                table=table,
                threads=threads,
                cancel_event=cancel_event,
            )
            for q in bids
        ]

    full = np.column_stack(columns)
    for q, col in zip(bids, columns, strict=True):
        mean, sigma = moments(col)
        logger.info("Bid %s: mean %.6g, sigma %.6g", q.id, mean, sigma)
    return PceMatrix(a0=full[0], A=full[1:], bid_ids=tuple(q.id for q in bids), basis_ref=basis_ref)


# ---------------------------------------------------------------------------
# Moments and weighted sums
# ---------------------------------------------------------------------------


def moments(coeffs: Any) -> tuple[float, float]:
    """(mean, sigma) of an expansion: a_0 and ‖a_1..a_L‖₂.

    sigma is a standard deviation, not a variance.
    """
    a = np.asarray(coeffs, dtype=float).reshape(-1)
    if a.shape[0] < 1:
        raise PceParameterError("coefficient vector is empty")
    return float(a[0]), float(np.linalg.norm(a[1:]))


def combine(weights: Any, pce: PceMatrix) -> np.ndarray:
    """Coefficients of Σ_j z_j E_j: the full coefficient matrix times *weights*."""
    z = np.asarray(weights, dtype=float).reshape(-1)
    if z.shape[0] != pce.n_bids:
        raise PceParameterError(f"got {z.shape[0]} weights for {pce.n_bids} bids")
    return pce.full() @ z


# ---------------------------------------------------------------------------
# Expansion error
# ---------------------------------------------------------------------------


def relative_error(
    true: np.ndarray, approx: np.ndarray, floor: float = DEFAULT_ERROR_FLOOR
) -> np.ndarray:
    """|true - approx| / max(|true|, floor), element-wise."""
    return np.abs(true - approx) / np.maximum(np.abs(true), floor)


def expansion_error(
    q: BidFunction,
    coeffs: Any,
    basis: OrthonormalBasis,
    model: JointModel,
    n: int,
    seed: int,
    *,
    floor: float = DEFAULT_ERROR_FLOOR,
    samples: np.ndarray | None = None,
) -> float:
    """Maximum relative error of the expansion over *n* copula samples."""
    pts = sample(model, n, seed) if samples is None else samples
    approx = basis.evaluate(pts) @ np.asarray(coeffs, dtype=float)
    return float(np.max(relative_error(q.evaluate(pts), approx, floor)))
