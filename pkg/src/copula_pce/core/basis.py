"""Orthonormal polynomial basis under the dependent joint PDF.

The basis is built in three steps:

1. :func:`generate_monomials` lists the exponent vectors of degree ≤ ν in
   graded order (constant first), optionally filtered by variable groups.
2. :func:`moment_table` precomputes E[ξ^(α+β)] for every pair of monomials.
   Each expectation only depends on the variables in the support of α+β, so
   it is integrated with :func:`~copula_pce.core.quadrature.integrate_copula`
   on that support alone.  Products sharing α+β are integrated once.
3. :func:`gram_matrix` reads G from the table and :func:`orthonormalize`
   whitens it with B = R⁻¹, where G = R Rᵀ is the lower Cholesky factor.
   Row l of B holds the monomial coefficients of ψ_l.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy import linalg

from copula_pce.core.progress import ProgressEvent
from copula_pce.core.quadrature import (
    DEFAULT_NODE_BUDGET,
    check_node_budget,
    integrate_copula,
)
from copula_pce.exceptions import (
    IllConditionedBasisError,
    PceCancellationError,
    PceConfigError,
    PceParameterError,
)

if TYPE_CHECKING:
    import threading
    from collections.abc import Callable, Iterable, Mapping, Sequence

    from copula_pce.core.copula import JointModel

__all__ = [
    "DEFAULT_CONDITION_LIMIT",
    "DEFAULT_EIGEN_FLOOR",
    "MomentTable",
    "Monomial",
    "MonomialFilter",
    "OrthonormalBasis",
    "build_basis",
    "evaluate_basis",
    "evaluate_monomials",
    "generate_monomials",
    "gram_matrix",
    "monomial_expectations",
    "moment_table",
    "orthonormalize",
    "power_product",
    "sampled_gram",
]

logger = logging.getLogger(__name__)

DEFAULT_EIGEN_FLOOR: float = 1e-12
DEFAULT_CONDITION_LIMIT: float = 1e12

Exponents = tuple[int, ...]


# ---------------------------------------------------------------------------
# Monomials
# ---------------------------------------------------------------------------


def power_product(
    points: np.ndarray,
    powers: Iterable[tuple[int, int]],
    columns: Mapping[int, int] | None = None,
) -> np.ndarray:
    """Evaluate ∏ ξ_var^power at every row of *points*.

    *columns* maps a variable index to its column in *points*; without it
    the variable index is the column.
    """
    pts = np.atleast_2d(points)
    out = np.ones(pts.shape[0])
    for var, power in powers:
        if power == 0:
            continue
        col = var if columns is None else columns[var]
        out = out * pts[:, col] ** power
    return out


def _graded_key(exponents: Exponents) -> tuple[int, tuple[int, ...]]:
    """Sort key: total degree, then descending lexicographic order."""
    return (sum(exponents), tuple(-e for e in exponents))


@dataclass(frozen=True, order=False)
class Monomial:
    """A multivariate monomial ξ^α given by its exponent vector α."""

    exponents: Exponents

    def __post_init__(self) -> None:
        exps = tuple(int(e) for e in self.exponents)
        if any(e < 0 for e in exps):
            raise PceParameterError(f"monomial exponents must be >= 0, got {exps}")
        object.__setattr__(self, "exponents", exps)

    @property
    def d(self) -> int:
        return len(self.exponents)

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, e in enumerate(self.exponents) if e)

    def powers(self) -> tuple[tuple[int, int], ...]:
        """Sparse (variable, power) pairs."""
        return tuple((i, e) for i, e in enumerate(self.exponents) if e)

    def __mul__(self, other: Monomial) -> Monomial:
        if self.d != other.d:
            raise PceParameterError(f"cannot multiply monomials of dimension {self.d} and {other.d}")
        return Monomial(tuple(a + b for a, b in zip(self.exponents, other.exponents, strict=True)))

    def evaluate(self, points: np.ndarray, columns: Mapping[int, int] | None = None) -> np.ndarray:
        return power_product(points, self.powers(), columns)

    def label(self) -> str:
        if self.degree == 0:
            return "1"
        parts = [f"x{i}" if e == 1 else f"x{i}^{e}" for i, e in self.powers()]
        return "*".join(parts)

    def __str__(self) -> str:
        return self.label()


@dataclass(frozen=True)
class MonomialFilter:
    """Drops monomials that couple variables from different groups.

    Attributes:
        groups: Index lists of variables that belong together (for example
            the two variables of one location).  Variables named in no group
            form singleton groups.
        keep_cross_terms: When false only pure powers and the constant
            survive, regardless of grouping.
        whitelist: Exponent vectors kept unconditionally.
    """

    groups: tuple[tuple[int, ...], ...] = ()
    keep_cross_terms: bool = True
    whitelist: tuple[Exponents, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "groups", tuple(tuple(int(i) for i in g) for g in self.groups))
        object.__setattr__(
            self, "whitelist", tuple(tuple(int(e) for e in w) for w in self.whitelist)
        )
        seen: set[int] = set()
        for group in self.groups:
            overlap = seen.intersection(group)
            if overlap:
                raise PceConfigError(f"variable(s) {sorted(overlap)} appear in more than one group")
            seen.update(group)

    def _group_of(self, var: int) -> tuple[int, ...] | int:
        for group in self.groups:
            if var in group:
                return group
        return var

    def accepts(self, monomial: Monomial) -> bool:
        if monomial.degree <= 1 or monomial.exponents in self.whitelist:
            return True
        support = monomial.support
        if len(support) == 1:
            return True
        if not self.keep_cross_terms:
            return False
        return len({self._group_of(v) for v in support}) == 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "groups": [list(g) for g in self.groups],
            "keep_cross_terms": self.keep_cross_terms,
            "whitelist": [list(w) for w in self.whitelist],
        }


def generate_monomials(
    d: int,
    nu: int,
    monomial_filter: MonomialFilter | None = None,
) -> tuple[Monomial, ...]:
    """All monomials in *d* variables of total degree ≤ *nu* that pass the filter.

    Order is graded: by total degree, then descending lexicographic within a
    degree, so the constant comes first followed by ξ_0, ξ_1, ...

    Raises:
        PceParameterError: ``d < 1`` or ``nu < 1``.
        PceConfigError: The filter removed every monomial.
    """
    if d < 1 or nu < 1:
        raise PceParameterError(f"need d >= 1 and nu >= 1, got d={d}, nu={nu}")
    out: list[Monomial] = []
    for degree in range(nu + 1):
        for combo in itertools.combinations_with_replacement(range(d), degree):
            exps = [0] * d
            for var in combo:
                exps[var] += 1
            mono = Monomial(tuple(exps))
            if monomial_filter is None or monomial_filter.accepts(mono):
                out.append(mono)
    if not out:
        raise PceConfigError(f"monomial filter left no monomials (d={d}, nu={nu})")
    return tuple(out)


def evaluate_monomials(monomials: Sequence[Monomial], points: np.ndarray) -> np.ndarray:
    """``n x M`` matrix of monomial values at the rows of *points*."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.column_stack([m.evaluate(pts) for m in monomials])


# ---------------------------------------------------------------------------
# Moment table
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MomentTable:
    """Expectations E[ξ^α] keyed by exponent vector, computed at rule order ``k``."""

    d: int
    k: int
    backend: str
    values: Mapping[Exponents, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", MappingProxyType(dict(self.values)))

    def __getitem__(self, exponents: Exponents) -> float:
        try:
            return self.values[tuple(exponents)]
        except KeyError:
            raise KeyError(f"moment table has no entry for exponents {tuple(exponents)}") from None

    def __contains__(self, exponents: object) -> bool:
        return exponents in self.values

    def __len__(self) -> int:
        return len(self.values)

    @property
    def max_degree(self) -> int:
        return max((sum(e) for e in self.values), default=0)

    def compatible(self, d: int, k: int, backend: str) -> bool:
        return (self.d, self.k, self.backend) == (d, k, backend)

    def to_dict(self) -> dict[str, Any]:
        keys = sorted(self.values, key=_graded_key)
        return {
            "d": self.d,
            "k": self.k,
            "backend": self.backend,
            "entries": [{"exponents": list(e), "value": self.values[e]} for e in keys],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> MomentTable:
        values = {tuple(int(x) for x in e["exponents"]): float(e["value"]) for e in data["entries"]}
        return cls(d=int(data["d"]), k=int(data["k"]), backend=str(data["backend"]), values=values)


def _check_cancelled(cancel_event: threading.Event | None) -> None:
    if cancel_event is not None and cancel_event.is_set():
        raise PceCancellationError("moment computation cancelled")


def monomial_expectations(
    keys: Iterable[Exponents],
    model: JointModel,
    k: int,
    *,
    node_budget: int = DEFAULT_NODE_BUDGET,
    backend: str = "hermite",
    threads: int = 1,
    known: MomentTable | None = None,
    progress_callback: Callable[[ProgressEvent], None] | None = None,
    cancel_event: threading.Event | None = None,
    phase: str = "moments",
) -> MomentTable:
    """Compute E[ξ^α] for every exponent vector in *keys*.

    Entries already present in a compatible *known* table are reused.  The
    remaining integrals run on up to *threads* workers; results are merged in
    graded key order so the table does not depend on scheduling.

    Raises:
        PceResourceError: The support of some key exceeds the node budget;
            the message names the monomial.
        PceCancellationError: *cancel_event* was set between integrals.
    """
    d = model.dim
    wanted = sorted({tuple(int(x) for x in e) for e in keys}, key=_graded_key)
    for exps in wanted:
        if len(exps) != d:
            raise PceParameterError(f"exponent vector {exps} does not match dimension {d}")

    values: dict[Exponents, float] = {}
    if known is not None and known.compatible(d, k, backend):
        values.update({e: known.values[e] for e in wanted if e in known.values})
    todo = [e for e in wanted if e not in values]

    # Fail fast on the budget before any integral runs.
    for exps in todo:
        mono = Monomial(exps)
        check_node_budget(k, len(mono.support), node_budget, what=f"monomial product {mono.label()}")

    dims_histogram = Counter(len(Monomial(e).support) for e in todo)
    if todo:
        logger.info(
            "Integrating %d monomial expectations (k=%d, effective dimensions %s)",
            len(todo),
            k,
            ", ".join(f"d_I={dim}: {n} x {k**dim} nodes" for dim, n in sorted(dims_histogram.items())),
        )

    def _one(exps: Exponents) -> float:
        _check_cancelled(cancel_event)
        mono = Monomial(exps)
        if mono.degree == 0:
            return 1.0
        dims = mono.support
        columns = {var: col for col, var in enumerate(dims)}
        value = integrate_copula(
            lambda pts: mono.evaluate(pts, columns),
            dims,
            model.copula,
            model.marginals,
            k,
            node_budget=node_budget,
            backend=backend,
        )
        logger.debug("E[%s] = %.17g", mono.label(), value)
        return value

    def _report(done: int, exps: Exponents) -> None:
        if progress_callback is not None:
            progress_callback(
                ProgressEvent(
                    phase=phase,
                    items_total=len(todo),
                    items_completed=done,
                    current=Monomial(exps).label(),
                )
            )

    if threads > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for done, (exps, value) in enumerate(zip(todo, pool.map(_one, todo), strict=True), 1):
                values[exps] = value
                _report(done, exps)
    else:
        for done, exps in enumerate(todo, 1):
            values[exps] = _one(exps)
            _report(done, exps)

    ordered = {e: values[e] for e in wanted}
    return MomentTable(d=d, k=k, backend=backend, values=ordered)


def moment_table(
    monomials: Sequence[Monomial],
    model: JointModel,
    k: int,
    *,
    node_budget: int = DEFAULT_NODE_BUDGET,
    backend: str = "hermite",
    threads: int = 1,
    progress_callback: Callable[[ProgressEvent], None] | None = None,
    cancel_event: threading.Event | None = None,
) -> MomentTable:
    """Precompute E[m_a · m_b] for all unordered pairs of *monomials*.

    The table is keyed by the product exponent vector α+β, so pairs with the
    same product share one integral.
    """
    if not monomials:
        raise PceParameterError("monomial set is empty")
    if monomials[0].d != model.dim:
        raise PceParameterError(
            f"monomials have dimension {monomials[0].d}, model has {model.dim}"
        )
    products = {
        (a * b).exponents for i, a in enumerate(monomials) for b in monomials[i:]
    }
    return monomial_expectations(
        products,
        model,
        k,
        node_budget=node_budget,
        backend=backend,
        threads=threads,
        progress_callback=progress_callback,
        cancel_event=cancel_event,
    )


# ---------------------------------------------------------------------------
# Gram matrix and whitening
# ---------------------------------------------------------------------------


def gram_matrix(monomials: Sequence[Monomial], table: MomentTable) -> np.ndarray:
    """G_ab = E[m_a m_b] read from *table* by exponent addition.

    Raises:
        KeyError: *table* lacks a needed product (it was built for another set).
    """
    size = len(monomials)
    gram = np.empty((size, size))
    for a in range(size):
        for b in range(a, size):
            gram[a, b] = gram[b, a] = table[(monomials[a] * monomials[b]).exponents]
    return gram


def _first_failing_pivot(gram: np.ndarray, eigen_floor: float, condition_limit: float) -> int:
    """Index of the first leading principal minor that is singular or ill-conditioned."""
    size = gram.shape[0]
    for m in range(1, size + 1):
        eig = np.linalg.eigvalsh(gram[:m, :m])
        if eig[0] <= eigen_floor or eig[-1] > condition_limit * eig[0]:
            return m - 1
    return size - 1


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Orthonormal polynomials ψ_l = Σ_j B[l, j] m_j under the joint PDF."""

    monomials: tuple[Monomial, ...]
    coeffs: np.ndarray
    gram: np.ndarray
    gram_residual: float
    condition_number: float

    @property
    def size(self) -> int:
        return len(self.monomials)

    @property
    def d(self) -> int:
        return self.monomials[0].d

    @property
    def nu(self) -> int:
        return max(m.degree for m in self.monomials)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """``n x M`` matrix of ψ_l at the rows of *points*."""
        return evaluate_monomials(self.monomials, points) @ self.coeffs.T

    def to_dict(self) -> dict[str, Any]:
        return {
            "monomials": [list(m.exponents) for m in self.monomials],
            "coeffs": self.coeffs,
            "gram": self.gram,
            "gram_residual": self.gram_residual,
            "condition_number": self.condition_number,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> OrthonormalBasis:
        monomials = tuple(Monomial(tuple(e)) for e in data["monomials"])
        coeffs = np.asarray(data["coeffs"], dtype=float)
        gram = np.asarray(data["gram"], dtype=float)
        size = len(monomials)
        if coeffs.shape != (size, size) or gram.shape != (size, size):
            raise PceConfigError(
                f"basis matrices must be {size}x{size}, got {coeffs.shape} and {gram.shape}"
            )
        return cls(
            monomials=monomials,
            coeffs=coeffs,
            gram=gram,
            gram_residual=float(data["gram_residual"]),
            condition_number=float(data["condition_number"]),
        )


def orthonormalize(
    gram: np.ndarray,
    monomials: Sequence[Monomial],
    *,
    eigen_floor: float = DEFAULT_EIGEN_FLOOR,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
    enforce_condition_limit: bool = True,
) -> OrthonormalBasis:
    """Whiten the Gram matrix: B = R⁻¹ with G = R Rᵀ, R lower-triangular.

    Raises:
        PceParameterError: *gram* is not a symmetric M x M matrix.
        IllConditionedBasisError: G is not safely positive definite, or its
            condition number exceeds *condition_limit* while enforcement is
            on.  ``pivot`` names the first monomial to consider dropping.
    """
    g = np.asarray(gram, dtype=float)
    size = len(monomials)
    if g.shape != (size, size):
        raise PceParameterError(f"Gram matrix must be {size}x{size}, got {g.shape}")
    if not np.allclose(g, g.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(g))))):
        raise PceParameterError("Gram matrix is not symmetric")
    g = 0.5 * (g + g.T)

    eig = np.linalg.eigvalsh(g)
    condition = float(eig[-1] / eig[0]) if eig[0] > 0.0 else math.inf

    def _fail(reason: str, limit: float) -> IllConditionedBasisError:
        pivot = _first_failing_pivot(g, eigen_floor, limit)
        return IllConditionedBasisError(
            f"{reason}; monomial {monomials[pivot].label()} (index {pivot}) is nearly "
            f"dependent on the monomials before it",
            pivot=pivot,
            condition=condition,
        )

    if eig[0] <= eigen_floor:
        raise _fail(f"Gram matrix smallest eigenvalue {eig[0]:.3g} <= floor {eigen_floor:g}", math.inf)
    if condition > condition_limit:
        if enforce_condition_limit:
            raise _fail(
                f"Gram condition number {condition:.3g} exceeds limit {condition_limit:g}",
                condition_limit,
            )
        logger.warning(
            "Gram condition number %.3g exceeds limit %g; continuing", condition, condition_limit
        )

    try:
        chol = linalg.cholesky(g, lower=True)
    except linalg.LinAlgError as exc:
        raise _fail("Cholesky factorization of the Gram matrix failed", math.inf) from exc

    coeffs = linalg.solve_triangular(chol, np.eye(size), lower=True)
    residual = float(np.max(np.abs(coeffs @ g @ coeffs.T - np.eye(size))))
    logger.info(
        "Orthonormal basis: M=%d, condition %.3g, gram residual %.3g", size, condition, residual
    )
    return OrthonormalBasis(
        monomials=tuple(monomials),
        coeffs=coeffs,
        gram=g,
        gram_residual=residual,
        condition_number=condition,
    )


def evaluate_basis(basis: OrthonormalBasis, xi: Any) -> np.ndarray:
    """ψ(ξ) for one point (length-M vector) or for the rows of an array (n x M)."""
    arr = np.asarray(xi, dtype=float)
    values = basis.evaluate(arr)
    return values[0] if arr.ndim == 1 else values


def build_basis(
    monomials: Sequence[Monomial],
    model: JointModel,
    k: int,
    *,
    node_budget: int = DEFAULT_NODE_BUDGET,
    backend: str = "hermite",
    eigen_floor: float = DEFAULT_EIGEN_FLOOR,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
    enforce_condition_limit: bool = True,
    threads: int = 1,
    progress_callback: Callable[[ProgressEvent], None] | None = None,
    cancel_event: threading.Event | None = None,
) -> tuple[OrthonormalBasis, MomentTable]:
    """moment_table -> gram_matrix -> orthonormalize."""
    table = moment_table(
        monomials,
        model,
        k,
        node_budget=node_budget,
        backend=backend,
        threads=threads,
        progress_callback=progress_callback,
        cancel_event=cancel_event,
    )
    basis = orthonormalize(
        gram_matrix(monomials, table),
        monomials,
        eigen_floor=eigen_floor,
        condition_limit=condition_limit,
        enforce_condition_limit=enforce_condition_limit,
    )
    return basis, table


def sampled_gram(basis: OrthonormalBasis, samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Empirical Gram matrix of ψ over *samples* and the standard error of each entry."""
    psi = basis.evaluate(samples)
    n = psi.shape[0]
    if n < 2:
        raise PceParameterError(f"need at least 2 samples, got {n}")
    size = psi.shape[1]
    mean = np.empty((size, size))
    stderr = np.empty((size, size))
    for a in range(size):
        prod = psi[:, a : a + 1] * psi[:, a:]
        mean[a, a:] = mean[a:, a] = prod.mean(axis=0)
        stderr[a, a:] = stderr[a:, a] = prod.std(axis=0, ddof=1) / math.sqrt(n)
    return mean, stderr
