"""Tensor-grid quadrature under the Gaussian-copula joint PDF.

One-dimensional Gauss rules come from the Golub-Welsch eigen-decomposition
of the Jacobi matrix of the three-term recurrence:

* probabilist Hermite (weight = standard normal PDF, weights sum to 1),
* Legendre mapped to the unit interval (weight 1, weights sum to 1).

:func:`integrate_copula` evaluates E[g(ξ)] over the variables ``dims`` only:
the Σ-submatrix of those variables is extracted and factored, the tensor
Hermite nodes are colored with its Cholesky factor and pushed through
F⁻¹(Φ(·)).  The Legendre backend integrates g(F⁻¹(u)) c(u) on the unit cube
instead.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import linalg, special

from copula_pce.core.copula import PROBABILITY_CLAMP, copula_density, marginalize
from copula_pce.exceptions import (
    IntegrandEvaluationError,
    PceParameterError,
    PceResourceError,
)

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from copula_pce.core.copula import GaussianCopula
    from copula_pce.core.distributions import Marginal

__all__ = [
    "DEFAULT_NODE_BUDGET",
    "MAX_RULE_ORDER",
    "QuadratureRule1D",
    "TensorGrid",
    "check_node_budget",
    "gauss_hermite",
    "gauss_legendre_unit",
    "integrate_copula",
    "tensor_grid",
]

logger = logging.getLogger(__name__)

MAX_RULE_ORDER: int = 64
DEFAULT_NODE_BUDGET: int = 10_000_000


# ---------------------------------------------------------------------------
# Data classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadratureRule1D:
    """Nodes and weights of a one-dimensional Gauss rule."""

    nodes: np.ndarray
    weights: np.ndarray
    family: str

    @property
    def k(self) -> int:
        return int(self.nodes.shape[0])


@dataclass(frozen=True, eq=False)
class TensorGrid:
    """Cartesian product grid: ``nodes`` is N x d_I, ``weights`` has length N = k**d_I."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def dim(self) -> int:
        return int(self.nodes.shape[1])


# ---------------------------------------------------------------------------
# One-dimensional rules (Golub-Welsch)
# ---------------------------------------------------------------------------


def _check_order(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise PceParameterError(f"rule order must be an integer, got {k!r}")
    if not 1 <= k <= MAX_RULE_ORDER:
        raise PceParameterError(f"rule order k must be in [1, {MAX_RULE_ORDER}], got {k}")


def _golub_welsch(diagonal: np.ndarray, off_diagonal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and normalized weights from a symmetric tridiagonal Jacobi matrix.

    Nodes are the eigenvalues.  Weights are the Christoffel function
    w_i = 1 / Σ_n p_n(x_i)² of the orthonormal recurrence, so tail weights
    of high-order rules keep full relative precision.
    """
    nodes = linalg.eigvalsh_tridiagonal(diagonal, off_diagonal)
    p_prev = np.zeros_like(nodes)
    p_cur = np.ones_like(nodes)
    total = np.ones_like(nodes)
    for n, b_next in enumerate(off_diagonal):
        b_cur = off_diagonal[n - 1] if n > 0 else 0.0
        p_prev, p_cur = p_cur, ((nodes - diagonal[n]) * p_cur - b_cur * p_prev) / b_next
        total += p_cur * p_cur
    weights = 1.0 / total
    return nodes, weights / math.fsum(weights)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def gauss_hermite(k: int) -> QuadratureRule1D:
    """k-point probabilist Gauss-Hermite rule; exact for degree ≤ 2k-1 against φ.

    Raises:
        PceParameterError: *k* outside [1, 64].
    """
    _check_order(k)
    if k == 1:
        return QuadratureRule1D(_frozen(np.zeros(1)), _frozen(np.ones(1)), "hermite")
    # He_{n+1} = x He_n - n He_{n-1}: zero diagonal, off-diagonal sqrt(n).
    nodes, weights = _golub_welsch(np.zeros(k), np.sqrt(np.arange(1.0, k)))
    # The rule is symmetric about 0; enforce it exactly.
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    if k % 2 == 1:
        nodes[k // 2] = 0.0
    return QuadratureRule1D(_frozen(nodes), _frozen(weights), "hermite")


def gauss_legendre_unit(k: int) -> QuadratureRule1D:
    """k-point Gauss-Legendre rule on [0, 1] with unit weight function.

    Raises:
        PceParameterError: *k* outside [1, 64].
    """
    _check_order(k)
    if k == 1:
        return QuadratureRule1D(_frozen(np.full(1, 0.5)), _frozen(np.ones(1)), "legendre")
    n = np.arange(1.0, k)
    nodes, weights = _golub_welsch(np.zeros(k), n / np.sqrt(4.0 * n * n - 1.0))
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return QuadratureRule1D(_frozen(0.5 * (nodes + 1.0)), _frozen(weights), "legendre")


# ---------------------------------------------------------------------------
# Tensor grids
# ---------------------------------------------------------------------------


def check_node_budget(k: int, d_i: int, budget: int, *, what: str = "") -> int:
    """Return N = k**d_I, raising when it exceeds *budget*."""
    n_nodes = k**d_i
    if n_nodes > budget:
        label = f" for {what}" if what else ""
        raise PceResourceError(
            f"tensor grid{label} needs N = {k}^{d_i} = {n_nodes} nodes, "
            f"exceeding the node budget of {budget}",
            nodes=n_nodes,
            budget=budget,
        )
    return n_nodes


def tensor_grid(
    rule: QuadratureRule1D,
    d_i: int,
    *,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> TensorGrid:
    """Cartesian product of *rule* with itself *d_i* times, row-major order.

    Raises:
        PceParameterError: *d_i* is negative.
        PceResourceError: k**d_i exceeds *node_budget*.
    """
    if d_i < 0:
        raise PceParameterError(f"grid dimension must be >= 0, got {d_i}")
    check_node_budget(rule.k, d_i, node_budget)
    if d_i == 0:
        return TensorGrid(_frozen(np.zeros((1, 0))), _frozen(np.ones(1)))
    axes = np.meshgrid(*([rule.nodes] * d_i), indexing="ij")
    nodes = np.stack([a.reshape(-1) for a in axes], axis=1)
    weights = rule.weights
    for _ in range(d_i - 1):
        weights = np.outer(weights, rule.weights).reshape(-1)
    return TensorGrid(_frozen(nodes), _frozen(weights))


# ---------------------------------------------------------------------------
# Copula integration (dimension-reduced)
# ---------------------------------------------------------------------------


def _physical_from_uniform(marginals: Sequence[Marginal], u: np.ndarray) -> np.ndarray:
    u = np.clip(u, PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
    xi = np.empty_like(u)
    for j, marginal in enumerate(marginals):
        xi[:, j] = marginal.inv_cdf(u[:, j])
    return xi


def _physical_from_latent(marginals: Sequence[Marginal], y: np.ndarray) -> np.ndarray:
    """F⁻¹(Φ(y)) per column; y > 0 goes through Φ(-y) and the upper quantile."""
    tail = np.clip(special.ndtr(-np.abs(y)), PROBABILITY_CLAMP, 0.5)
    upper = y > 0.0
    xi = np.empty_like(y)
    for j, marginal in enumerate(marginals):
        up = upper[:, j]
        xi[~up, j] = marginal.inv_cdf(tail[~up, j])
        xi[up, j] = marginal.inv_sf(tail[up, j])
    return xi


def _evaluate(g: Callable[[np.ndarray], np.ndarray], xi: np.ndarray) -> np.ndarray:
    values = np.asarray(g(xi), dtype=float).reshape(-1)
    if values.shape[0] != xi.shape[0]:
        raise PceParameterError(
            f"integrand returned {values.shape[0]} values for {xi.shape[0]} nodes"
        )
    bad = ~np.isfinite(values)
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        node = xi[first].tolist()
        raise IntegrandEvaluationError(
            f"integrand is not finite at node {first} (ξ = {node}): {values[first]!r}",
            node=node,
        )
    return values


def integrate_copula(
    g: Callable[[np.ndarray], np.ndarray],
    dims: Sequence[int],
    copula: GaussianCopula,
    marginals: Sequence[Marginal],
    k: int,
    *,
    node_budget: int = DEFAULT_NODE_BUDGET,
    backend: str = "hermite",
) -> float:
    """Approximate E[g(ξ_dims)] under the Gaussian-copula joint PDF.

    *g* is vectorised: it receives an ``N x len(dims)`` array whose columns
    follow the order of *dims* and returns N values.  *marginals* is the full
    list of d marginals; only those of *dims* are used.

    Returns Σ_n w_n g(F⁻¹(Φ(L z_n))) with L the Cholesky factor of the
    extracted submatrix Σ_dims, summed in row-major node order with
    ``math.fsum``.

    Raises:
        PceParameterError: Invalid *dims*, *k* or *backend*.
        PceResourceError: k**len(dims) exceeds *node_budget*.
        NotPositiveDefiniteError: The submatrix cannot be factored.
        IntegrandEvaluationError: *g* returned a non-finite value.
    """
    idx = [int(i) for i in dims]
    if len(marginals) != copula.dim:
        raise PceParameterError(
            f"got {len(marginals)} marginals for a {copula.dim}-dimensional copula"
        )
    sub = marginalize(copula, idx) if idx else None
    sub_marginals = [marginals[i] for i in idx]
    d_i = len(idx)

    if backend == "hermite":
        grid = tensor_grid(gauss_hermite(k), d_i, node_budget=node_budget)
        if d_i == 0:
            xi = grid.nodes
        else:
            y = grid.nodes @ sub.chol.T
            xi = _physical_from_latent(sub_marginals, y)
        weights = grid.weights
    elif backend == "legendre":
        grid = tensor_grid(gauss_legendre_unit(k), d_i, node_budget=node_budget)
        if d_i == 0:
            xi = grid.nodes
            weights = grid.weights
        else:
            xi = _physical_from_uniform(sub_marginals, grid.nodes)
            weights = grid.weights * copula_density(sub, grid.nodes)
    else:
        raise PceParameterError(f"backend must be 'hermite' or 'legendre', got {backend!r}")

    values = _evaluate(g, xi)
    result = math.fsum((weights * values).tolist())
    logger.debug("integrate_copula dims=%s k=%d N=%d -> %.17g", idx, k, grid.size, result)
    return result
