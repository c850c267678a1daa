"""Gaussian copula model for copula-pce.

A ``GaussianCopula`` holds a validated correlation matrix Σ and its cached
lower Cholesky factor L.  A ``JointModel`` pairs the copula with one marginal
per variable, giving the joint PDF p(ξ) = c(u) · ∏ f_i(ξ_i) with u_i = F_i(ξ_i).

Sampling follows the latent construction: z ~ N(0, I) drawn through Φ⁻¹ of
uniforms from a counter-based Philox stream, y = L z, u = Φ(y), ξ_i = F_i⁻¹(u_i).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy import linalg, special

from copula_pce.core.distributions import Marginal
from copula_pce.exceptions import (
    NotPositiveDefiniteError,
    PceDomainError,
    PceParameterError,
    PceValidationError,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

__all__ = [
    "PROBABILITY_CLAMP",
    "GaussianCopula",
    "JointModel",
    "copula_density",
    "copula_new",
    "latent_scores",
    "marginalize",
    "sample",
    "sample_independent",
]

logger = logging.getLogger(__name__)

PROBABILITY_CLAMP: float = 1e-15
"""Uniform scores are clamped to [PROBABILITY_CLAMP, 1 - PROBABILITY_CLAMP] before F⁻¹."""

_SYMMETRY_TOL = 1e-10


# ---------------------------------------------------------------------------
# Data classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaussianCopula:
    """Gaussian copula with correlation matrix ``sigma`` and Cholesky factor ``chol``.

    Construct through :func:`copula_new`, which validates Σ.  Arrays are
    marked read-only so instances can be shared between threads.
    """

    sigma: np.ndarray
    chol: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.sigma.shape[0])

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.sigma, np.eye(self.dim)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GaussianCopula):
            return NotImplemented
        return np.array_equal(self.sigma, other.sigma)

    def __hash__(self) -> int:
        return hash(self.sigma.tobytes())


@dataclass(frozen=True)
class JointModel:
    """Joint distribution of ξ: a Gaussian copula plus one marginal per variable."""

    copula: GaussianCopula
    marginals: tuple[Marginal, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if len(self.marginals) != self.copula.dim:
            raise PceParameterError(
                f"joint model needs {self.copula.dim} marginals, got {len(self.marginals)}"
            )

    @property
    def dim(self) -> int:
        return self.copula.dim

    def marginalize(self, dims: Sequence[int]) -> JointModel:
        """Restrict the model to the variables in *dims* (in that order)."""
        sub = marginalize(self.copula, dims)
        return JointModel(sub, tuple(self.marginals[i] for i in dims))

    def with_identity_copula(self) -> JointModel:
        """The independence model with the same marginals."""
        return JointModel(copula_new(np.eye(self.dim)), self.marginals)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def copula_new(sigma: Any) -> GaussianCopula:
    """Validate a correlation matrix and factor it.

    Raises:
        PceValidationError: Non-square, non-finite, asymmetric beyond 1e-10,
            or a diagonal entry different from 1.
        NotPositiveDefiniteError: Cholesky factorization failed; the
            exception carries the smallest eigenvalue.
    """
    mat = np.asarray(sigma, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] == 0:
        raise PceValidationError(f"correlation matrix must be square, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise PceValidationError("correlation matrix contains non-finite entries")
    asym = float(np.max(np.abs(mat - mat.T)))
    if asym > _SYMMETRY_TOL:
        raise PceValidationError(f"correlation matrix is not symmetric (max |Σ - Σᵀ| = {asym:g})")
    diag = np.diag(mat)
    if not np.all(diag == 1.0):
        bad = int(np.flatnonzero(diag != 1.0)[0])
        raise PceValidationError(
            f"correlation matrix diagonal must be exactly 1, got Σ[{bad},{bad}] = {diag[bad]!r}"
        )

    # Exact symmetry keeps LAPACK and the density evaluation consistent.
    mat = 0.5 * (mat + mat.T)
    try:
        chol = linalg.cholesky(mat, lower=True)
    except linalg.LinAlgError as exc:
        min_eig = float(np.linalg.eigvalsh(mat)[0])
        raise NotPositiveDefiniteError(
            f"correlation matrix is not positive definite (smallest eigenvalue {min_eig:.6g})",
            min_eigenvalue=min_eig,
        ) from exc
    return GaussianCopula(sigma=_freeze(mat), chol=_freeze(chol))


def marginalize(c: GaussianCopula, dims: Sequence[int]) -> GaussianCopula:
    """Copula of the variables in *dims*, Cholesky recomputed on the submatrix.

    Raises:
        PceParameterError: Repeated or out-of-range indices.
    """
    idx = [int(i) for i in dims]
    if len(set(idx)) != len(idx):
        raise PceParameterError(f"dims must be distinct, got {idx}")
    if any(i < 0 or i >= c.dim for i in idx):
        raise PceParameterError(f"dims {idx} out of range for a {c.dim}-dimensional copula")
    if idx == list(range(c.dim)):
        return c
    return copula_new(c.sigma[np.ix_(idx, idx)])


# ---------------------------------------------------------------------------
# Density
# ---------------------------------------------------------------------------


def copula_density(c: GaussianCopula, u: Any) -> Any:
    """Gaussian copula density c_Σ(u) = φ_Σ(Φ⁻¹(u)) / ∏ φ(Φ⁻¹(u_i)).

    *u* is a length-d vector or an ``n x d`` array.

    Raises:
        PceDomainError: Some u_i is not strictly inside (0, 1).
        PceParameterError: Trailing dimension differs from the copula's.
    """
    arr = np.asarray(u, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    if pts.shape[1] != c.dim:
        raise PceParameterError(f"u has {pts.shape[1]} components, copula has {c.dim}")
    if np.any(~((pts > 0.0) & (pts < 1.0))):
        raise PceDomainError("copula density requires every u_i strictly inside (0, 1)")

    z = special.ndtri(pts)
    w = linalg.solve_triangular(c.chol, z.T, lower=True)
    quad = np.sum(w * w, axis=0)
    log_det = 2.0 * float(np.sum(np.log(np.diag(c.chol))))
    dens = np.exp(-0.5 * (quad - np.sum(z * z, axis=1)) - 0.5 * log_det)
    return float(dens[0]) if single else dens


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def _latent_normals(n: int, d: int, seed: int) -> np.ndarray:
    """n x d independent standard normals via Φ⁻¹ of Philox uniforms."""
    rng = np.random.Generator(np.random.Philox(seed & 0xFFFF_FFFF_FFFF_FFFF))
    u = rng.random((n, d))
    np.clip(u, PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP, out=u)
    return special.ndtri(u)


def _to_physical(model: JointModel, y: np.ndarray) -> np.ndarray:
    u = special.ndtr(y)
    np.clip(u, PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP, out=u)
    out = np.empty_like(u)
    for j, marginal in enumerate(model.marginals):
        out[:, j] = marginal.inv_cdf(u[:, j])
    return out


def _draw(model: JointModel, n: int, seed: int, chol: np.ndarray) -> np.ndarray:
    if n < 1:
        raise PceParameterError(f"sample count must be >= 1, got {n}")
    z = _latent_normals(n, model.dim, seed)
    return _to_physical(model, z @ chol.T)


def sample(model: JointModel, n: int, seed: int) -> np.ndarray:
    """Draw *n* i.i.d. samples of ξ from the joint model; deterministic in *seed*."""
    logger.debug("Sampling %d dependent draws (d=%d, seed=%d)", n, model.dim, seed)
    return _draw(model, n, seed, model.copula.chol)


def sample_independent(model: JointModel, n: int, seed: int) -> np.ndarray:
    """Like :func:`sample` but with Σ replaced by the identity.

    Uses the same latent stream as :func:`sample`, so both agree exactly
    when Σ is already the identity or d = 1.
    """
    logger.debug("Sampling %d independent draws (d=%d, seed=%d)", n, model.dim, seed)
    return _draw(model, n, seed, np.eye(model.dim))


def latent_scores(model: JointModel, samples: np.ndarray) -> np.ndarray:
    """Map physical samples back to latent normal scores Φ⁻¹(F_i(ξ_i))."""
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    u = np.empty_like(pts)
    for j, marginal in enumerate(model.marginals):
        u[:, j] = marginal.cdf(pts[:, j])
    np.clip(u, PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP, out=u)
    return special.ndtri(u)
