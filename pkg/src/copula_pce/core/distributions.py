"""One-dimensional marginal distributions for copula-pce.

Houses the marginals f_i, F_i, F_i^-1 of the joint model together with the
standard normal functions Φ and Φ⁻¹ used by every copula transform.  All
functions are vectorised: scalars go in and come out as floats, arrays keep
their shape.

Φ is evaluated through ``scipy.special.ndtr`` (complementary error function)
and Φ⁻¹ through ``scipy.special.ndtri``; the Beta family uses the regularized
incomplete beta function ``betainc`` and its inverse ``betaincinv``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar

import numpy as np
from scipy import special

from copula_pce.exceptions import PceDomainError, PceValidationError

__all__ = [
    "Beta",
    "Marginal",
    "Normal",
    "Uniform",
    "marginal_cdf",
    "marginal_from_dict",
    "marginal_inv_cdf",
    "marginal_pdf",
    "std_normal_cdf",
    "std_normal_inv_cdf",
    "std_normal_pdf",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _as_output(values: np.ndarray, like: Any) -> Any:
    """Return a Python float when the caller passed a scalar."""
    if np.ndim(like) == 0:
        return float(values)
    return values


def _check_probability(p: Any, *, what: str = "p") -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    bad = ~((arr > 0.0) & (arr < 1.0))
    if np.any(bad):
        first = arr[bad].flat[0] if arr.ndim else float(arr)
        raise PceDomainError(f"{what} must lie strictly inside (0, 1), got {first!r}")
    return arr


# ---------------------------------------------------------------------------
# Standard normal
# ---------------------------------------------------------------------------


def std_normal_pdf(x: Any) -> Any:
    """Standard normal density φ(x)."""
    arr = np.asarray(x, dtype=float)
    return _as_output(_INV_SQRT_2PI * np.exp(-0.5 * arr * arr), x)


def std_normal_cdf(x: Any) -> Any:
    """Standard normal CDF Φ(x), accurate in both tails."""
    arr = np.asarray(x, dtype=float)
    return _as_output(special.ndtr(arr), x)


def std_normal_inv_cdf(p: Any) -> Any:
    """Inverse standard normal CDF Φ⁻¹(p) for p in (0, 1).

    Raises:
        PceDomainError: Any *p* lies outside the open unit interval.
    """
    arr = _check_probability(p)
    return _as_output(special.ndtri(arr), p)


# ---------------------------------------------------------------------------
# Marginal families
# ---------------------------------------------------------------------------


class Marginal(ABC):
    """A one-dimensional distribution with evaluable PDF, CDF and inverse CDF."""

    kind: ClassVar[str]

    @abstractmethod
    def support(self) -> tuple[float, float]:
        """Return the (lower, upper) edges of the support."""

    @abstractmethod
    def pdf(self, x: Any) -> Any:
        """Density; 0 outside the support."""

    @abstractmethod
    def cdf(self, x: Any) -> Any:
        """Distribution function, clamped to {0, 1} outside the support."""

    @abstractmethod
    def _ppf(self, p: np.ndarray) -> np.ndarray:
        """Quantile function on an already validated probability array."""

    @abstractmethod
    def _isf(self, q: np.ndarray) -> np.ndarray:
        """Quantile at 1 - q on an already validated probability array."""

    @abstractmethod
    def mean(self) -> float: ...

    @abstractmethod
    def variance(self) -> float: ...

    @abstractmethod
    def to_dict(self) -> dict[str, Any]: ...

    def inv_cdf(self, p: Any) -> Any:
        """Quantile function for p in (0, 1); results lie inside the support.

        Raises:
            PceDomainError: Any *p* lies outside the open unit interval.
        """
        arr = _check_probability(p)
        return _as_output(self._ppf(arr), p)

    def inv_sf(self, q: Any) -> Any:
        """Quantile at 1 - q, accurate when q is small.

        Raises:
            PceDomainError: Any *q* lies outside the open unit interval.
        """
        arr = _check_probability(q, what="q")
        return _as_output(self._isf(arr), q)

    def std(self) -> float:
        return math.sqrt(self.variance())


@dataclass(frozen=True)
class Normal(Marginal):
    """Normal distribution N(mean, stddev²)."""

    kind: ClassVar[str] = "normal"

    loc: float
    stddev: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.loc) and math.isfinite(self.stddev)):
            raise PceValidationError("normal marginal parameters must be finite")
        if self.stddev <= 0.0:
            raise PceValidationError(f"normal stddev must be > 0, got {self.stddev}")

    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def pdf(self, x: Any) -> Any:
        z = (np.asarray(x, dtype=float) - self.loc) / self.stddev
        return _as_output(_INV_SQRT_2PI * np.exp(-0.5 * z * z) / self.stddev, x)

    def cdf(self, x: Any) -> Any:
        z = (np.asarray(x, dtype=float) - self.loc) / self.stddev
        return _as_output(special.ndtr(z), x)

    def _ppf(self, p: np.ndarray) -> np.ndarray:
        return self.loc + self.stddev * special.ndtri(p)

    def _isf(self, q: np.ndarray) -> np.ndarray:
        return self.loc - self.stddev * special.ndtri(q)

    def mean(self) -> float:
        return self.loc

    def variance(self) -> float:
        return self.stddev**2

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "mean": self.loc, "std": self.stddev}


@dataclass(frozen=True)
class Beta(Marginal):
    """Beta(alpha, beta) distribution affinely rescaled to [lower, upper]."""

    kind: ClassVar[str] = "beta"

    alpha: float
    beta: float
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise PceValidationError(
                f"beta shape parameters must be > 0, got alpha={self.alpha}, beta={self.beta}"
            )
        if not self.lower < self.upper:
            raise PceValidationError(
                f"beta support requires lower < upper, got [{self.lower}, {self.upper}]"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def support(self) -> tuple[float, float]:
        return (self.lower, self.upper)

    def pdf(self, x: Any) -> Any:
        t = (np.asarray(x, dtype=float) - self.lower) / self.width
        inside = (t > 0.0) & (t < 1.0)
        tc = np.where(inside, t, 0.5)
        log_pdf = (
            (self.alpha - 1.0) * np.log(tc)
            + (self.beta - 1.0) * np.log1p(-tc)
            - special.betaln(self.alpha, self.beta)
        )
        out = np.where(inside, np.exp(log_pdf) / self.width, 0.0)
        return _as_output(out, x)

    def cdf(self, x: Any) -> Any:
        t = np.clip((np.asarray(x, dtype=float) - self.lower) / self.width, 0.0, 1.0)
        return _as_output(special.betainc(self.alpha, self.beta, t), x)

    def _ppf(self, p: np.ndarray) -> np.ndarray:
        return self.lower + self.width * special.betaincinv(self.alpha, self.beta, p)

    def _isf(self, q: np.ndarray) -> np.ndarray:
        # 1 - T ~ Beta(beta, alpha)
        return self.upper - self.width * special.betaincinv(self.beta, self.alpha, q)

    def mean(self) -> float:
        return self.lower + self.width * self.alpha / (self.alpha + self.beta)

    def variance(self) -> float:
        a, b = self.alpha, self.beta
        return self.width**2 * a * b / ((a + b) ** 2 * (a + b + 1.0))

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "beta": self.beta,
            "lower": self.lower,
            "upper": self.upper,
        }


@dataclass(frozen=True)
class Uniform(Marginal):
    """Uniform distribution on [lower, upper]."""

    kind: ClassVar[str] = "uniform"

    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not self.lower < self.upper:
            raise PceValidationError(
                f"uniform support requires lower < upper, got [{self.lower}, {self.upper}]"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def support(self) -> tuple[float, float]:
        return (self.lower, self.upper)

    def pdf(self, x: Any) -> Any:
        arr = np.asarray(x, dtype=float)
        inside = (arr >= self.lower) & (arr <= self.upper)
        return _as_output(np.where(inside, 1.0 / self.width, 0.0), x)

    def cdf(self, x: Any) -> Any:
        t = (np.asarray(x, dtype=float) - self.lower) / self.width
        return _as_output(np.clip(t, 0.0, 1.0), x)

    def _ppf(self, p: np.ndarray) -> np.ndarray:
        return self.lower + self.width * p

    def _isf(self, q: np.ndarray) -> np.ndarray:
        return self.upper - self.width * q

    def mean(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def variance(self) -> float:
        return self.width**2 / 12.0

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "lower": self.lower, "upper": self.upper}


# ---------------------------------------------------------------------------
# Functional API
# ---------------------------------------------------------------------------


def marginal_pdf(m: Marginal, x: Any) -> Any:
    """Density of *m* at *x*."""
    return m.pdf(x)


def marginal_cdf(m: Marginal, x: Any) -> Any:
    """Distribution function of *m* at *x*."""
    return m.cdf(x)


def marginal_inv_cdf(m: Marginal, p: Any) -> Any:
    """Quantile of *m* at probability *p* in (0, 1)."""
    return m.inv_cdf(p)


def marginal_from_dict(data: dict[str, Any]) -> Marginal:
    """Build a marginal from its scenario-file representation.

    Raises:
        PceValidationError: Unknown kind, missing keys, or invalid parameters.
    """
    kind = data.get("kind")
    try:
        if kind == "normal":
            return Normal(loc=float(data["mean"]), stddev=float(data["std"]))
        if kind == "beta":
            return Beta(
                alpha=float(data["alpha"]),
                beta=float(data["beta"]),
                lower=float(data.get("lower", 0.0)),
                upper=float(data.get("upper", 1.0)),
            )
        if kind == "uniform":
            return Uniform(lower=float(data["lower"]), upper=float(data["upper"]))
    except KeyError as exc:
        raise PceValidationError(f"{kind} marginal is missing key {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise PceValidationError(f"{kind} marginal has a non-numeric parameter: {exc}") from exc
    raise PceValidationError(
        f"marginal kind must be 'normal', 'beta' or 'uniform', got {kind!r}"
    )
