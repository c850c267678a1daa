"""Chance-constrained two-zone reserve procurement as a second-order-cone program.

Bid j may be procured for zone X (share x_j) and for zone Y (share y_j) with
x_j + y_j ≤ 1.  Bids 0..n_x-1 are located in zone X, the rest in zone Y.
With the PCE moments μ = a0ᵀz and σ = ‖A z‖₂ of the weighted sum Σ z_j E_j,
each chance constraint becomes a quantile condition μ + λσ ≷ bound, which is
a second-order cone because λ_lo < 0 < λ_hi:

    |λ_lo| ‖A x‖₂            ≤ a0ᵀx - R_X               (reserve_x)
    |λ_lo| ‖A y‖₂            ≤ a0ᵀy - R_Y               (reserve_y)
    λ_hi ‖A_X y_X‖₂          ≤ T_XY - a0_Xᵀ y_X         (tie_xy)
    λ_hi ‖A_Y x_Y‖₂          ≤ T_YX - a0_Yᵀ x_Y         (tie_yx)

The program is built with cvxpy and solved with Clarabel by default.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any

import cvxpy as cp
import numpy as np

from copula_pce.core.distributions import std_normal_inv_cdf
from copula_pce.core.pce import combine, moments
from copula_pce.exceptions import PceConfigError, PceParameterError

if TYPE_CHECKING:
    from collections.abc import Mapping

    from copula_pce.core.pce import PceMatrix

__all__ = [
    "ACTIVE_TOLERANCE",
    "CONSTRAINT_NAMES",
    "DEFAULT_SOLVER",
    "ChanceConstraint",
    "ConicProgram",
    "ConstraintMargin",
    "ProcurementSolution",
    "ProcurementSpec",
    "QuantilePair",
    "analytic_quantile_check",
    "assemble",
    "chance_constraints",
    "diagnose_infeasibility",
    "quantile_factor",
    "quantile_pair",
    "solve",
]

logger = logging.getLogger(__name__)

DEFAULT_SOLVER = "CLARABEL"
CONSTRAINT_NAMES: tuple[str, ...] = ("reserve_x", "reserve_y", "tie_xy", "tie_yx")
ACTIVE_TOLERANCE = 1e-5
_FEASIBILITY_TOL = 1e-6

_OPTIMAL = {cp.OPTIMAL, cp.OPTIMAL_INACCURATE}
_INFEASIBLE = {cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE}


# ---------------------------------------------------------------------------
# Problem data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProcurementSpec:
    """Reserve requirements, tie-line limits and bid costs for both zones."""

    n_x: int
    n_y: int
    reserve_x: float
    reserve_y: float
    tie_xy: float
    tie_yx: float
    costs: tuple[float, ...]
    epsilon: float = 0.01

    def __post_init__(self) -> None:
        object.__setattr__(self, "costs", tuple(float(c) for c in self.costs))
        if self.n_x < 1 or self.n_y < 1:
            raise PceConfigError(
                f"each zone needs at least one bid, got n_x={self.n_x}, n_y={self.n_y}"
            )
        limits = {
            "reserve_x": self.reserve_x,
            "reserve_y": self.reserve_y,
            "tie_xy": self.tie_xy,
            "tie_yx": self.tie_yx,
        }
        for name, value in limits.items():
            if not (math.isfinite(value) and value >= 0.0):
                raise PceConfigError(f"{name} must be a finite value >= 0, got {value!r}")
        if not 0.0 < self.epsilon < 0.5:
            raise PceConfigError(f"epsilon must lie in (0, 0.5), got {self.epsilon!r}")
        if len(self.costs) != self.n_bids:
            raise PceConfigError(f"{len(self.costs)} costs for {self.n_bids} bids")
        if any(not (math.isfinite(c) and c >= 0.0) for c in self.costs):
            raise PceConfigError("bid costs must be finite and >= 0")

    @property
    def n_bids(self) -> int:
        return self.n_x + self.n_y

    def scaled(self, factor: float) -> ProcurementSpec:
        """Same spec with every power quantity multiplied by *factor*."""
        return replace(
            self,
            reserve_x=self.reserve_x * factor,
            reserve_y=self.reserve_y * factor,
            tie_xy=self.tie_xy * factor,
            tie_yx=self.tie_yx * factor,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_x": self.n_x,
            "n_y": self.n_y,
            "reserve_x": self.reserve_x,
            "reserve_y": self.reserve_y,
            "tie_xy": self.tie_xy,
            "tie_yx": self.tie_yx,
            "epsilon": self.epsilon,
            "costs": list(self.costs),
        }


@dataclass(frozen=True)
class QuantilePair:
    """Quantile factors: μ + λ_lo σ is the ε-quantile, μ + λ_hi σ the (1-ε)-quantile."""

    lambda_lo: float
    lambda_hi: float

    def to_dict(self) -> dict[str, float]:
        return {"lambda_lo": self.lambda_lo, "lambda_hi": self.lambda_hi}


def quantile_factor(p: float, dist: str = "normal") -> float:
    """λ such that μ + λσ is the p-quantile of a *dist*-shaped distribution.

    Raises:
        PceDomainError: *p* outside (0, 1).
        PceParameterError: Unsupported *dist*.
    """
    if dist != "normal":
        raise PceParameterError(f"quantile factors are only available for 'normal', got {dist!r}")
    return float(std_normal_inv_cdf(p))


def quantile_pair(epsilon: float, dist: str = "normal") -> QuantilePair:
    return QuantilePair(quantile_factor(epsilon, dist), quantile_factor(1.0 - epsilon, dist))


@dataclass(frozen=True, eq=False)
class ChanceConstraint:
    """One of the four chance constraints at a given procurement (x, y).

    ``weights`` selects the bids summed in the constraint; ``sense`` is
    ``"lower"`` for Σ ≥ bound (reserve) and ``"upper"`` for Σ ≤ bound (tie line).
    """

    name: str
    sense: str
    bound: float
    weights: np.ndarray


def chance_constraints(spec: ProcurementSpec, x: Any, y: Any) -> tuple[ChanceConstraint, ...]:
    """The four constraints with their bid weight vectors at (x, y)."""
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    in_x = np.arange(spec.n_bids) < spec.n_x
    return (
        ChanceConstraint("reserve_x", "lower", spec.reserve_x, xv),
        ChanceConstraint("reserve_y", "lower", spec.reserve_y, yv),
        ChanceConstraint("tie_xy", "upper", spec.tie_xy, np.where(in_x, yv, 0.0)),
        ChanceConstraint("tie_yx", "upper", spec.tie_yx, np.where(in_x, 0.0, xv)),
    )


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ConicProgram:
    """cvxpy problem for one procurement instance plus its input data."""

    problem: cp.Problem
    x: cp.Variable
    y: cp.Variable
    spec: ProcurementSpec
    pce: PceMatrix
    lam: QuantilePair
    cones: dict[str, cp.Constraint] = field(default_factory=dict)


def _higher_coeffs(pce: PceMatrix) -> np.ndarray:
    # cvxpy needs a non-empty cone vector; a zero row leaves the cone unchanged.
    if pce.A.shape[0] == 0:
        return np.zeros((1, pce.n_bids))
    return pce.A


def _cone_constraints(
    x: cp.Expression,
    y: cp.Expression,
    spec: ProcurementSpec,
    pce: PceMatrix,
    lam: QuantilePair,
    slack: cp.Expression | None = None,
) -> dict[str, cp.Constraint]:
    a0 = pce.a0
    amat = _higher_coeffs(pce)
    nx = spec.n_x
    lo = abs(lam.lambda_lo)
    hi = lam.lambda_hi

    def s(i: int) -> cp.Expression | float:
        return 0.0 if slack is None else slack[i]

    return {
        "reserve_x": cp.SOC(a0 @ x - spec.reserve_x + s(0), lo * (amat @ x)),
        "reserve_y": cp.SOC(a0 @ y - spec.reserve_y + s(1), lo * (amat @ y)),
        "tie_xy": cp.SOC(spec.tie_xy - a0[:nx] @ y[:nx] + s(2), hi * (amat[:, :nx] @ y[:nx])),
        "tie_yx": cp.SOC(spec.tie_yx - a0[nx:] @ x[nx:] + s(3), hi * (amat[:, nx:] @ x[nx:])),
    }


def assemble(spec: ProcurementSpec, pce: PceMatrix, lam: QuantilePair) -> ConicProgram:
    """Build the SOCP: minimise γᵀ(x + y) over the box and the four cones.

    Raises:
        PceParameterError: The PCE column count differs from n_x + n_y, or
            the quantile factors do not straddle zero.
    """
    if pce.n_bids != spec.n_bids:
        raise PceParameterError(
            f"PCE matrix has {pce.n_bids} columns, procurement spec has {spec.n_bids} bids"
        )
    if not lam.lambda_lo < 0.0 < lam.lambda_hi:
        raise PceParameterError(
            f"need lambda_lo < 0 < lambda_hi, got {lam.lambda_lo}, {lam.lambda_hi}"
        )
    x = cp.Variable(spec.n_bids, nonneg=True, name="x")
    y = cp.Variable(spec.n_bids, nonneg=True, name="y")
    cones = _cone_constraints(x, y, spec, pce, lam)
    costs = np.asarray(spec.costs)
    problem = cp.Problem(cp.Minimize(costs @ (x + y)), [x + y <= 1, *cones.values()])
    return ConicProgram(problem=problem, x=x, y=y, spec=spec, pce=pce, lam=lam, cones=cones)


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ProcurementSolution:
    """Solver outcome: shares x, y, objective γᵀ(x + y), status and slacks."""

    x: np.ndarray
    y: np.ndarray
    objective: float | None
    status: str
    residuals: dict[str, float] = field(default_factory=dict)
    solver: str = DEFAULT_SOLVER
    stats: dict[str, Any] = field(default_factory=dict)
    diagnosis: dict[str, Any] | None = None

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "objective": self.objective,
            "x": self.x,
            "y": self.y,
            "residuals": dict(self.residuals),
            "solver": self.solver,
            "stats": dict(self.stats),
            "diagnosis": self.diagnosis,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ProcurementSolution:
        return cls(
            x=np.asarray(data["x"], dtype=float),
            y=np.asarray(data["y"], dtype=float),
            objective=None if data.get("objective") is None else float(data["objective"]),
            status=str(data["status"]),
            residuals={k: float(v) for k, v in data.get("residuals", {}).items()},
            solver=str(data.get("solver", DEFAULT_SOLVER)),
            stats=dict(data.get("stats", {})),
            diagnosis=data.get("diagnosis"),
        )


def _residuals(
    x: np.ndarray, y: np.ndarray, spec: ProcurementSpec, pce: PceMatrix, lam: QuantilePair
) -> dict[str, float]:
    """Slack of every constraint at (x, y); negative means violated."""
    out: dict[str, float] = {}
    for con in chance_constraints(spec, x, y):
        mu, sigma = moments(combine(con.weights, pce))
        if con.sense == "lower":
            out[con.name] = mu + lam.lambda_lo * sigma - con.bound
        else:
            out[con.name] = con.bound - (mu + lam.lambda_hi * sigma)
    out["share_sum"] = float(np.min(1.0 - (x + y)))
    out["nonneg"] = float(min(np.min(x), np.min(y)))
    return out


def _solver_stats(problem: cp.Problem) -> dict[str, Any]:
    stats = problem.solver_stats
    if stats is None:
        return {}
    logger.debug("Solver time %s s", stats.solve_time)
    return {
        "num_iters": stats.num_iters,
        "solver_name": stats.solver_name,
    }


def diagnose_infeasibility(program: ConicProgram, solver: str = DEFAULT_SOLVER) -> dict[str, Any]:
    """Elastic phase one: relax each cone by a non-negative slack and minimise the total.

    Returns the most-violated constraint and the relaxation it needs.
    """
    spec, pce, lam = program.spec, program.pce, program.lam
    x = cp.Variable(spec.n_bids, nonneg=True)
    y = cp.Variable(spec.n_bids, nonneg=True)
    slack = cp.Variable(len(CONSTRAINT_NAMES), nonneg=True)
    cones = _cone_constraints(x, y, spec, pce, lam, slack=slack)
    phase_one = cp.Problem(cp.Minimize(cp.sum(slack)), [x + y <= 1, *cones.values()])
    try:
        phase_one.solve(solver=solver)
    except cp.error.SolverError as exc:
        logger.warning("Infeasibility diagnosis failed: %s", exc)
        return {"constraint": None, "relaxation": None, "slacks": {}}
    values = np.maximum(np.asarray(slack.value, dtype=float), 0.0)
    worst = int(np.argmax(values))
    return {
        "constraint": CONSTRAINT_NAMES[worst],
        "relaxation": float(values[worst]),
        "slacks": {name: float(v) for name, v in zip(CONSTRAINT_NAMES, values, strict=True)},
    }


def solve(program: ConicProgram, solver: str = DEFAULT_SOLVER) -> ProcurementSolution:
    """Solve the conic program; never raises on infeasibility, reports it instead."""
    spec, pce, lam = program.spec, program.pce, program.lam
    zeros = np.zeros(spec.n_bids)
    try:
        program.problem.solve(solver=solver)
    except cp.error.SolverError as exc:
        logger.error("Solver %s failed: %s", solver, exc)
        return ProcurementSolution(zeros, zeros.copy(), None, "numerical_failure", solver=solver)

    status = program.problem.status
    stats = _solver_stats(program.problem)
    if status in _INFEASIBLE:
        diagnosis = diagnose_infeasibility(program, solver)
        logger.warning(
            "Procurement problem infeasible; most violated constraint %s needs relaxation %.6g",
            diagnosis["constraint"],
            diagnosis["relaxation"] if diagnosis["relaxation"] is not None else math.nan,
        )
        return ProcurementSolution(
            zeros, zeros.copy(), None, "infeasible", solver=solver, stats=stats, diagnosis=diagnosis
        )
    if status not in _OPTIMAL or program.x.value is None:
        logger.error("Solver %s returned status %s", solver, status)
        return ProcurementSolution(
            zeros, zeros.copy(), None, "numerical_failure", solver=solver, stats=stats
        )

    x = np.clip(np.asarray(program.x.value, dtype=float), 0.0, 1.0)
    y = np.clip(np.asarray(program.y.value, dtype=float), 0.0, 1.0)
    residuals = _residuals(x, y, spec, pce, lam)
    worst = min(residuals.values())
    scale = max(1.0, spec.reserve_x, spec.reserve_y, spec.tie_xy, spec.tie_yx)
    if worst < -_FEASIBILITY_TOL * scale:
        logger.error("Solver %s returned a point violating constraints by %.3g", solver, -worst)
        return ProcurementSolution(
            x, y, None, "numerical_failure", residuals=residuals, solver=solver, stats=stats
        )
    if status == cp.OPTIMAL_INACCURATE:
        logger.warning("Solver %s reported an inaccurate optimum", solver)

    objective = float(np.dot(spec.costs, x + y))
    logger.info("Procurement solved (%s): objective %.9g", solver, objective)
    return ProcurementSolution(
        x, y, objective, "optimal", residuals=residuals, solver=solver, stats=stats
    )


# ---------------------------------------------------------------------------
# Analytic margins
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstraintMargin:
    """PCE-based quantile μ + λσ of one constraint sum and its slack to the bound."""

    name: str
    sense: str
    mu: float
    sigma: float
    lam: float
    quantile: float
    bound: float
    margin: float
    active: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "sense": self.sense,
            "mu": self.mu,
            "sigma": self.sigma,
            "lambda": self.lam,
            "quantile": self.quantile,
            "bound": self.bound,
            "margin": self.margin,
            "active": self.active,
        }


def analytic_quantile_check(
    solution: ProcurementSolution,
    pce: PceMatrix,
    spec: ProcurementSpec,
    lam: QuantilePair,
) -> tuple[ConstraintMargin, ...]:
    """Recompute μ + λσ of every constraint sum from the PCE and report its margin.

    A constraint is active when its margin is at most 1e-5 times its bound
    (or 1e-5 when the bound is zero).
    """
    out = []
    for con in chance_constraints(spec, solution.x, solution.y):
        mu, sigma = moments(combine(con.weights, pce))
        if con.sense == "lower":
            factor = lam.lambda_lo
            quantile = mu + factor * sigma
            margin = quantile - con.bound
        else:
            factor = lam.lambda_hi
            quantile = mu + factor * sigma
            margin = con.bound - quantile
        active = margin <= ACTIVE_TOLERANCE * max(abs(con.bound), 1.0)
        out.append(
            ConstraintMargin(con.name, con.sense, mu, sigma, factor, quantile, con.bound, margin, active)
        )
    return tuple(out)
