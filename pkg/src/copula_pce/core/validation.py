"""Monte-Carlo verification of the chance constraints at a solved procurement.

Samples ξ from the copula (dependent mode) and from the product of the
marginals (independent mode), evaluates the true bid functions, and reports
for every constraint sum its empirical ε- and (1-ε)-percentiles, violation
rate, and a distribution-free order-statistic confidence interval for each
percentile.  Percentiles use linear interpolation between order statistics
(numpy ``method="linear"``).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy import stats

from copula_pce.core.copula import sample, sample_independent
from copula_pce.core.pce import DEFAULT_ERROR_FLOOR, combine, moments, relative_error
from copula_pce.core.procurement import chance_constraints
from copula_pce.exceptions import PceParameterError

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

    from copula_pce.core.basis import OrthonormalBasis
    from copula_pce.core.copula import JointModel
    from copula_pce.core.pce import BidFunction, PceMatrix
    from copula_pce.core.procurement import ProcurementSolution, ProcurementSpec

__all__ = [
    "CONFIDENCE",
    "MODES",
    "QUANTILE_METHOD",
    "ConstraintRecord",
    "ExpansionComparison",
    "Histogram",
    "ValidationReport",
    "compare_expansion",
    "histogram",
    "quantile_confidence_interval",
    "summary_table",
    "tight_constraints",
    "validate",
    "write_comparison_csv",
    "write_constraint_csv",
    "write_summary_csv",
    "write_sums_csv",
]

logger = logging.getLogger(__name__)

MODES: tuple[str, ...] = ("dependent", "independent")
QUANTILE_METHOD = "linear"
CONFIDENCE = 0.99


# ---------------------------------------------------------------------------
# Histograms
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def bins(self) -> int:
        return int(self.counts.shape[0])


def histogram(
    values: Any, bins: int, value_range: tuple[float, float] | None = None
) -> Histogram:
    """Equal-width histogram spanning [min, max] (or *value_range*).

    Raises:
        PceParameterError: Empty input or ``bins < 1``.
    """
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size == 0:
        raise PceParameterError("cannot build a histogram of an empty sample")
    if bins < 1:
        raise PceParameterError(f"bins must be >= 1, got {bins}")
    span = value_range if value_range is not None else (float(arr.min()), float(arr.max()))
    counts, edges = np.histogram(arr, bins=bins, range=span)
    return Histogram(edges=edges, counts=counts)


# ---------------------------------------------------------------------------
# Report types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstraintRecord:
    """Empirical statistics of one constraint sum under one sampling mode."""

    constraint: str
    mode: str
    sense: str
    n: int
    seed: int
    bound: float
    levels: tuple[float, float]
    percentile_lo: float
    percentile_hi: float
    ci_lo: tuple[float, float]
    ci_hi: tuple[float, float]
    violation_rate: float
    mean: float
    std: float
    mu_pce: float | None = None
    sigma_pce: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "constraint": self.constraint,
            "mode": self.mode,
            "sense": self.sense,
            "n": self.n,
            "seed": self.seed,
            "bound": self.bound,
            "levels": list(self.levels),
            "percentile_lo": self.percentile_lo,
            "percentile_hi": self.percentile_hi,
            "ci_lo": list(self.ci_lo),
            "ci_hi": list(self.ci_hi),
            "violation_rate": self.violation_rate,
            "mean": self.mean,
            "std": self.std,
            "mu_pce": self.mu_pce,
            "sigma_pce": self.sigma_pce,
        }


@dataclass(frozen=True, eq=False)
class ExpansionComparison:
    """True bid versus its expansion on the same samples."""

    bid_id: str
    max_relative_error: float
    hist_true: Histogram
    hist_expansion: Histogram

    def to_dict(self) -> dict[str, Any]:
        return {"bid_id": self.bid_id, "max_relative_error": self.max_relative_error}


@dataclass(eq=False)
class ValidationReport:
    """Per-constraint records for both sampling modes plus expansion errors.

    ``sums`` keeps the raw constraint sums keyed by (constraint, mode) for
    plot data; it is not part of the serialized report.
    """

    n: int
    seed: int
    records: list[ConstraintRecord] = field(default_factory=list)
    expansion: list[ExpansionComparison] = field(default_factory=list)
    sums: dict[tuple[str, str], np.ndarray] = field(default_factory=dict, repr=False)

    def record(self, constraint: str, mode: str) -> ConstraintRecord:
        for rec in self.records:
            if rec.constraint == constraint and rec.mode == mode:
                return rec
        raise KeyError(f"no record for constraint {constraint!r} in mode {mode!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "seed": self.seed,
            "quantile_method": QUANTILE_METHOD,
            "confidence": CONFIDENCE,
            "constraints": [r.to_dict() for r in self.records],
            "expansion": [c.to_dict() for c in self.expansion],
        }


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def quantile_confidence_interval(
    sorted_values: np.ndarray, p: float, confidence: float = CONFIDENCE
) -> tuple[float, float]:
    """Distribution-free CI for the p-quantile from binomial order statistics."""
    n = sorted_values.shape[0]
    tail = 0.5 * (1.0 - confidence)
    lo_rank = int(stats.binom.ppf(tail, n, p))
    hi_rank = int(stats.binom.ppf(1.0 - tail, n, p)) + 1
    lo_idx = min(max(lo_rank - 1, 0), n - 1)
    hi_idx = min(max(hi_rank - 1, 0), n - 1)
    return float(sorted_values[lo_idx]), float(sorted_values[hi_idx])


def _record(
    name: str,
    sense: str,
    bound: float,
    mode: str,
    sums: np.ndarray,
    epsilon: float,
    seed: int,
) -> ConstraintRecord:
    ordered = np.sort(sums)
    levels = (epsilon, 1.0 - epsilon)
    p_lo, p_hi = np.quantile(ordered, levels, method=QUANTILE_METHOD)
    violated = ordered < bound if sense == "lower" else ordered > bound
    n = ordered.shape[0]
    return ConstraintRecord(
        constraint=name,
        mode=mode,
        sense=sense,
        n=n,
        seed=seed,
        bound=bound,
        levels=levels,
        percentile_lo=float(p_lo),
        percentile_hi=float(p_hi),
        ci_lo=quantile_confidence_interval(ordered, levels[0]),
        ci_hi=quantile_confidence_interval(ordered, levels[1]),
        violation_rate=float(np.count_nonzero(violated)) / n,
        mean=float(ordered.mean()),
        std=float(ordered.std(ddof=1)) if n > 1 else 0.0,
    )


def _bid_values(bids: Sequence[BidFunction], samples: np.ndarray) -> np.ndarray:
    return np.column_stack([b.evaluate(samples) for b in bids])


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def validate(
    solution: ProcurementSolution,
    bids: Sequence[BidFunction],
    model: JointModel,
    spec: ProcurementSpec,
    n: int,
    seed: int,
    *,
    pce: PceMatrix | None = None,
) -> ValidationReport:
    """Sample both modes and evaluate the four constraint sums of the true bids.

    With *pce* the analytic μ and σ of each sum are attached to its records.
    """
    if len(bids) != spec.n_bids:
        raise PceParameterError(f"{len(bids)} bids for a spec with {spec.n_bids}")
    if n < 1:
        raise PceParameterError(f"sample count must be >= 1, got {n}")
    if n < 10_000:
        logger.warning("n=%d is small for percentile estimates at the 1%% level", n)

    report = ValidationReport(n=n, seed=seed)
    draws = {"dependent": sample(model, n, seed), "independent": sample_independent(model, n, seed)}
    constraints = chance_constraints(spec, solution.x, solution.y)
    for mode in MODES:
        values = _bid_values(bids, draws[mode])
        for con in constraints:
            sums = values @ con.weights
            rec = _record(con.name, con.sense, con.bound, mode, sums, spec.epsilon, seed)
            if pce is not None:
                mu, sigma = moments(combine(con.weights, pce))
                rec = replace(rec, mu_pce=mu, sigma_pce=sigma)
            report.records.append(rec)
            report.sums[(con.name, mode)] = sums
            logger.info(
                "%s/%s: p%.0f=%.6g p%.0f=%.6g violation %.4f (bound %.6g)",
                con.name,
                mode,
                100 * rec.levels[0],
                rec.percentile_lo,
                100 * rec.levels[1],
                rec.percentile_hi,
                rec.violation_rate,
                con.bound,
            )
    return report


def compare_expansion(
    bids: Sequence[BidFunction],
    pce: PceMatrix,
    basis: OrthonormalBasis,
    model: JointModel,
    n: int,
    seed: int,
    *,
    bins: int = 50,
    floor: float = DEFAULT_ERROR_FLOOR,
) -> list[ExpansionComparison]:
    """Evaluate every bid and its expansion on the same copula samples."""
    if len(bids) != pce.n_bids:
        raise PceParameterError(f"{len(bids)} bids for a PCE matrix with {pce.n_bids} columns")
    pts = sample(model, n, seed)
    psi = basis.evaluate(pts)
    full = pce.full()
    out = []
    for j, bid in enumerate(bids):
        true = bid.evaluate(pts)
        approx = psi @ full[:, j]
        err = float(np.max(relative_error(true, approx, floor)))
        lo = float(min(true.min(), approx.min()))
        hi = float(max(true.max(), approx.max()))
        out.append(
            ExpansionComparison(
                bid_id=bid.id,
                max_relative_error=err,
                hist_true=histogram(true, bins, (lo, hi)),
                hist_expansion=histogram(approx, bins, (lo, hi)),
            )
        )
        logger.info("Bid %s: max relative expansion error %.3g", bid.id, err)
    return out


def summary_table(report: ValidationReport) -> list[dict[str, Any]]:
    """Dependent versus independent percentiles and violation rates, one row per constraint."""
    rows = []
    names = dict.fromkeys(r.constraint for r in report.records)
    for name in names:
        dep = report.record(name, "dependent")
        ind = report.record(name, "independent")
        rows.append(
            {
                "constraint": name,
                "sense": dep.sense,
                "bound": dep.bound,
                "dependent_percentile_lo": dep.percentile_lo,
                "independent_percentile_lo": ind.percentile_lo,
                "dependent_percentile_hi": dep.percentile_hi,
                "independent_percentile_hi": ind.percentile_hi,
                "dependent_violation_rate": dep.violation_rate,
                "independent_violation_rate": ind.violation_rate,
            }
        )
    return rows


def tight_constraints(report: ValidationReport) -> list[str]:
    """Constraints whose bound lies inside the dependent-mode percentile CI."""
    out = []
    for rec in report.records:
        if rec.mode != "dependent":
            continue
        lo, hi = rec.ci_lo if rec.sense == "lower" else rec.ci_hi
        if lo <= rec.bound <= hi:
            out.append(rec.constraint)
    return out


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def _fmt(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return value


def write_constraint_csv(report: ValidationReport, path: Path) -> None:
    fields = [
        "constraint",
        "mode",
        "sense",
        "n",
        "seed",
        "bound",
        "percentile_lo",
        "percentile_hi",
        "ci_lo_low",
        "ci_lo_high",
        "ci_hi_low",
        "ci_hi_high",
        "violation_rate",
        "mean",
        "std",
        "mu_pce",
        "sigma_pce",
    ]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for r in report.records:
            row = [
                r.constraint,
                r.mode,
                r.sense,
                r.n,
                r.seed,
                r.bound,
                r.percentile_lo,
                r.percentile_hi,
                *r.ci_lo,
                *r.ci_hi,
                r.violation_rate,
                r.mean,
                r.std,
                "" if r.mu_pce is None else r.mu_pce,
                "" if r.sigma_pce is None else r.sigma_pce,
            ]
            writer.writerow([_fmt(v) for v in row])


def write_summary_csv(rows: list[dict[str, Any]], path: Path) -> None:
    if not rows:
        raise PceParameterError("summary table is empty")
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def write_comparison_csv(comparison: ExpansionComparison, path: Path) -> None:
    """Histogram plot data: bin_left, bin_right, count_true, count_expansion."""
    edges = comparison.hist_true.edges
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_left", "bin_right", "count_true", "count_expansion"])
        for i in range(comparison.hist_true.bins):
            writer.writerow(
                [
                    _fmt(float(edges[i])),
                    _fmt(float(edges[i + 1])),
                    int(comparison.hist_true.counts[i]),
                    int(comparison.hist_expansion.counts[i]),
                ]
            )


def write_sums_csv(report: ValidationReport, constraint: str, path: Path, bins: int = 50) -> None:
    """Constraint-sum plot data: bin_left, bin_right, count_dependent, count_independent."""
    dep = report.sums[(constraint, "dependent")]
    ind = report.sums[(constraint, "independent")]
    span = (float(min(dep.min(), ind.min())), float(max(dep.max(), ind.max())))
    hist_dep = histogram(dep, bins, span)
    hist_ind = histogram(ind, bins, span)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_left", "bin_right", "count_dependent", "count_independent"])
        for i in range(bins):
            writer.writerow(
                [
                    _fmt(float(hist_dep.edges[i])),
                    _fmt(float(hist_dep.edges[i + 1])),
                    int(hist_dep.counts[i]),
                    int(hist_ind.counts[i]),
                ]
            )
