"""Pipeline orchestration for copula-pce.

Chains the four stages ``basis -> expand -> solve -> validate``.  Each stage
reads the scenario plus the artifacts of the stages before it, verifies
their hashes, and writes one JSON artifact.  ``run_all`` runs every stage
into one directory and writes a manifest with file hashes, library
versions, the seed and per-stage wall times.

Long-running stages accept the same ``progress_callback`` and
``cancel_event`` hooks as the numerical modules they drive.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

import cvxpy as cp
import numpy as np
import scipy

from copula_pce._version import __version__
from copula_pce.core.basis import (
    MomentTable,
    OrthonormalBasis,
    build_basis,
    generate_monomials,
)
from copula_pce.core.copula import sample
from copula_pce.core.hashing import hash_file
from copula_pce.core.pce import PceMatrix, expand_all, expansion_error, moments
from copula_pce.core.procurement import (
    ProcurementSolution,
    analytic_quantile_check,
    assemble,
    quantile_pair,
    solve,
)
from copula_pce.core.progress import ProgressEvent
from copula_pce.core.serializer import read_artifact, write_artifact, write_json
from copula_pce.core.validation import (
    compare_expansion,
    summary_table,
    tight_constraints,
    validate,
    write_comparison_csv,
    write_constraint_csv,
    write_summary_csv,
    write_sums_csv,
)
from copula_pce.exceptions import (
    ArtifactIntegrityError,
    PceCancellationError,
    PceInfeasibleError,
)
from copula_pce.models.artifacts import Artifact, Manifest, ManifestEntry

if TYPE_CHECKING:
    import threading
    from collections.abc import Callable

    from copula_pce.config.types import Scenario

__all__ = [
    "ARTIFACT_FILES",
    "MANIFEST_FILE",
    "RunResult",
    "StageResult",
    "load_basis",
    "load_coefficients",
    "load_solution",
    "run_all",
    "run_basis",
    "run_expand",
    "run_solve",
    "run_validate",
]

logger = logging.getLogger(__name__)

ARTIFACT_FILES: dict[str, str] = {
    "basis": "basis.json",
    "coefficients": "coefficients.json",
    "solution": "solution.json",
    "validation": "validation.json",
}
MANIFEST_FILE = "manifest.json"
CONSTRAINTS_CSV = "constraints.csv"
SUMMARY_CSV = "summary.csv"
HISTOGRAM_DIR = "histograms"


# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------


@dataclass
class StageResult:
    """Outcome of one stage: the artifact written and the decoded value."""

    kind: str
    path: Path
    artifact: Artifact
    value: Any
    wall_time_s: float
    files: list[Path] = field(default_factory=list)
    """Side outputs (CSV tables and histograms)."""


@dataclass
class RunResult:
    manifest: Manifest
    manifest_path: Path
    stages: dict[str, StageResult] = field(default_factory=dict)

    @property
    def solution(self) -> ProcurementSolution | None:
        stage = self.stages.get("solution")
        return None if stage is None else stage.value


def _check_cancelled(cancel_event: threading.Event | None) -> None:
    if cancel_event is not None and cancel_event.is_set():
        raise PceCancellationError("Pipeline cancelled")


def _notify(
    progress_callback: Callable[[ProgressEvent], None] | None, phase: str, message: str
) -> None:
    if progress_callback is not None:
        progress_callback(
            ProgressEvent(
                phase=phase, items_total=None, items_completed=0, current=None, message=message
            )
        )


# ---------------------------------------------------------------------------
# Artifact loaders
# ---------------------------------------------------------------------------


def load_basis(path: Path, scenario: Scenario) -> tuple[OrthonormalBasis, MomentTable, Artifact]:
    """Read a basis artifact and check it belongs to *scenario*."""
    art = read_artifact(path, "basis", scenario_fingerprint=scenario.fingerprint())
    return (
        OrthonormalBasis.from_dict(art.body["basis"]),
        MomentTable.from_dict(art.body["moment_table"]),
        art,
    )


def load_coefficients(
    path: Path, scenario: Scenario, *, basis: Artifact | None = None
) -> tuple[PceMatrix, Artifact]:
    """Read a coefficient artifact; with *basis* also check it was expanded on that basis."""
    upstream = None if basis is None else {"basis": basis.header.body_sha256}
    art = read_artifact(
        path, "coefficients", scenario_fingerprint=scenario.fingerprint(), upstream=upstream
    )
    pce = PceMatrix.from_dict(art.body["pce"])
    expected = tuple(b.id for b in scenario.bids)
    if pce.bid_ids != expected:
        raise ArtifactIntegrityError(
            f"{path} holds coefficients for bids {list(pce.bid_ids)}, scenario has {list(expected)}"
        )
    return pce, art


def load_solution(
    path: Path, scenario: Scenario, *, coefficients: Artifact | None = None
) -> tuple[ProcurementSolution, Artifact]:
    upstream = None if coefficients is None else {"coefficients": coefficients.header.body_sha256}
    art = read_artifact(
        path, "solution", scenario_fingerprint=scenario.fingerprint(), upstream=upstream
    )
    return ProcurementSolution.from_dict(art.body["solution"]), art


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def run_basis(
    scenario: Scenario,
    out: Path,
    *,
    progress_callback: Callable[[ProgressEvent], None] | None = None,
    cancel_event: threading.Event | None = None,
) -> StageResult:
    """Build the orthonormal basis and write the ``basis`` artifact to *out*."""
    start = time.perf_counter()
    mono = scenario.monomials
    monomials = generate_monomials(scenario.dim, mono.max_degree, mono.to_filter())
    logger.info("Basis: %d monomials of degree <= %d", len(monomials), mono.max_degree)
    quad, rt = scenario.quadrature, scenario.runtime
    basis, table = build_basis(
        monomials,
        scenario.model(),
        quad.k,
        node_budget=quad.node_budget,
        backend=quad.backend,
        eigen_floor=rt.eigen_floor,
        condition_limit=rt.condition_limit,
        enforce_condition_limit=rt.enforce_condition_limit,
        threads=rt.threads,
        progress_callback=progress_callback,
        cancel_event=cancel_event,
    )
    body = {
        "monomial_labels": [m.label() for m in monomials],
        "basis": basis.to_dict(),
        "moment_table": table.to_dict(),
    }
    elapsed = time.perf_counter() - start
    art = write_artifact(
        out, "basis", body, scenario_fingerprint=scenario.fingerprint(), wall_time_s=elapsed
    )
    logger.info(
        "Basis stage finished in %.2f s (gram residual %.3g, condition %.3g)",
        elapsed,
        basis.gram_residual,
        basis.condition_number,
    )
    return StageResult("basis", out, art, basis, elapsed)


def run_expand(
    scenario: Scenario,
    basis_path: Path,
    out: Path,
    *,
    progress_callback: Callable[[ProgressEvent], None] | None = None,
    cancel_event: threading.Event | None = None,
) -> StageResult:
    """Expand every bid on the stored basis and write the ``coefficients`` artifact.

    Per-bid expansion errors are measured on ``validation.n`` copula samples
    drawn with ``validation.seed``.
    """
    start = time.perf_counter()
    basis, table, basis_art = load_basis(basis_path, scenario)
    model = scenario.model()
    quad, rt, val = scenario.quadrature, scenario.runtime, scenario.validation
    known = table if table.compatible(scenario.dim, quad.k, quad.backend) else None
    pce = expand_all(
        scenario.bids,
        basis,
        model,
        quad.k,
        node_budget=quad.node_budget,
        backend=quad.backend,
        table=known,
        threads=rt.threads,
        basis_ref=basis_art.header.body_sha256,
        progress_callback=progress_callback,
        cancel_event=cancel_event,
    )
    _check_cancelled(cancel_event)

    pts = sample(model, val.n, val.seed)
    errors = {}
    stats = []
    for j, bid in enumerate(scenario.bids):
        col = pce.column(j)
        errors[bid.id] = expansion_error(
            bid, col, basis, model, val.n, val.seed, floor=rt.error_floor, samples=pts
        )
        mean, std = moments(col)
        stats.append({"id": bid.id, "mean": mean, "std": std})
    worst = max(errors, key=errors.__getitem__)
    logger.info("Largest relative expansion error %.3g (bid %s)", errors[worst], worst)

    body = {
        "k": quad.k,
        "backend": quad.backend,
        "pce": pce.to_dict(),
        "moments": stats,
        "expansion_errors": errors,
        "error_samples": {"n": val.n, "seed": val.seed},
    }
    elapsed = time.perf_counter() - start
    art = write_artifact(
        out,
        "coefficients",
        body,
        scenario_fingerprint=scenario.fingerprint(),
        upstream={"basis": basis_art.header.body_sha256},
        wall_time_s=elapsed,
    )
    logger.info("Expand stage finished in %.2f s", elapsed)
    return StageResult("coefficients", out, art, pce, elapsed)


def run_solve(
    scenario: Scenario,
    coefficients_path: Path,
    out: Path,
    *,
    cancel_event: threading.Event | None = None,
) -> StageResult:
    """Solve the procurement SOCP and write the ``solution`` artifact.

    The artifact is written for infeasible and failed solves as well; the
    caller decides how to report a non-optimal status.
    """
    start = time.perf_counter()
    pce, coeff_art = load_coefficients(coefficients_path, scenario)
    _check_cancelled(cancel_event)
    spec = scenario.procurement
    lam = quantile_pair(spec.epsilon)
    solution = solve(assemble(spec, pce, lam), scenario.runtime.solver)
    margins = analytic_quantile_check(solution, pce, spec, lam) if solution.is_optimal else ()
    for m in margins:
        logger.info(
            "%s: quantile %.6g vs bound %.6g (margin %.3g%s)",
            m.name,
            m.quantile,
            m.bound,
            m.margin,
            ", active" if m.active else "",
        )
    body = {
        "bid_ids": [b.id for b in scenario.bids],
        "procurement": spec.to_dict(),
        "quantile_factors": lam.to_dict(),
        "solution": solution.to_dict(),
        "margins": [m.to_dict() for m in margins],
    }
    elapsed = time.perf_counter() - start
    art = write_artifact(
        out,
        "solution",
        body,
        scenario_fingerprint=scenario.fingerprint(),
        upstream={"coefficients": coeff_art.header.body_sha256},
        wall_time_s=elapsed,
    )
    logger.info("Solve stage finished in %.2f s with status %s", elapsed, solution.status)
    return StageResult("solution", out, art, solution, elapsed)


def run_validate(
    scenario: Scenario,
    basis_path: Path,
    coefficients_path: Path,
    solution_path: Path,
    out_dir: Path,
    *,
    progress_callback: Callable[[ProgressEvent], None] | None = None,
    cancel_event: threading.Event | None = None,
) -> StageResult:
    """Monte-Carlo validation of the solved point; writes the report and CSV plot data.

    Raises:
        PceInfeasibleError: The solution is not optimal, so there is no
            point to validate.
    """
    start = time.perf_counter()
    basis, _, basis_art = load_basis(basis_path, scenario)
    pce, coeff_art = load_coefficients(coefficients_path, scenario, basis=basis_art)
    solution, sol_art = load_solution(solution_path, scenario, coefficients=coeff_art)
    if not solution.is_optimal:
        raise PceInfeasibleError(f"solution status is {solution.status!r}; nothing to validate")

    model = scenario.model()
    val = scenario.validation
    _notify(progress_callback, "validation", f"Sampling {val.n} points per mode")
    report = validate(solution, scenario.bids, model, scenario.procurement, val.n, val.seed, pce=pce)
    _check_cancelled(cancel_event)
    report.expansion = compare_expansion(
        scenario.bids,
        pce,
        basis,
        model,
        val.n,
        val.seed,
        bins=val.bins,
        floor=scenario.runtime.error_floor,
    )
    rows = summary_table(report)
    tight = tight_constraints(report)
    logger.info("Tight constraints (dependent mode): %s", ", ".join(tight) or "none")

    body = report.to_dict()
    body["summary"] = rows
    body["tight_constraints"] = tight

    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / ARTIFACT_FILES["validation"]
    # No wall time in the header: reports are compared byte for byte.
    art = write_artifact(
        out,
        "validation",
        body,
        scenario_fingerprint=scenario.fingerprint(),
        upstream={
            "coefficients": coeff_art.header.body_sha256,
            "solution": sol_art.header.body_sha256,
        },
    )

    files = [out_dir / CONSTRAINTS_CSV, out_dir / SUMMARY_CSV]
    write_constraint_csv(report, files[0])
    write_summary_csv(rows, files[1])
    hist_dir = out_dir / HISTOGRAM_DIR
    hist_dir.mkdir(exist_ok=True)
    for comparison in report.expansion:
        path = hist_dir / f"bid_{comparison.bid_id}.csv"
        write_comparison_csv(comparison, path)
        files.append(path)
    for rec in report.records:
        if rec.mode != "dependent":
            continue
        path = hist_dir / f"sum_{rec.constraint}.csv"
        write_sums_csv(report, rec.constraint, path, bins=val.bins)
        files.append(path)

    elapsed = time.perf_counter() - start
    logger.info("Validate stage finished in %.2f s", elapsed)
    return StageResult("validation", out, art, report, elapsed, files)


# ---------------------------------------------------------------------------
# Full run
# ---------------------------------------------------------------------------


def _libraries() -> dict[str, str]:
    return {"numpy": np.__version__, "scipy": scipy.__version__, "cvxpy": cp.__version__}


def _entry(kind: str, path: Path, root: Path) -> ManifestEntry:
    return ManifestEntry(kind=kind, path=path.relative_to(root).as_posix(), sha256=hash_file(path))


def run_all(
    scenario: Scenario,
    out_dir: Path,
    *,
    progress_callback: Callable[[ProgressEvent], None] | None = None,
    cancel_event: threading.Event | None = None,
) -> RunResult:
    """Run every stage into *out_dir* and write the manifest.

    Stops after ``solve`` when the solution is not optimal; the manifest then
    lists the three artifacts written so far.  Errors from any stage
    propagate unchanged and leave no manifest behind.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {kind: out_dir / name for kind, name in ARTIFACT_FILES.items()}
    stages: dict[str, StageResult] = {}
    logger.info("Running scenario %s into %s", scenario.name, out_dir)

    _notify(progress_callback, "moments", "Building basis")
    stages["basis"] = run_basis(
        scenario, paths["basis"], progress_callback=progress_callback, cancel_event=cancel_event
    )
    _check_cancelled(cancel_event)
    _notify(progress_callback, "projection", "Expanding bids")
    stages["coefficients"] = run_expand(
        scenario,
        paths["basis"],
        paths["coefficients"],
        progress_callback=progress_callback,
        cancel_event=cancel_event,
    )
    _check_cancelled(cancel_event)
    _notify(progress_callback, "solve", "Solving procurement problem")
    stages["solution"] = run_solve(
        scenario, paths["coefficients"], paths["solution"], cancel_event=cancel_event
    )
    _check_cancelled(cancel_event)
    if stages["solution"].value.is_optimal:
        stages["validation"] = run_validate(
            scenario,
            paths["basis"],
            paths["coefficients"],
            paths["solution"],
            out_dir,
            progress_callback=progress_callback,
            cancel_event=cancel_event,
        )

    manifest = Manifest(
        scenario=scenario.name,
        scenario_fingerprint=scenario.fingerprint(),
        tool_version=__version__,
        libraries=_libraries(),
        seed=scenario.validation.seed,
    )
    for kind, stage in stages.items():
        manifest.artifacts.append(_entry(kind, stage.path, out_dir))
        manifest.timings[kind] = stage.wall_time_s
        manifest.files.extend(_entry("csv", f, out_dir) for f in stage.files)
    manifest.timings["total"] = sum(s.wall_time_s for s in stages.values())
    manifest_path = out_dir / MANIFEST_FILE
    write_json(manifest_path, manifest.to_dict())
    logger.info(
        "Run finished in %.2f s; manifest at %s", manifest.timings["total"], manifest_path
    )
    return RunResult(manifest=manifest, manifest_path=manifest_path, stages=stages)
