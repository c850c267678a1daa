"""Command-line interface for copula-pce.

Provides the ``main()`` click group that serves as the entry point for
``copula-pce`` (console script) and ``python -m copula_pce``.

The group uses :class:`DefaultGroup` to fall back to the ``run``
subcommand when no explicit subcommand is given.  Every subcommand maps the
exception hierarchy onto :class:`ExitCode`.
"""

from __future__ import annotations

import logging
import signal
import sys
import threading
import uuid
from enum import IntEnum
from pathlib import Path
from typing import TYPE_CHECKING, Any

import click

from copula_pce._version import __version__

if TYPE_CHECKING:
    from collections.abc import Callable

    from copula_pce.config.types import Scenario

__all__ = [
    "DefaultGroup",
    "ExitCode",
    "configure_logging",
    "main",
]

logger = logging.getLogger("copula_pce")


# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------


class ExitCode(IntEnum):
    """Structured exit codes for CLI invocations."""

    SUCCESS = 0
    NUMERICAL_FAILURE = 1
    INPUT_ERROR = 2
    RESOURCE_ERROR = 3
    RUNTIME_ERROR = 4
    INTERRUPTED = 5


# ---------------------------------------------------------------------------
# Logging setup
# ---------------------------------------------------------------------------


class SessionFilter(logging.Filter):
    """Logging filter that attaches the run identifier to each record."""

    def __init__(self, session_id: str = "") -> None:
        super().__init__()
        self.session_id = session_id

    def filter(self, record: logging.LogRecord) -> bool:
        record.session_id = self.session_id  # type: ignore[attr-defined]
        return True


def configure_logging(
    *,
    verbose: int = 0,
    quiet: bool = False,
    log_file: Path | None = None,
    session_id: str = "",
) -> None:
    """Set up package-scoped logging to stderr and optionally to a file.

    Args:
        verbose: Verbosity count (0 = WARNING, 1 = INFO, 2+ = DEBUG).
        quiet: When ``True``, overrides *verbose* and sets CRITICAL.
        log_file: When set, also write log output to this file.
        session_id: Run identifier attached to every record.
    """
    if quiet:
        level = logging.CRITICAL
    else:
        level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)

    pkg_logger = logging.getLogger("copula_pce")
    pkg_logger.setLevel(level)

    # Remove existing handlers to avoid duplicate output on re-invocation
    for handler in pkg_logger.handlers[:]:
        pkg_logger.removeHandler(handler)
    session_filter = SessionFilter(session_id)

    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(level)
    handler.addFilter(session_filter)
    fmt = "%(levelname)s: %(message)s"
    if verbose >= 2:
        fmt = "%(asctime)s %(session_id)s %(levelname)s [%(name)s] %(message)s"
    handler.setFormatter(logging.Formatter(fmt))
    pkg_logger.addHandler(handler)

    if log_file is not None:
        from copula_pce.log_file import make_file_handler

        file_handler = make_file_handler(log_file, session_id=session_id)
        file_handler.setLevel(min(level, logging.INFO))
        file_handler.addFilter(session_filter)
        pkg_logger.setLevel(min(level, logging.INFO))
        pkg_logger.addHandler(file_handler)
        pkg_logger.info("Log file: %s", file_handler.baseFilename)


# ---------------------------------------------------------------------------
# Signal handling
# ---------------------------------------------------------------------------


def _install_signal_handlers(cancel_event: threading.Event) -> None:
    """Install a two-phase SIGINT handler for cooperative cancellation.

    First ``Ctrl+C``: set *cancel_event*; the pipeline stops before the next
    integral.  Second ``Ctrl+C``: restore default behavior and re-raise.
    """

    def _handle_sigint(signum: int, frame: Any) -> None:
        if cancel_event.is_set():
            signal.signal(signal.SIGINT, signal.SIG_DFL)
            raise KeyboardInterrupt
        cancel_event.set()
        print(
            "\nInterrupt received, stopping after the current integral. "
            "Press Ctrl+C again to force quit.",
            file=sys.stderr,
        )

    if threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGINT, _handle_sigint)


# ---------------------------------------------------------------------------
# Progress callback
# ---------------------------------------------------------------------------

_PHASE_LABELS = {
    "moments": "Moments",
    "projection": "Projection",
}


def _make_progress_callback(verbose: int) -> Callable[[Any], None] | None:
    """tqdm bar for the moment-table and projection phases.

    Returns ``None`` unless stderr is a TTY and ``verbose >= 1``.
    """
    if verbose < 1 or not sys.stderr.isatty():
        return None

    from tqdm import tqdm

    bar: Any = None
    bar_phase: str | None = None

    def _callback(event: Any) -> None:
        nonlocal bar, bar_phase
        if event.phase not in _PHASE_LABELS or event.items_total is None:
            if event.message:
                logger.info(event.message)
            return
        if bar is None or bar_phase != event.phase:
            if bar is not None:
                bar.close()
            bar = tqdm(
                total=event.items_total,
                desc=_PHASE_LABELS[event.phase],
                file=sys.stderr,
                unit="integral",
                leave=True,
            )
            bar_phase = event.phase
        bar.update(event.items_completed - bar.n)
        if event.current:
            bar.set_postfix_str(event.current, refresh=False)
        if event.items_completed >= event.items_total:
            bar.close()
            bar, bar_phase = None, None

    return _callback


# ---------------------------------------------------------------------------
# DefaultGroup: subcommand fallback
# ---------------------------------------------------------------------------


class DefaultGroup(click.Group):
    """Click group that falls back to a default command.

    When the first argument is not a recognized subcommand or a group-level
    option (``--help``, ``--version``), the *default_cmd_name* subcommand is
    injected automatically.
    """

    default_cmd_name: str | None = None

    def parse_args(self, ctx: click.Context, args: list[str]) -> list[str]:
        if self.default_cmd_name:
            # get_params(ctx) includes the dynamically added --help.
            group_opts: set[str] = set()
            for param in self.get_params(ctx):
                group_opts.update(param.opts)
                group_opts.update(param.secondary_opts)

            if not args:
                args = [self.default_cmd_name]
            elif args[0] not in self.commands and args[0] not in group_opts:
                args = [self.default_cmd_name, *args]
        return super().parse_args(ctx, args)


# ---------------------------------------------------------------------------
# CLI group
# ---------------------------------------------------------------------------


@click.group(
    name="copula-pce",
    cls=DefaultGroup,
    context_settings={"help_option_names": ["-h", "--help"]},
    help=(
        "Polynomial chaos expansion of reserve bids under Gaussian-copula "
        "dependence, chance-constrained procurement, and Monte-Carlo "
        "validation.\n\n"
        "Stages: basis -> expand -> solve -> validate.  When no subcommand "
        "is given, 'run' is used by default."
    ),
)
@click.version_option(version=__version__, prog_name="copula-pce")
def main() -> None:
    """copula-pce CLI group."""


main.default_cmd_name = "run"  # type: ignore[attr-defined]


# ---------------------------------------------------------------------------
# Shared options
# ---------------------------------------------------------------------------


def _scenario_options(func: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option(
            "--scenario",
            "scenario",
            required=True,
            help="Scenario JSON file, or the name of a canonical scenario (normal8, beta8).",
        ),
        click.option("--seed", type=int, default=None, help="Override the validation seed."),
        click.option(
            "--k",
            "k",
            type=click.IntRange(1, 64),
            default=None,
            help="Override the quadrature rule order.",
        ),
        click.option(
            "--samples",
            type=click.IntRange(min=2),
            default=None,
            help="Override the Monte-Carlo sample count.",
        ),
        click.option(
            "--threads",
            type=click.IntRange(min=1),
            default=None,
            help="Worker threads for the moment integrals.",
        ),
        click.option(
            "--identity-correlation",
            is_flag=True,
            default=False,
            help="Replace the scenario correlation matrix by the identity.",
        ),
        click.option(
            "-v",
            "--verbose",
            count=True,
            help="Increase verbosity. Repeat for more detail (-vv).",
        ),
        click.option(
            "-q",
            "--quiet",
            is_flag=True,
            default=False,
            help="Suppress all non-error output.",
        ),
        click.option(
            "--log-file",
            "log_file",
            default=None,
            is_flag=False,
            flag_value="",
            help=(
                "Also write the log to a file. Without a path argument, writes "
                "copula-pce.log next to the output."
            ),
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _load(params: dict[str, Any]) -> Scenario:
    from copula_pce.config.loader import load_scenario

    overrides = {
        "seed": params["seed"],
        "k": params["k"],
        "samples": params["samples"],
        "threads": params["threads"],
        "identity_correlation": params["identity_correlation"],
    }
    return load_scenario(params["scenario"], overrides)


def _execute(
    params: dict[str, Any],
    out: Path,
    action: Callable[[Scenario, threading.Event, Callable[[Any], None] | None], None],
    what: str,
) -> None:
    """Configure logging and signals, run *action*, and exit with its code."""
    from copula_pce.exceptions import (
        NotPositiveDefiniteError,
        PceCancellationError,
        PceConfigError,
        PceError,
        PceInfeasibleError,
        PceNumericalError,
        PceParameterError,
        PceResourceError,
    )
    from copula_pce.log_file import default_log_path

    log_file = params["log_file"]
    log_path = None
    if log_file is not None:
        log_path = Path(log_file) if log_file.strip() else default_log_path(out)
    configure_logging(
        verbose=params["verbose"],
        quiet=params["quiet"],
        log_file=log_path,
        session_id=uuid.uuid4().hex[:12],
    )

    cancel_event = threading.Event()
    _install_signal_handlers(cancel_event)

    try:
        scenario = _load(params)
        action(scenario, cancel_event, _make_progress_callback(params["verbose"]))
        logger.info("%s complete.", what)
        sys.exit(ExitCode.SUCCESS)

    except PceCancellationError:
        logger.warning("Operation interrupted, exiting cleanly.")
        sys.exit(ExitCode.INTERRUPTED)

    except (PceConfigError, PceParameterError) as exc:
        logger.error("Input error: %s", exc)
        sys.exit(ExitCode.INPUT_ERROR)

    except PceResourceError as exc:
        logger.error("Resource limit: %s", exc)
        sys.exit(ExitCode.RESOURCE_ERROR)

    except PceInfeasibleError as exc:
        logger.error("Infeasible: %s", exc)
        sys.exit(ExitCode.NUMERICAL_FAILURE)

    except (NotPositiveDefiniteError, PceNumericalError) as exc:
        logger.error("Numerical failure: %s", exc)
        sys.exit(ExitCode.NUMERICAL_FAILURE)

    except PceError as exc:
        logger.error("%s failed: %s", what, exc)
        sys.exit(ExitCode.RUNTIME_ERROR)

    except KeyboardInterrupt:
        logger.warning("Forced termination.")
        sys.exit(ExitCode.INTERRUPTED)

    except SystemExit:
        raise

    except Exception:
        logger.exception("Unexpected error during %s", what.lower())
        sys.exit(ExitCode.RUNTIME_ERROR)


def _check_solution(solution: Any) -> None:
    """Turn a reported non-optimal solve into the matching exception."""
    from copula_pce.exceptions import PceInfeasibleError, PceNumericalError

    if solution.status == "infeasible":
        diagnosis = solution.diagnosis or {}
        raise PceInfeasibleError(
            "procurement problem is infeasible; binding constraint "
            f"{diagnosis.get('constraint')} needs relaxation {diagnosis.get('relaxation')}"
        )
    if not solution.is_optimal:
        raise PceNumericalError(f"solver returned status {solution.status!r}")


_ARTIFACT_PATH = click.Path(dir_okay=False, path_type=Path)
_DIR_PATH = click.Path(file_okay=False, path_type=Path)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


@main.command("basis")
@_scenario_options
@click.option(
    "--out", type=_ARTIFACT_PATH, default=Path("basis.json"), show_default=True,
    help="Basis artifact to write.",
)
def basis_cmd(out: Path, **params: Any) -> None:
    """Build the orthonormal polynomial basis."""
    from copula_pce.core.pipeline import run_basis

    def _action(scenario: Scenario, cancel: threading.Event, progress: Any) -> None:
        result = run_basis(scenario, out, progress_callback=progress, cancel_event=cancel)
        click.echo(f"{result.path}: {result.value.size} basis polynomials")

    _execute(params, out, _action, "Basis")


@main.command("expand")
@_scenario_options
@click.option(
    "--basis", "basis_path", type=_ARTIFACT_PATH, default=Path("basis.json"), show_default=True,
    help="Basis artifact to read.",
)
@click.option(
    "--out", type=_ARTIFACT_PATH, default=Path("coefficients.json"), show_default=True,
    help="Coefficient artifact to write.",
)
def expand_cmd(basis_path: Path, out: Path, **params: Any) -> None:
    """Project every bid onto the basis."""
    from copula_pce.core.pipeline import run_expand

    def _action(scenario: Scenario, cancel: threading.Event, progress: Any) -> None:
        result = run_expand(
            scenario, basis_path, out, progress_callback=progress, cancel_event=cancel
        )
        worst = max(result.artifact.body["expansion_errors"].values())
        click.echo(f"{result.path}: {result.value.n_bids} bids, max relative error {worst:.3g}")

    _execute(params, out, _action, "Expansion")


@main.command("solve")
@_scenario_options
@click.option(
    "--coefficients", "coefficients_path", type=_ARTIFACT_PATH,
    default=Path("coefficients.json"), show_default=True,
    help="Coefficient artifact to read.",
)
@click.option(
    "--out", type=_ARTIFACT_PATH, default=Path("solution.json"), show_default=True,
    help="Solution artifact to write.",
)
def solve_cmd(coefficients_path: Path, out: Path, **params: Any) -> None:
    """Solve the chance-constrained procurement problem."""
    from copula_pce.core.pipeline import run_solve

    def _action(scenario: Scenario, cancel: threading.Event, progress: Any) -> None:
        result = run_solve(scenario, coefficients_path, out, cancel_event=cancel)
        solution = result.value
        click.echo(f"{result.path}: status {solution.status}, objective {solution.objective}")
        _check_solution(solution)

    _execute(params, out, _action, "Solve")


@main.command("validate")
@_scenario_options
@click.option(
    "--basis", "basis_path", type=_ARTIFACT_PATH, default=Path("basis.json"), show_default=True,
    help="Basis artifact to read.",
)
@click.option(
    "--coefficients", "coefficients_path", type=_ARTIFACT_PATH,
    default=Path("coefficients.json"), show_default=True,
    help="Coefficient artifact to read.",
)
@click.option(
    "--solution", "solution_path", type=_ARTIFACT_PATH,
    default=Path("solution.json"), show_default=True,
    help="Solution artifact to read.",
)
@click.option(
    "--out", type=_DIR_PATH, default=Path("."), show_default=True,
    help="Directory for the report, CSV tables and histograms.",
)
def validate_cmd(
    basis_path: Path, coefficients_path: Path, solution_path: Path, out: Path, **params: Any
) -> None:
    """Monte-Carlo check of the chance constraints, dependent vs independent."""
    from copula_pce.core.pipeline import run_validate

    def _action(scenario: Scenario, cancel: threading.Event, progress: Any) -> None:
        result = run_validate(
            scenario,
            basis_path,
            coefficients_path,
            solution_path,
            out,
            progress_callback=progress,
            cancel_event=cancel,
        )
        _echo_summary(result.artifact.body["summary"])
        click.echo(f"{result.path}: {len(result.files)} CSV files")

    _execute(params, out, _action, "Validation")


@main.command("run")
@_scenario_options
@click.option(
    "--out", type=_DIR_PATH, default=Path("copula-pce-run"), show_default=True,
    help="Directory for all artifacts and the manifest.",
)
def run_cmd(out: Path, **params: Any) -> None:
    """Run basis, expand, solve and validate (default command)."""
    from copula_pce.core.pipeline import run_all

    def _action(scenario: Scenario, cancel: threading.Event, progress: Any) -> None:
        result = run_all(scenario, out, progress_callback=progress, cancel_event=cancel)
        if "validation" in result.stages:
            _echo_summary(result.stages["validation"].artifact.body["summary"])
        click.echo(f"{result.manifest_path}: {len(result.manifest.artifacts)} artifacts")
        _check_solution(result.solution)

    _execute(params, out, _action, "Run")


@main.command("scenario")
@click.argument("name")
@click.option(
    "--out", type=_ARTIFACT_PATH, default=None,
    help="File to write; prints to stdout when omitted.",
)
def scenario_cmd(name: str, out: Path | None) -> None:
    """Export a canonical scenario as editable JSON."""
    from copula_pce.config.canonical import canonical_scenario
    from copula_pce.core.serializer import dumps, write_json
    from copula_pce.exceptions import PceConfigError

    try:
        document = canonical_scenario(name)
    except PceConfigError as exc:
        click.echo(f"Error: {exc}", err=True)
        sys.exit(ExitCode.INPUT_ERROR)
    if out is None:
        click.echo(dumps(document).decode("utf-8"), nl=False)
    else:
        write_json(out, document)
        click.echo(f"Wrote {name} to {out}")
    sys.exit(ExitCode.SUCCESS)


def _echo_summary(rows: list[dict[str, Any]]) -> None:
    header = f"{'constraint':<10} {'bound':>12} {'p_dep':>12} {'p_ind':>12} {'viol_dep':>9} {'viol_ind':>9}"
    click.echo(header)
    for row in rows:
        lower = row["sense"] == "lower"
        dep = row["dependent_percentile_lo" if lower else "dependent_percentile_hi"]
        ind = row["independent_percentile_lo" if lower else "independent_percentile_hi"]
        click.echo(
            f"{row['constraint']:<10} {row['bound']:>12.6g} {dep:>12.6g} {ind:>12.6g} "
            f"{row['dependent_violation_rate']:>9.4f} {row['independent_violation_rate']:>9.4f}"
        )


if __name__ == "__main__":
    main()
