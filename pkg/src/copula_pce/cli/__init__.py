"""CLI interface for copula-pce."""

from copula_pce.cli.main import ExitCode, main

__all__ = [
    "ExitCode",
    "main",
]
