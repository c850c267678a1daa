"""Log file support for copula-pce.

``--log-file`` without a path writes ``copula-pce.log`` next to the
artifacts of the invocation; with a path the log goes there.
"""

from __future__ import annotations

import logging
from pathlib import Path

__all__ = [
    "DEFAULT_LOG_NAME",
    "default_log_path",
    "make_file_handler",
]

DEFAULT_LOG_NAME = "copula-pce.log"


def default_log_path(out: Path) -> Path:
    """Log file location for an output path (a directory or an artifact file)."""
    directory = out if out.suffix == "" else out.parent
    return directory / DEFAULT_LOG_NAME


def make_file_handler(log_path: Path, *, session_id: str = "") -> logging.FileHandler:
    """Create a line-buffered ``FileHandler`` with the verbose CLI format.

    Args:
        log_path: Log file path; missing parent directories are created.
        session_id: Run identifier included in every line.
    """
    log_path = Path(log_path)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(log_path, encoding="utf-8")

    # Records must reach the file while long stages are still running.
    if hasattr(handler.stream, "reconfigure"):
        handler.stream.reconfigure(line_buffering=True)

    if session_id:
        fmt = f"%(asctime)s  {session_id}  %(levelname)-9s %(name)s  %(message)s"
    else:
        fmt = "%(asctime)s  %(levelname)-9s %(name)s  %(message)s"
    handler.setFormatter(logging.Formatter(fmt, datefmt="%Y-%m-%d %H:%M:%S"))
    return handler
