"""Progress reporting event type for copula-pce.

The ``ProgressEvent`` dataclass is the contract between the long-running
numerical stages (moment table, projection, validation sampling) and their
callers.  The CLI turns the events into a tqdm bar.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["ProgressEvent"]


@dataclass
class ProgressEvent:
    """Progress report emitted by a pipeline stage.

    Attributes:
        phase: One of ``"moments"``, ``"projection"``, ``"solve"``,
            ``"validation"``.
        items_total: Total work items in the phase, or ``None`` when unknown.
        items_completed: Items finished so far.
        current: Label of the item just finished (monomial product, bid id).
        message: Optional human-readable log message.
    """

    phase: str
    items_total: int | None
    items_completed: int
    current: str | None
    message: str | None = None
