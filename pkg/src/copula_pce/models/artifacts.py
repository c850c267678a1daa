"""Data models for copula-pce artifact files.

Every stage writes one JSON artifact of the form ``{"header": ..., "body": ...}``.
The header ties the body to the scenario and to the artifacts it was derived
from; the run manifest lists every artifact of a ``run`` invocation.  The
JSON Schemas for these documents live in docs/schema/.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

__all__ = [
    "ARTIFACT_KINDS",
    "ARTIFACT_SCHEMA_VERSION",
    "Artifact",
    "ArtifactHeader",
    "Manifest",
    "ManifestEntry",
]

ARTIFACT_SCHEMA_VERSION = 1

ARTIFACT_KINDS: tuple[str, ...] = ("basis", "coefficients", "solution", "validation")
"""Stage order; each kind consumes the artifacts before it."""


@dataclass
class ArtifactHeader:
    """Provenance block of an artifact."""

    kind: str
    tool_version: str
    scenario_fingerprint: str
    body_sha256: str
    upstream: dict[str, str] = field(default_factory=dict)
    """Artifact kind to the body SHA-256 of each upstream artifact."""

    schema_version: int = ARTIFACT_SCHEMA_VERSION
    wall_time_s: float | None = None
    """Stage wall time; left out of reports so they stay byte-reproducible."""

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "kind": self.kind,
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "scenario_fingerprint": self.scenario_fingerprint,
            "upstream": dict(self.upstream),
            "body_sha256": self.body_sha256,
        }
        if self.wall_time_s is not None:
            d["wall_time_s"] = self.wall_time_s
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ArtifactHeader:
        return cls(
            kind=data["kind"],
            tool_version=data["tool_version"],
            scenario_fingerprint=data["scenario_fingerprint"],
            body_sha256=data["body_sha256"],
            upstream=dict(data.get("upstream", {})),
            schema_version=int(data["schema_version"]),
            wall_time_s=data.get("wall_time_s"),
        )


@dataclass
class Artifact:
    header: ArtifactHeader
    body: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {"header": self.header.to_dict(), "body": self.body}


@dataclass
class ManifestEntry:
    """One file written by a run."""

    kind: str
    path: str
    sha256: str

    def to_dict(self) -> dict[str, str]:
        return {"kind": self.kind, "path": self.path, "sha256": self.sha256}


@dataclass
class Manifest:
    """Index of a ``run`` invocation: artifacts, versions, seeds and stage timings."""

    scenario: str
    scenario_fingerprint: str
    tool_version: str
    libraries: dict[str, str]
    seed: int
    artifacts: list[ManifestEntry] = field(default_factory=list)
    files: list[ManifestEntry] = field(default_factory=list)
    """CSV side outputs (tables and histograms)."""

    timings: dict[str, float] = field(default_factory=dict)
    """Stage name to wall time in seconds."""

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "scenario_fingerprint": self.scenario_fingerprint,
            "tool_version": self.tool_version,
            "libraries": dict(self.libraries),
            "seed": self.seed,
            "artifacts": [a.to_dict() for a in self.artifacts],
            "files": [f.to_dict() for f in self.files],
            "timings": dict(self.timings),
        }
