"""Data models for copula-pce artifact files."""

from copula_pce.models.artifacts import (
    ARTIFACT_KINDS,
    ARTIFACT_SCHEMA_VERSION,
    Artifact,
    ArtifactHeader,
    Manifest,
    ManifestEntry,
)

__all__ = [
    "ARTIFACT_KINDS",
    "ARTIFACT_SCHEMA_VERSION",
    "Artifact",
    "ArtifactHeader",
    "Manifest",
    "ManifestEntry",
]
