"""JSON serialization of artifacts, reports and manifests for copula-pce.

Output is orjson with 2-space indentation, sorted keys and native numpy
support; floats use the shortest representation that round-trips.
Loading an artifact re-derives its body hash and checks the artifact kind
and, when given, the scenario fingerprint and upstream hashes.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Any

import orjson

from copula_pce._version import __version__
from copula_pce.core.hashing import hash_json, json_default
from copula_pce.exceptions import ArtifactIntegrityError, PceConfigError
from copula_pce.models.artifacts import ARTIFACT_SCHEMA_VERSION, Artifact, ArtifactHeader

if TYPE_CHECKING:
    from collections.abc import Mapping
    from pathlib import Path

__all__ = [
    "dumps",
    "read_artifact",
    "read_json",
    "write_artifact",
    "write_json",
]

logger = logging.getLogger(__name__)

_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_SORT_KEYS


def dumps(obj: Any) -> bytes:
    """Pretty-printed JSON bytes with a trailing newline."""
    return orjson.dumps(obj, default=json_default, option=_OPTIONS) + b"\n"


def write_json(path: Path, obj: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(obj))
    logger.debug("Wrote %s", path)


def read_json(path: Path) -> Any:
    """Parse a JSON file.

    Raises:
        PceConfigError: The file is missing, unreadable or not valid JSON.
    """
    try:
        return orjson.loads(path.read_bytes())
    except FileNotFoundError as exc:
        raise PceConfigError(f"File not found: {path}") from exc
    except orjson.JSONDecodeError as exc:
        raise PceConfigError(f"Invalid JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise PceConfigError(f"Cannot read {path}: {exc}") from exc


def write_artifact(
    path: Path,
    kind: str,
    body: Mapping[str, Any],
    *,
    scenario_fingerprint: str,
    upstream: Mapping[str, str] | None = None,
    wall_time_s: float | None = None,
) -> Artifact:
    """Write ``{"header", "body"}`` to *path* and return the artifact as re-loaded."""
    # Normalise numpy values so the returned body equals what a reader sees.
    plain = orjson.loads(dumps(dict(body)))
    header = ArtifactHeader(
        kind=kind,
        tool_version=__version__,
        scenario_fingerprint=scenario_fingerprint,
        body_sha256=hash_json(plain),
        upstream=dict(upstream or {}),
        wall_time_s=wall_time_s,
    )
    artifact = Artifact(header=header, body=plain)
    write_json(path, artifact.to_dict())
    logger.info("Wrote %s artifact to %s", kind, path)
    return artifact


def read_artifact(
    path: Path,
    kind: str,
    *,
    scenario_fingerprint: str | None = None,
    upstream: Mapping[str, str] | None = None,
) -> Artifact:
    """Load and verify an artifact.

    Raises:
        PceConfigError: The file cannot be read or parsed.
        ArtifactIntegrityError: Wrong kind or schema version, body hash
            mismatch, scenario fingerprint mismatch, or an upstream hash that
            differs from the expected one.
    """
    data = read_json(path)
    if not isinstance(data, dict) or "header" not in data or "body" not in data:
        raise ArtifactIntegrityError(f"{path} is not a copula-pce artifact")
    try:
        header = ArtifactHeader.from_dict(data["header"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactIntegrityError(f"{path} has a malformed header: {exc}") from exc

    if header.kind != kind:
        raise ArtifactIntegrityError(f"{path} is a {header.kind!r} artifact, expected {kind!r}")
    if header.schema_version != ARTIFACT_SCHEMA_VERSION:
        raise ArtifactIntegrityError(
            f"{path} has schema version {header.schema_version}, "
            f"expected {ARTIFACT_SCHEMA_VERSION}"
        )
    actual = hash_json(data["body"])
    if actual != header.body_sha256:
        raise ArtifactIntegrityError(
            f"{path} body hash {actual} does not match its header ({header.body_sha256})"
        )
    if scenario_fingerprint is not None and header.scenario_fingerprint != scenario_fingerprint:
        raise ArtifactIntegrityError(
            f"{path} was produced from a different scenario "
            f"({header.scenario_fingerprint[:12]} != {scenario_fingerprint[:12]})"
        )
    for up_kind, expected in (upstream or {}).items():
        recorded = header.upstream.get(up_kind)
        if recorded != expected:
            raise ArtifactIntegrityError(
                f"{path} was derived from a different {up_kind} artifact "
                f"({str(recorded)[:12]} != {expected[:12]})"
            )
    return Artifact(header=header, body=data["body"])
