"""Content hashing for copula-pce artifacts.

SHA-256 digests identify scenario fingerprints, artifact bodies and artifact
files.  Body hashes are taken over the canonical compact JSON encoding
(sorted keys) so they survive a write/read round trip.
"""

from __future__ import annotations

import hashlib
from typing import TYPE_CHECKING, Any

import orjson

from copula_pce.exceptions import PceCancellationError

if TYPE_CHECKING:
    import threading
    from pathlib import Path

__all__ = [
    "CHUNK_SIZE",
    "canonical_json",
    "hash_bytes",
    "hash_file",
    "hash_json",
    "json_default",
]

CHUNK_SIZE: int = 65_536
"""Read buffer size in bytes (64 KB) for streaming file hashing."""


def json_default(obj: Any) -> Any:
    """orjson ``default`` hook: numpy arrays and scalars become Python builtins."""
    tolist = getattr(obj, "tolist", None)
    if tolist is not None:
        return tolist()
    raise TypeError(f"Type is not JSON serializable: {type(obj).__name__}")


def canonical_json(obj: Any) -> bytes:
    """Compact, key-sorted JSON of *obj* after a JSON round trip.

    numpy arrays and scalars are converted first, so an object and its
    re-loaded JSON form encode identically.
    """
    raw = orjson.dumps(obj, default=json_default, option=orjson.OPT_SERIALIZE_NUMPY)
    return orjson.dumps(orjson.loads(raw), option=orjson.OPT_SORT_KEYS)


def hash_bytes(data: bytes) -> str:
    """Lowercase hex SHA-256 of *data*."""
    return hashlib.sha256(data).hexdigest()


def hash_json(obj: Any) -> str:
    """SHA-256 of the canonical JSON encoding of *obj*."""
    return hash_bytes(canonical_json(obj))


def hash_file(path: Path, *, cancel_event: threading.Event | None = None) -> str:
    """SHA-256 of a file's bytes, read in :data:`CHUNK_SIZE` chunks.

    Raises:
        PceCancellationError: ``cancel_event`` was set during hashing.
    """
    hasher = hashlib.sha256()
    with open(path, "rb") as fh:
        while chunk := fh.read(CHUNK_SIZE):
            if cancel_event is not None and cancel_event.is_set():
                raise PceCancellationError("Hashing cancelled")
            hasher.update(chunk)
    return hasher.hexdigest()
