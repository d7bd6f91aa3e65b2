"""Canonical JSON encoding and checksums.

Every persisted artifact (catalogs, assessment documents, reports) is encoded
the same way: sorted keys, no insignificant whitespace, UTF-8, checksummed
with lowercase hex SHA-256. Byte-determinism is what makes report checksums
and catalog versions meaningful.
"""

import hashlib
import json
from typing import Any


def canonical_bytes(obj: Any) -> bytes:
    """Encode a JSON-compatible tree deterministically."""
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def checksum_of(obj: Any) -> str:
    """Lowercase hex SHA-256 of the canonical encoding of ``obj``."""
    return sha256_hex(canonical_bytes(obj))
