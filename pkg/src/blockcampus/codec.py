"""Canonical byte encoding and hashing.

Every hash, signature digest, and state root in the system is computed over
the output of :func:`canonical_encode`, so it must be bit-exact across nodes
and reimplementable in other languages (the browser client carries its own
copy). The encoding is compact UTF-8 JSON with bytewise-sorted object keys;
byte strings are rendered as lowercase hex.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


class EncodingError(ValueError):
    """Raised when a value falls outside the canonical-encodable domain."""


def _normalize(value: Any) -> Any:
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        return value
    if value is None:
        return None
    if isinstance(value, (bytes, bytearray)):
        return bytes(value).hex()
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            if not isinstance(k, str):
                raise EncodingError(f"map keys must be strings, got {type(k).__name__}")
            out[k] = _normalize(v)
        return out
    raise EncodingError(f"cannot canonically encode {type(value).__name__}")


def canonical_encode(value: Any) -> bytes:
    """Encode a structured value as deterministic compact JSON bytes.

    Domain: str, int, bool, None, bytes (hex-rendered), lists, and dicts with
    string keys. Object keys are sorted bytewise ascending; no insignificant
    whitespace. Floats are rejected: nothing consensus-relevant may be
    floating point.
    """
    normalized = _normalize(value)
    return json.dumps(
        normalized, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def sha256(data: bytes) -> bytes:
    """SHA-256 digest (32 bytes)."""
    return hashlib.sha256(data).digest()


def hash_of(value: Any) -> bytes:
    """SHA-256 over the canonical encoding of a structured value."""
    return sha256(canonical_encode(value))


def to_hex(b: bytes) -> str:
    return b.hex()


def from_hex(s: str) -> bytes:
    if s != s.lower():
        raise EncodingError(f"hex must be lowercase: {s!r}")
    return bytes.fromhex(s)
