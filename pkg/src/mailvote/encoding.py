"""Canonical byte encodings and domain-tagged hashing.

Every hash computed anywhere in the package goes through tagged_hash, so all
preimages share one framing: a one-byte tag length, the ASCII tag, then each
part preceded by its 8-byte big-endian length. Distinct tags therefore give
independent hash functions and no concatenation ambiguity is possible.

Canonical JSON (sorted keys, no whitespace, hex strings for bytes) is the
text form used for bulletin-board bodies and reports; two implementations
serializing the same value must produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json

HASH_BYTES = 32
ZERO_DIGEST = b"\x00" * HASH_BYTES


def tagged_hash(tag: str, *parts: bytes) -> bytes:
    """SHA-256 over a domain tag and length-prefixed parts."""
    t = tag.encode("ascii")
    if not 0 < len(t) < 256:
        raise ValueError("tag must be 1..255 ASCII characters")
    h = hashlib.sha256()
    h.update(len(t).to_bytes(1, "big"))
    h.update(t)
    for p in parts:
        h.update(len(p).to_bytes(8, "big"))
        h.update(p)
    return h.digest()


def int_be(value: int, width: int = 8) -> bytes:
    return value.to_bytes(width, "big")


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, minimal separators, ASCII only.

    Floats are rejected; canonical float formatting is not portable and no
    board body needs one.
    """
    _reject_floats(obj)
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def _reject_floats(obj) -> None:
    if isinstance(obj, float):
        raise ValueError("floats are not canonical-JSON serializable")
    if isinstance(obj, dict):
        for k, v in obj.items():
            if not isinstance(k, str):
                raise ValueError("canonical JSON keys must be strings")
            _reject_floats(v)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            _reject_floats(v)
    elif not isinstance(obj, (str, int, bool, type(None))):
        raise ValueError(f"not canonical-JSON serializable: {type(obj).__name__}")
