"""Canonical, platform-independent encoding of message payloads.

Every payload that travels through the simulator is encoded once, at send
time.  The encoding determines the byte length charged to the bit counters
and the digest recorded in the trace, so it has to be stable across runs,
platforms and insertion orders.
"""

from __future__ import annotations

import hashlib
from fractions import Fraction


def encode(obj) -> bytes:
    out = []
    _enc(obj, out)
    return b"".join(out)


def _enc(obj, out) -> None:
    if obj is None:
        out.append(b"N;")
    elif obj is True:
        out.append(b"T;")
    elif obj is False:
        out.append(b"F;")
    elif isinstance(obj, int):
        out.append(b"i%d;" % obj)
    elif isinstance(obj, bytes):
        out.append(b"b%d:" % len(obj))
        out.append(obj)
    elif isinstance(obj, str):
        raw = obj.encode("utf-8")
        out.append(b"s%d:" % len(raw))
        out.append(raw)
    elif isinstance(obj, (tuple, list)):
        out.append(b"l%d:" % len(obj))
        for item in obj:
            _enc(item, out)
    elif isinstance(obj, (set, frozenset)):
        items = sorted(encode(item) for item in obj)
        out.append(b"e%d:" % len(items))
        out.extend(items)
    elif isinstance(obj, dict):
        items = sorted((encode(k), encode(v)) for k, v in obj.items())
        out.append(b"d%d:" % len(items))
        for k, v in items:
            out.append(k)
            out.append(v)
    elif isinstance(obj, Fraction):
        out.append(b"q%d/%d;" % (obj.numerator, obj.denominator))
    elif hasattr(obj, "__encode__"):
        _enc(obj.__encode__(), out)
    else:
        raise TypeError(f"cannot canonically encode {type(obj).__name__}")


def digest(data: bytes, width_bits: int = 64) -> bytes:
    """Short digest used for trace lines and in-protocol message digests."""
    return hashlib.blake2b(data, digest_size=max(4, width_bits // 8)).digest()


def digest_int(data: bytes, width_bits: int) -> int:
    return int.from_bytes(digest(data, width_bits), "big")


def seed_int(*parts) -> int:
    """Derive a 64-bit PRNG seed from arbitrary encodable parts."""
    return int.from_bytes(digest(encode(tuple(parts)), 64), "big")
