"""Stable seed derivation.

Seeds are derived from sha256 over the string forms of the parts, never
from Python's builtin hash (randomized per process) and never from
iteration order, so parallel schedules cannot change them.
"""
from __future__ import annotations

import hashlib

_SEP = "\x1f"


def stable_seed(*parts: object) -> int:
    """A 63-bit nonnegative seed derived deterministically from parts."""
    digest = hashlib.sha256(_SEP.join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
