"""Stable seed derivation.

Every random stream in a run is keyed by a tuple of plain values and hashed,
so results do not depend on scheduling order or on which debates were resumed.
"""

from __future__ import annotations

import hashlib
import random

_MASK64 = (1 << 64) - 1


def derive_seed(*parts: object) -> int:
    """Hash ``parts`` into a 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little") & _MASK64


def stream(*parts: object) -> random.Random:
    return random.Random(derive_seed(*parts))
