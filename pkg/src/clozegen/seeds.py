"""Process-stable derivation of per-record RNG streams.

Every piece of randomness in the pipeline comes from a stream keyed by
(master seed, stage name, record id). Keys are hashed with BLAKE2b rather
than Python's builtin ``hash`` so the derivation does not depend on
``PYTHONHASHSEED``, and adding or removing one record never perturbs the
randomness of another.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(master_seed: int, *parts: object) -> int:
    """Collapse (master_seed, *parts) into a 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master_seed)).encode("utf-8"))
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest(), "big")


def stream(master_seed: int, *parts: object) -> random.Random:
    """A fresh ``random.Random`` whose state depends only on the key."""
    return random.Random(derive_seed(master_seed, *parts))
