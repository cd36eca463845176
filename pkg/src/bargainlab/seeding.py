from __future__ import annotations

import hashlib


def derive_seed(base: int, *keys: int | str) -> int:
    """Deterministic 63-bit child seed of ``base`` for the given index path.

    Hash-based rather than XOR so that distinct (pair, game) paths never collide.
    """
    token = ":".join(str(k) for k in (base, *keys))
    return int.from_bytes(hashlib.sha256(token.encode()).digest()[:8], "big") >> 1
