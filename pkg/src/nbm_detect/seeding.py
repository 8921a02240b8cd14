"""Seed derivation.

All randomness in a run flows from one master seed.  A child seed is the
first eight bytes (little endian) of ``sha256("<master>/<label>/<ordinal>/...")``,
so any sub-stream can be regenerated without replaying the others.
"""

import hashlib


def derive_seed(master_seed: int, label: str, *ordinals: int) -> int:
    if master_seed < 0:
        raise ValueError("master_seed must be non-negative")
    key = "/".join([str(int(master_seed)), label, *(str(int(o)) for o in ordinals)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
