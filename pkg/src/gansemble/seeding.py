"""Deterministic seed derivation.

All randomness in a run flows from a single master seed. Sub-seeds are
derived by hashing the master seed together with a context key, so every
task (a split, a generator fit, one sweep point) gets a stable stream that
does not depend on execution order or worker count.
"""

from __future__ import annotations

import hashlib

_MAX_SEED = 2**63 - 1


def _canon(part) -> str:
    if isinstance(part, bool):
        raise TypeError("bool is not a valid seed-key part")
    if isinstance(part, float):
        return repr(part)
    if isinstance(part, int):
        return str(part)
    if isinstance(part, str):
        return part
    raise TypeError(f"unsupported seed-key part type: {type(part).__name__}")


def derive_seed(master_seed: int, *parts) -> int:
    """Derive a child seed from ``master_seed`` and a context key.

    Parts may be strings, ints, or floats; floats are canonicalized via
    ``repr`` so 0.5 and 0.50 hash identically.
    """
    key = "|".join([str(int(master_seed))] + [_canon(p) for p in parts])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % _MAX_SEED
