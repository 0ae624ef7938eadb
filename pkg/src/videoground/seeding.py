"""Deterministic, platform-stable randomness derivation.

Every reproducibility guarantee in this package flows through the helpers
here: a (seed, key parts...) tuple is hashed with SHA-256 and mapped to a
64-bit integer or a unit-interval float.  Python's builtin ``hash()`` is
never used for anything persisted or compared across runs (it is salted
per process), and nothing here depends on platform word size or RNG
library versions.
"""

from __future__ import annotations

import hashlib
import math
from typing import Sequence

_SEP = "\x1f"  # unit separator: cannot collide with str() of ordinary keys

__all__ = ["stable_u64", "unit_draw", "derive_seed", "hash_unit_vector", "hash_bytes"]


def _digest(parts: Sequence[object]) -> bytes:
    joined = _SEP.join(str(p) for p in parts)
    return hashlib.sha256(joined.encode("utf-8")).digest()


def stable_u64(*parts: object) -> int:
    """Collapse key parts to a uniform 64-bit unsigned integer."""
    return int.from_bytes(_digest(parts)[:8], "big")


def unit_draw(*parts: object) -> float:
    """Deterministic draw in [0, 1) keyed by ``parts``.

    Used for Bernoulli decisions such as box/segment dropping: the draw for
    a given key never changes, regardless of how many other draws happen
    around it (counter-based, not stream-based).
    """
    return stable_u64(*parts) / 2.0**64


def derive_seed(*parts: object) -> int:
    """Derive a child seed (fits in 63 bits, safe for random.Random)."""
    return stable_u64(*parts) >> 1


def hash_bytes(n: int, *parts: object) -> bytes:
    """Deterministic byte stream of length ``n`` keyed by ``parts``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    chunks: list[bytes] = []
    counter = 0
    while sum(len(c) for c in chunks) < n:
        chunks.append(_digest((*parts, counter)))
        counter += 1
    return b"".join(chunks)[:n]


def hash_unit_vector(dim: int, *parts: object) -> list[float]:
    """Expand key parts into a deterministic L2-normalized vector.

    The construction is intentionally free of any RNG library: SHA-256 is
    applied to ``parts`` plus an incrementing counter, each digest yields
    four 64-bit lanes mapped affinely onto [-1, 1).  This makes the exact
    same vectors reproducible from any language with a SHA-256 primitive.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    vals: list[float] = []
    counter = 0
    while len(vals) < dim:
        d = _digest((*parts, counter))
        for i in range(0, 32, 8):
            u = int.from_bytes(d[i : i + 8], "big")
            vals.append(u / 2.0**63 - 1.0)
        counter += 1
    vec = vals[:dim]
    norm = math.sqrt(sum(v * v for v in vec))
    if norm == 0.0:  # pragma: no cover - 256-bit collision territory
        vec = [1.0] + [0.0] * (dim - 1)
        norm = 1.0
    return [v / norm for v in vec]
