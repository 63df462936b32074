"""Counter-based random streams, one per purpose, derived from a single seed."""

from __future__ import annotations

import numpy as np

PURPOSES = {"draws": 1, "probes": 2, "instances": 3}


def stream(seed: int, purpose: str) -> np.random.Generator:
    """Philox generator for ``purpose``; streams never overlap across purposes."""
    if not 0 <= int(seed) < 2 ** 64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    ss = np.random.SeedSequence(int(seed), spawn_key=(PURPOSES[purpose],))
    return np.random.Generator(np.random.Philox(ss))
