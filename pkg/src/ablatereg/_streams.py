"""Seed-stream bookkeeping.

Every random draw in the package comes from a generator keyed by
``(seed, purpose[, step])``.  Purposes get distinct integer tags so that,
for example, the bootstrap indices of a synthetic set never share a stream
with its ablation masks, and a per-batch mask at training step ``t`` is a
pure function of ``(seed, MASK, t)``.
"""

from __future__ import annotations

import numpy as np

BOOTSTRAP = 1
MASK = 2
INIT = 3
SHUFFLE = 4
SYNTH = 5
SPLIT = 6
VALMASK = 7


def stream(seed: int, purpose: int, step: int | None = None) -> np.random.Generator:
    """Return a PCG64 generator for the given (seed, purpose[, step]) key."""
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    entropy = (int(seed), purpose) if step is None else (int(seed), purpose, int(step))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def child_seed(*key: int) -> int:
    """Derive a reproducible non-negative integer seed from a tuple of ints."""
    return int(np.random.SeedSequence(tuple(int(k) for k in key)).generate_state(1)[0])
