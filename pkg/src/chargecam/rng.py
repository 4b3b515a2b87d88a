"""Deterministic random substreams.

Every randomized operation in the package draws from a Philox counter-based
generator keyed by (master_seed, stream tag, *indices).  Substreams with
distinct keys are statistically independent, so work can be generated or
evaluated in any order (or in parallel) and still produce bit-identical
results.
"""

from __future__ import annotations

import numpy as np

# Stream tags.  Keys must never collide across subsystems, so each consumer
# of randomness gets its own tag.
GENOME = 0      # reference synthesis
READS = 1       # read extraction + edit injection (one substream per read)
SEARCH = 2      # per-row matchline sampling in scalar searches
EVAL = 3        # per-read noise/decision draws in batch evaluation
CAPS = 4        # per-array capacitor mismatch samples
SWEEP = 5       # Monte Carlo variance sweeps


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Return a Generator for the substream keyed by (master_seed, *path).

    All path components must be non-negative integers.
    """
    if any(p < 0 for p in path):
        raise ValueError(f"substream path must be non-negative: {path}")
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(seed=ss))
