"""Keyed random streams.

Every random draw in the package comes from a Philox generator keyed by
``(master_seed, *tags)``. A tag tuple names one independent stream, e.g.
``(PHASE_ITER, iteration, attempt)``, so work split across threads draws the
same numbers no matter how it is scheduled.
"""

import numpy as np

PHASE_DATA = 1
PHASE_OUTLIER = 2
PHASE_INIT = 3
PHASE_ITER = 4
PHASE_MC = 5
PHASE_METHOD = 6
PHASE_RESTART = 7
PHASE_SWEEP = 8
PHASE_ESTIMATE = 9

_SEED_MASK = (1 << 63) - 1


def as_seed(random_state=None):
    """Normalise ``random_state`` to a non-negative integer master seed.

    Accepts an int, ``None`` (fresh entropy) or a ``numpy.random.Generator``
    (one draw is consumed from it).
    """
    if random_state is None:
        return int(np.random.SeedSequence().entropy) & _SEED_MASK
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(0, _SEED_MASK, dtype=np.int64))
    if isinstance(random_state, (int, np.integer)):
        if random_state < 0:
            raise ValueError(f"seed must be non-negative, got {random_state}")
        return int(random_state)
    raise TypeError(f"cannot build a seed from {type(random_state).__name__}")


def stream(seed, *tags):
    """Return a generator for the stream keyed by ``(seed, *tags)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(t) for t in tags))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *tags):
    """Derive a 63-bit child seed from ``(seed, *tags)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(t) for t in tags))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return ((int(hi) << 32) | int(lo)) & _SEED_MASK
