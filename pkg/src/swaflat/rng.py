"""Seeded random streams.

All randomness is drawn from numpy's Philox4x64-10 counter-based bit generator.
A root seed is split into named, independent substreams through
``SeedSequence`` spawn keys, so drawing more numbers from one stream never
shifts another (initialisation is unaffected by how many batches were drawn,
Hutchinson samples are unaffected by the data order, and so on).
"""

import numpy as np

STREAMS: dict[str, int] = {
    "init": 0,
    "data": 1,
    "split": 2,
    "batches": 3,
    "hutchinson": 4,
    "power": 5,
}


def seed_sequence(seed: int, stream: str, *path: int) -> np.random.SeedSequence:
    """Return the seed sequence of ``stream`` (optionally a numbered child of it)."""
    if stream not in STREAMS:
        raise KeyError(f"Unknown random stream: {stream}")
    if seed < 0:
        raise ValueError(f"Seeds must be non-negative, got {seed}")
    return np.random.SeedSequence(seed, spawn_key=(STREAMS[stream], *path))


def generator(seed: int, stream: str, *path: int) -> np.random.Generator:
    """Return a Philox-backed generator for ``stream`` under the root ``seed``.

    Examples:
        >>> a = generator(7, "data").standard_normal(3)
        >>> b = generator(7, "data").standard_normal(3)
        >>> bool((a == b).all())
        True
    """
    return np.random.Generator(np.random.Philox(seed_sequence(seed, stream, *path)))
