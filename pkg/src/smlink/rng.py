"""Seeded random-number streams.

All randomness in the package flows through counter-based Philox generators
derived from an integer master seed plus a small integer path. Named paths
keep independent parts of a run (channel draws, swarm updates, per-worker
Monte-Carlo shards, ...) on provably disjoint streams, so results are
reproducible for a fixed (seed, worker-count) pair and common-random-number
comparisons can share a stream by sharing its path.
"""

from __future__ import annotations

import numpy as np

# Stream domains. Keeping them distinct means a master seed can be reused
# across subsystems without correlating their draws.
DOMAIN_CAPACITY = 1
DOMAIN_BLER = 2
DOMAIN_SWARM = 3
DOMAIN_CHANNEL = 4
DOMAIN_FEC = 5


def zigzag(i: int) -> int:
    """Map any integer onto the non-negative integers (for stream paths)."""
    i = int(i)
    return 2 * i if i >= 0 else -2 * i - 1


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return a Philox generator for (seed, path).

    The same (seed, path) always yields an identical stream; distinct paths
    under one seed are statistically independent. Negative path elements are
    zig-zag encoded, so signed quantities (e.g. SNR grid indices) are valid.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(zigzag(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def substreams(seed: int, n: int, *path: int) -> list[np.random.Generator]:
    """Return n independent worker streams under (seed, path)."""
    return [stream(seed, *path, w) for w in range(n)]


def as_generator(rng) -> np.random.Generator:
    """Accept either an integer seed or a ready Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(int(rng))
