"""Counter-based random streams.

Every draw in the package comes from a Philox generator keyed by
``(seed, purpose)``. Work is cut into fixed-size chunks and chunk ``k`` owns the
counter range whose top word equals ``k``, so the numbers a chunk sees do not
depend on how many workers process the chunks or in which order.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 8192
_MASK64 = (1 << 64) - 1

# purpose tags; distinct tags give disjoint keys for the same user seed
SAMPLE = 1
GAUSSIAN = 2
BOOTSTRAP = 3
DIRECTIONS = 4
CANDIDATES = 5
VALIDATION = 6
VOLUME = 7


def stream(seed: int, purpose: int, index: int = 0) -> np.random.Generator:
    """Generator for substream ``index`` of ``(seed, purpose)``."""
    key = (int(seed) & _MASK64) | ((int(purpose) & _MASK64) << 64)
    counter = np.array([0, 0, 0, int(index) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def default_workers() -> int:
    env = os.environ.get("SUBGAUSS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def chunk_sizes(total: int, chunk: int = CHUNK) -> list[int]:
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(fn, sizes, workers=None):
    """Apply ``fn(index, size)`` to every chunk; results come back in chunk order."""
    workers = default_workers() if workers is None else max(1, int(workers))
    jobs = list(enumerate(sizes))
    if workers == 1 or len(jobs) <= 1:
        return [fn(i, s) for i, s in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda js: fn(*js), jobs))
