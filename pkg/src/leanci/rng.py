"""Deterministic random substreams and scheduling-independent parallel map.

Every random draw in the package comes from ``substream(seed, tag, index)``.
A substream depends only on its key, never on which worker consumes it, so
results are bit-identical for any number of workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

# stream tags keep unrelated consumers of one user seed apart
MAX_GAUSS = 1
BOOTSTRAP = 2
PCOR_BOOTSTRAP = 3
REPLICATE = 4
ORACLE_TRUTH = 5
DELTA_REPLICATE = 6
DELTA_GAUSS = 7
EXPERIMENT_BOOTSTRAP = 8

BLOCK = 512


def check_seed(seed) -> int:
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def blocks(total: int, size: int = BLOCK):
    """Yield ``(block_index, start, stop)`` covering ``range(total)``."""
    for b, start in enumerate(range(0, total, size)):
        yield b, start, min(start + size, total)


def pmap(fn, items, workers: int = 1) -> list:
    """Ordered map; runs on a thread pool when ``workers > 1``."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
