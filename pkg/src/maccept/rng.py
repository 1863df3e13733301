"""Counter-based random streams keyed by (seed, purpose, stream id).

Every Monte Carlo routine draws from Philox streams derived through
``SeedSequence`` spawn keys, so a replication block always sees the same
numbers no matter how blocks are distributed across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, TypeVar

import numpy as np

# Replications are grouped into fixed-size blocks; a block is the unit of
# both stream assignment and parallel work.
BLOCK_SIZE = 1 << 15

# Purpose tags keep streams for different consumers disjoint.
IID = 1
FAMILY = 2
FAMILY_REPS = 3
MGF = 4
TAIL = 5
SCALAR = 6
CI_SELFTEST = 7

T = TypeVar("T")


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return an independent Philox generator for ``(seed, *key)``."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def blocks(reps: int, block_size: int = BLOCK_SIZE) -> Iterator[tuple[int, int]]:
    """Yield ``(block_index, block_length)`` covering ``reps`` replications."""
    full, rest = divmod(reps, block_size)
    for b in range(full):
        yield b, block_size
    if rest:
        yield full, rest


def map_blocks(
    fn: Callable[[int, int], T], reps: int, workers: int = 1, block_size: int = BLOCK_SIZE
) -> list[T]:
    """Evaluate ``fn(block_index, block_length)`` for every block, in block order.

    The result list is ordered by block index regardless of ``workers``, so
    any reduction over it in list order is independent of the worker count.
    """
    work = list(blocks(reps, block_size))
    if workers <= 1 or len(work) <= 1:
        return [fn(b, m) for b, m in work]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda bm: fn(*bm), work))


def derive_seed(seed: int, *key: int) -> int:
    """A 63-bit child seed for ``(seed, *key)``, stable across platforms."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
