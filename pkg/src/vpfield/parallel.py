"""Deterministic block parallelism and reproducible reductions.

Results must be bit-identical whatever the thread count, so work is split
into *fixed-size* blocks (the partition never depends on the pool size),
each block writes a disjoint slice of the output, and every floating-point
reduction happens after assembly in index order.  numpy's ``sum`` performs
pairwise (tree) summation with a fixed block structure, which makes it the
reproducible reduction primitive used throughout the package.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

ENV_THREADS = "VPFIELD_THREADS"

# Nodes per work block.  Fixed: changing it changes nothing numerically for
# block-local maps, but keep it stable so runs are comparable.
BLOCK = 1 << 17

_thread_count = None


def get_thread_count():
    """Current worker count: explicit setting, else $VPFIELD_THREADS, else 1."""
    if _thread_count is not None:
        return _thread_count
    try:
        return max(1, int(os.environ.get(ENV_THREADS, "1")))
    except ValueError:
        return 1


def set_thread_count(n):
    """Override the worker count (None restores the environment default)."""
    global _thread_count
    _thread_count = None if n is None else max(1, int(n))


def block_ranges(total, block=BLOCK):
    """Fixed partition of range(total) into [start, stop) block tuples."""
    return [(a, min(a + block, total)) for a in range(0, total, block)]


def map_blocks(fn, total, block=BLOCK):
    """Run ``fn(start, stop)`` over a fixed partition of ``range(total)``.

    ``fn`` must write its results into preallocated output slices (or be
    otherwise side-effect-disjoint per block).  Blocks run on a thread pool
    when more than one worker is configured; the partition itself never
    depends on the worker count, so outputs are bit-identical either way.
    """
    ranges = block_ranges(total, block)
    threads = get_thread_count()
    if threads <= 1 or len(ranges) <= 1:
        for a, b in ranges:
            fn(a, b)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # Consume results to propagate exceptions.
        list(pool.map(lambda r: fn(*r), ranges))


def pairwise_sum(values):
    """Deterministic tree sum of a 1-D array or list of scalars."""
    arr = np.asarray(values)
    if arr.size == 0:
        return arr.dtype.type(0.0) if arr.dtype.kind in "fc" else 0.0
    return np.sum(arr)
