"""Shared-memory worker pool.

Work is split into contiguous index ranges, one per worker.  Every parallel
section in the package writes disjoint output ranges and combines partial
results in a fixed order, so results do not depend on the worker count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def split_ranges(n, parts):
    parts = max(1, min(parts, n)) if n > 0 else 1
    base, extra = divmod(n, parts)
    out, lo = [], 0
    for p in range(parts):
        hi = lo + base + (1 if p < extra else 0)
        out.append((lo, hi))
        lo = hi
    return out


class WorkerPool:
    def __init__(self, threads=1):
        if threads < 1:
            raise ValueError("thread count must be >= 1")
        self.threads = int(threads)
        self._executor = ThreadPoolExecutor(self.threads) if self.threads > 1 else None

    def map_ranges(self, fn, n, min_chunk=1):
        """Call ``fn(lo, hi)`` over a partition of ``range(n)``; results in range order."""
        parts = self.threads
        if min_chunk > 1:
            parts = min(parts, max(1, n // min_chunk))
        ranges = split_ranges(n, parts)
        if self._executor is None or len(ranges) == 1:
            return [fn(lo, hi) for lo, hi in ranges]
        futures = [self._executor.submit(fn, lo, hi) for lo, hi in ranges]
        return [f.result() for f in futures]

    def close(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


SERIAL = WorkerPool(1)
