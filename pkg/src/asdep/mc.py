"""Chunked Monte Carlo accumulation.

Work is split into per-worker chunks, each drawing from its own child stream;
partial sums are combined in worker order, so results are deterministic for a
given seed and worker count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from .distributions import RngStream
from .errors import InvalidInputError


def chunk_sizes(n: int, parts: int) -> list[int]:
    if n < 1:
        raise InvalidInputError("sample count must be positive")
    parts = max(1, min(int(parts), n))
    base, extra = divmod(n, parts)
    return [base + (1 if w < extra else 0) for w in range(parts)]


def accumulate_chunks(worker, n: int, rng: RngStream, threads: int = 1):
    """Sum ``worker(count, stream)`` outputs over chunks of an n-sample run.

    ``worker`` returns a tuple of accumulables (arrays or floats) that are
    added elementwise across chunks.
    """
    sizes = chunk_sizes(n, threads)
    streams = [rng.child(w) for w in range(len(sizes))]
    if len(sizes) == 1:
        return worker(sizes[0], streams[0])
    with ThreadPoolExecutor(max_workers=len(sizes)) as pool:
        futures = [pool.submit(worker, c, s) for c, s in zip(sizes, streams)]
        results = [f.result() for f in futures]
    totals = list(results[0])
    for part in results[1:]:
        for i, value in enumerate(part):
            totals[i] = totals[i] + value
    return tuple(totals)
