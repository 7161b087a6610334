"""Order-preserving parallel map over contiguous index chunks."""
from concurrent.futures import ThreadPoolExecutor

from django.conf import settings


def resolve_threads(threads=None):
    """Fall back to the configured default thread count."""
    if threads is None:
        threads = settings.MORL_NPG['DEFAULT_THREADS']
    return max(1, int(threads))


def chunk_ranges(count, chunks):
    """Split ``range(count)`` into at most ``chunks`` contiguous ranges."""
    chunks = max(1, min(chunks, count))
    size, extra = divmod(count, chunks)
    ranges = []
    start = 0
    for i in range(chunks):
        stop = start + size + (1 if i < extra else 0)
        ranges.append(range(start, stop))
        start = stop
    return ranges


def map_chunks(fn, count, threads=None):
    """
    Apply ``fn`` to contiguous index ranges covering ``range(count)``.

    Results come back in index order, so callers that concatenate them see
    the same arrays for every thread count.

    Args:
        fn: callable taking a ``range``
        count: number of indices
        threads: worker threads (None uses the configured default)

    Returns:
        list: ``fn`` results in chunk order
    """
    threads = resolve_threads(threads)
    ranges = chunk_ranges(count, threads)
    if len(ranges) <= 1:
        return [fn(r) for r in ranges]
    with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
        return list(pool.map(fn, ranges))
