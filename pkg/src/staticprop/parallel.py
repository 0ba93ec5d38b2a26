"""Deterministic parallel map for independent sweep points."""

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "STATICPROP_THREADS"


def thread_count():
    """Worker cap from STATICPROP_THREADS, else the machine default."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def ordered_map(fn, items):
    """map(fn, items) evaluated on a thread pool; results keep input order."""
    items = list(items)
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
