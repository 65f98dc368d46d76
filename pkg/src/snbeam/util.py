"""Shared small helpers."""

import os

__all__ = ["snb_threads"]


def snb_threads():
    """Worker cap from SNB_THREADS; 0 or unset means single-threaded."""
    try:
        n = int(os.environ.get("SNB_THREADS", "0"))
    except ValueError:
        return 1
    return max(n, 1)
