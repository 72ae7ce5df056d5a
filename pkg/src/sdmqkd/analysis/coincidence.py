"""Two-channel coincidence counting and delay histograms."""

from dataclasses import dataclass

import numba
import numpy as np

from .._validation import check_positive, check_tags


@numba.njit(cache=True, nogil=True)
def _greedy_count(a, b, half, delay):
    i = 0
    j = 0
    n = 0
    na = a.shape[0]
    nb = b.shape[0]
    while i < na and j < nb:
        d = a[i] - (b[j] + delay)
        if d > half:
            j += 1
        elif d < -half:
            i += 1
        else:
            n += 1
            i += 1
            j += 1
    return n


@numba.njit(cache=True, nogil=True)
def _all_pairs_count(a, b, half, delay):
    n = 0
    lo = 0
    nb = b.shape[0]
    for i in range(a.shape[0]):
        while lo < nb and a[i] - (b[lo] + delay) > half:
            lo += 1
        k = lo
        while k < nb and (b[k] + delay) - a[i] <= half:
            n += 1
            k += 1
    return n


def count_coincidences(tags_a, tags_b, window, delay=0, mode="greedy"):
    """Count pairs with ``|t_a - (t_b + delay)| <= window / 2``.

    Args:
        tags_a, tags_b: strictly increasing int64 picosecond tags.
        window: full coincidence window, ps.
        delay: offset added to ``tags_b``, ps.
        mode: ``"greedy"`` pairs each tag at most once, scanning both streams
            in time order (hardware coincidence logic); ``"all"`` counts every
            pair inside the window.

    Raises:
        ContractViolationError: if either stream is unsorted.
    """
    check_positive(window, "window")
    a = check_tags(tags_a, "tags_a")
    b = check_tags(tags_b, "tags_b")
    # Integer tags: |d| <= w/2 is the same as |d| <= floor(w/2)
    half = np.int64(np.floor(window / 2.0))
    delay = np.int64(round(delay))
    if mode == "greedy":
        return int(_greedy_count(a, b, half, delay))
    if mode == "all":
        return int(_all_pairs_count(a, b, half, delay))
    raise ValueError(f"mode must be 'greedy' or 'all', got {mode!r}")


@numba.njit(cache=True)
def _brute_force_kernel(a, b, half, delay):
    used = np.zeros(b.shape[0], dtype=np.bool_)
    n = 0
    for i in range(a.shape[0]):
        for k in range(b.shape[0]):
            if not used[k] and abs(a[i] - (b[k] + delay)) <= half:
                used[k] = True
                n += 1
                break
    return n


def brute_force_coincidences(tags_a, tags_b, window, delay=0):
    """Quadratic reference: each ``a`` in time order takes the earliest unused ``b`` in its window.

    Scans the whole of ``tags_b`` for every ``a`` and needs no ordering of
    ``tags_b``; it exists to cross-check :func:`count_coincidences`.
    """
    a = np.asarray(tags_a, dtype=np.int64)
    b = np.asarray(tags_b, dtype=np.int64)
    return int(_brute_force_kernel(a, b, np.int64(np.floor(window / 2.0)), np.int64(round(delay))))


@dataclass(frozen=True)
class CoincidenceHistogram:
    delays: np.ndarray
    counts: np.ndarray
    window: float

    def __post_init__(self):
        if len(self.delays) != len(self.counts):
            raise ValueError("delays and counts must have equal length")
        if np.any(np.diff(self.delays) <= 0):
            raise ValueError("delays must be strictly increasing")

    @property
    def peak_delay(self):
        return float(self.delays[int(np.argmax(self.counts))])

    def to_rows(self):
        return [(float(d), int(c)) for d, c in zip(self.delays, self.counts)]


def delay_scan(tags_a, tags_b, span, step, window, mode="greedy"):
    """Coincidence counts at delays ``-span, -span+step, ..., +span``."""
    check_positive(step, "step")
    n = int(np.floor(span / step + 1e-9))
    delays = np.arange(-n, n + 1, dtype=np.float64) * step
    counts = np.array([count_coincidences(tags_a, tags_b, window, d, mode) for d in delays], dtype=np.int64)
    return CoincidenceHistogram(delays, counts, float(window))
