"""Hot loops over photon timestamp streams.

Each kernel has a numba implementation and a vectorized numpy one. The
numba path is used when numba imports and ``SPDCKIT_DISABLE_NUMBA`` is
unset (or ``0``); both paths return identical results.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("SPDCKIT_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLE:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLE

_CHUNK = 1 << 20


def _histogram_bounds(tau: int, half_bins: int) -> int:
    # accepted delays d satisfy -edge <= 2 d < edge
    return (2 * half_bins + 1) * tau


def delay_histogram_numpy(signal: np.ndarray, idler: np.ndarray, tau: int, half_bins: int) -> np.ndarray:
    """Histogram of all pairwise delays ``idler - signal``.

    Bins are ``tau`` wide and centered on ``k * tau`` for
    ``k = -half_bins .. half_bins``. Both inputs must be sorted int64 ps.
    """
    nbins = 2 * half_bins + 1
    counts = np.zeros(nbins, dtype=np.int64)
    if signal.size == 0 or idler.size == 0:
        return counts
    edge = _histogram_bounds(tau, half_bins)
    idler2 = 2 * idler
    for start in range(0, signal.size, _CHUNK):
        s2 = 2 * signal[start:start + _CHUNK]
        lo = np.searchsorted(idler2, s2 - edge, side="left")
        hi = np.searchsorted(idler2, s2 + edge, side="left")
        n = hi - lo
        total = int(n.sum())
        if total == 0:
            continue
        owner = np.repeat(np.arange(s2.size), n)
        # index of each pair within its run of matches
        run_start = np.cumsum(n) - n
        j = lo[owner] + (np.arange(total) - run_start[owner])
        d2 = idler2[j] - s2[owner]
        idx = (d2 + edge) // (2 * tau)
        counts += np.bincount(idx, minlength=nbins)
    return counts


def nonparalyzable_dead_time_numpy(times: np.ndarray, dead: int) -> np.ndarray:
    """Keep events not within ``dead`` ps after the previous kept event."""
    if dead <= 0 or times.size == 0:
        return times
    # an event at least ``dead`` after its predecessor is always kept; only
    # runs of closely spaced events need the sequential walk
    close = np.diff(times) < dead
    keep = np.ones(times.size, dtype=bool)
    keep[1:][close] = False
    starts = np.nonzero(close & ~np.concatenate(([False], close[:-1])))[0]
    for a in starts:
        # run covers events a .. b (inclusive), event a is kept
        b = a + 1
        while b + 1 < times.size and close[b]:
            b += 1
        last = times[a]
        j = a + 1
        while j <= b:
            j = int(np.searchsorted(times, last + dead, side="left"))
            if j > b:
                break
            keep[j] = True
            last = times[j]
    return times[keep]


def _delay_histogram_loop(signal, idler, tau, half_bins):
    nbins = 2 * half_bins + 1
    counts = np.zeros(nbins, dtype=np.int64)
    edge = (2 * half_bins + 1) * tau
    ni = idler.size
    j0 = 0
    for i in range(signal.size):
        s2 = 2 * signal[i]
        while j0 < ni and 2 * idler[j0] - s2 < -edge:
            j0 += 1
        j = j0
        while j < ni:
            d2 = 2 * idler[j] - s2
            if d2 >= edge:
                break
            counts[(d2 + edge) // (2 * tau)] += 1
            j += 1
    return counts


def _dead_time_loop(times, dead):
    n = times.size
    out = np.empty(n, dtype=times.dtype)
    k = 0
    last = 0
    for i in range(n):
        if k == 0 or times[i] - last >= dead:
            out[k] = times[i]
            last = times[i]
            k += 1
    return out[:k]


if HAVE_NUMBA:
    _delay_histogram_jit = numba.njit(cache=True, nogil=True)(_delay_histogram_loop)
    _dead_time_jit = numba.njit(cache=True, nogil=True)(_dead_time_loop)

    def delay_histogram_numba(signal, idler, tau, half_bins):
        return _delay_histogram_jit(
            np.ascontiguousarray(signal, dtype=np.int64),
            np.ascontiguousarray(idler, dtype=np.int64),
            np.int64(tau), np.int64(half_bins),
        )

    def nonparalyzable_dead_time_numba(times, dead):
        if dead <= 0 or times.size == 0:
            return times
        return _dead_time_jit(np.ascontiguousarray(times, dtype=np.int64), np.int64(dead))
else:
    delay_histogram_numba = None
    nonparalyzable_dead_time_numba = None


def delay_histogram(signal, idler, tau: int, half_bins: int) -> np.ndarray:
    signal = np.asarray(signal, dtype=np.int64)
    idler = np.asarray(idler, dtype=np.int64)
    if USE_NUMBA:
        return delay_histogram_numba(signal, idler, int(tau), int(half_bins))
    return delay_histogram_numpy(signal, idler, int(tau), int(half_bins))


def nonparalyzable_dead_time(times, dead: int) -> np.ndarray:
    times = np.asarray(times, dtype=np.int64)
    if USE_NUMBA:
        return nonparalyzable_dead_time_numba(times, int(dead))
    return nonparalyzable_dead_time_numpy(times, int(dead))


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
