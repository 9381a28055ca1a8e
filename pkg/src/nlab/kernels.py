"""
Hot counting loops.

Every kernel has a numba version and a numpy version with identical integer
results. ``count_windows`` and ``count_starred`` dispatch on ``HAS_NUMBA``;
the ``*_numpy`` / ``*_numba`` variants stay importable for the benchmark and
for cross-checking in tests.
"""
from __future__ import annotations

import numpy as np

from ._accel import HAS_NUMBA, njit


def table_offsets(base: int, k: int) -> np.ndarray:
    """Start of the length-j block inside the flat count table, j = 1..k (plus the total size)."""
    sizes = [base ** j for j in range(1, k + 1)]
    return np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)


@njit(cache=True)
def _count_windows_nb(digits, start, stop, base, k, offsets, out):
    for i in range(start, stop):
        code = 0
        for j in range(k):
            code = code * base + digits[i + j]
            out[offsets[j] + code] += 1


def count_windows_numba(digits, start, stop, base, k, out=None):
    offsets = table_offsets(base, k)
    if out is None:
        out = np.zeros(offsets[-1], dtype=np.int64)
    _count_windows_nb(np.ascontiguousarray(digits, dtype=np.int64), start, stop, base, k, offsets, out)
    return out


def count_windows_numpy(digits, start, stop, base, k, out=None):
    offsets = table_offsets(base, k)
    if out is None:
        out = np.zeros(offsets[-1], dtype=np.int64)
    n = stop - start
    if n <= 0:
        return out
    digits = np.asarray(digits, dtype=np.int64)
    code = np.zeros(n, dtype=np.int64)
    for j in range(k):
        code = code * base + digits[start + j:start + j + n]
        size = base ** (j + 1)
        out[offsets[j]:offsets[j] + size] += np.bincount(code, minlength=size)
    return out


def count_windows(digits, start, stop, base, k, out=None):
    """Count every window of length 1..k that starts at index start..stop-1 (0-based).

    ``digits`` must hold at least ``stop + k - 1`` entries. The result is a
    flat int64 table laid out by ``table_offsets``; inside each length block
    the pattern [d_1..d_j] sits at the base-``base`` integer d_1 d_2 .. d_j.
    """
    if len(digits) < stop + k - 1:
        raise ValueError(f"need {stop + k - 1} digits, have {len(digits)}")
    if HAS_NUMBA:
        return count_windows_numba(digits, start, stop, base, k, out)
    return count_windows_numpy(digits, start, stop, base, k, out)


@njit(cache=True)
def _count_starred_nb(blocks, n, allowed):
    m = allowed.shape[0]
    total = 0
    for t in range(n):
        ok = 1
        for j in range(m):
            ok &= allowed[j, blocks[t + j]]
        total += ok
    return total


def count_starred_numba(blocks, n, allowed):
    return int(_count_starred_nb(np.ascontiguousarray(blocks, dtype=np.int64), n, np.ascontiguousarray(allowed)))


def count_starred_numpy(blocks, n, allowed):
    blocks = np.asarray(blocks, dtype=np.int64)
    hit = allowed[0, blocks[:n]].copy()
    for j in range(1, allowed.shape[0]):
        hit &= allowed[j, blocks[j:j + n]]
    return int(np.count_nonzero(hit))


def count_starred(blocks, n, allowed):
    """Number of positions t < n where ``allowed[j, blocks[t + j]]`` holds for every j."""
    if len(blocks) < n + allowed.shape[0] - 1:
        raise ValueError("block stream shorter than n + m - 1")
    if n <= 0:
        return 0
    if HAS_NUMBA:
        return count_starred_numba(blocks, n, allowed)
    return count_starred_numpy(blocks, n, allowed)
