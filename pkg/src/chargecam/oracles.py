"""Exact ground-truth distances: Hamming, Levenshtein, and row labeling.

edit_distance is the reference implementation (full dynamic program, pure
Python).  The banded/capped variants are the production path for bulk
labeling; they are decision-identical to the reference for any distance
within the cap, which the test suite verifies directly.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .genome import GenomeStore, encode_bases


def hamming(a: str, b: str) -> int:
    """Count of positionwise differences; defined only for equal lengths."""
    if len(a) != len(b):
        raise ValueError(f"hamming requires equal lengths, got {len(a)} and {len(b)}")
    return sum(x != y for x, y in zip(a, b))


def edit_distance(a: str, b: str) -> int:
    """Unit-cost Levenshtein distance via the full comparison matrix."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        curr = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            curr[j] = min(
                prev[j] + 1,          # delete from a
                curr[j - 1] + 1,      # insert into a
                prev[j - 1] + (ca != cb),
            )
        prev = curr
    return prev[-1]


@njit(cache=True)
def _banded_ed(a: np.ndarray, b: np.ndarray, cap: int) -> int:
    """min(levenshtein(a, b), cap + 1) within a band of halfwidth cap.

    Any alignment path leaving the |i - j| <= cap band costs more than cap,
    so results <= cap are exact.  Early-exits once every band cell exceeds
    the cap.
    """
    la, lb = a.shape[0], b.shape[0]
    if la - lb > cap or lb - la > cap:
        return cap + 1
    width = 2 * cap + 1
    inf = cap + 1
    prev = np.empty(width, dtype=np.int32)
    curr = np.empty(width, dtype=np.int32)
    for k in range(width):
        j = k - cap
        prev[k] = j if 0 <= j <= min(lb, cap) else inf
    for i in range(1, la + 1):
        best = inf
        for k in range(width):
            j = i - cap + k
            if j < 0 or j > lb:
                curr[k] = inf
                continue
            if j == 0:
                v = i if i <= cap else inf
            else:
                v = prev[k] + (0 if a[i - 1] == b[j - 1] else 1)
                if k + 1 < width and prev[k + 1] + 1 < v:
                    v = prev[k + 1] + 1
                if k - 1 >= 0 and curr[k - 1] + 1 < v:
                    v = curr[k - 1] + 1
                if v > inf:
                    v = inf
            curr[k] = v
            if v < best:
                best = v
        if best >= inf:
            return inf
        prev, curr = curr, prev
    j_final = lb - la + cap
    return prev[j_final] if prev[j_final] < inf else inf


@njit(cache=True)
def _bulk_banded_ed(segs: np.ndarray, reads: np.ndarray, cap: int) -> np.ndarray:
    out = np.empty((reads.shape[0], segs.shape[0]), dtype=np.int16)
    for r in range(reads.shape[0]):
        for s in range(segs.shape[0]):
            out[r, s] = _banded_ed(reads[r], segs[s], cap)
    return out


def edit_distance_capped(a: str, b: str, cap: int) -> int:
    """Exact edit distance if <= cap, else cap + 1."""
    if cap < 0:
        raise ValueError("cap must be non-negative")
    return int(_banded_ed(encode_bases(a), encode_bases(b), cap))


def distance_matrix(
    segment_codes: np.ndarray, read_codes: np.ndarray, cap: int
) -> np.ndarray:
    """(reads, rows) matrix of min(edit distance, cap + 1)."""
    return _bulk_banded_ed(
        np.ascontiguousarray(segment_codes), np.ascontiguousarray(read_codes), cap
    )


def label_ground_truth(store: GenomeStore, read: str, threshold: int) -> np.ndarray:
    """Per-row boolean vector: row k positive iff ED(segment_k, read) <= T."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    if len(read) != store.segment_length:
        raise ValueError(
            f"read length {len(read)} must equal segment length {store.segment_length}"
        )
    dist = distance_matrix(store.segment_codes(), encode_bases(read)[None, :], threshold)
    return dist[0] <= threshold
