"""Pairwise correlation estimators over ``(n, 3)`` segment blocks.

Every estimator returns a :class:`~corrbench.patterns.CorrelationVector`
``(r12, r13, r23)``.
"""
from __future__ import annotations

import numpy as np
from numba import njit
from scipy.stats import rankdata

from .patterns import CorrelationVector

_PAIRS = ((0, 1), (0, 2), (1, 2))
METHODS = ("spearman", "pearson", "kendall")


class DegenerateBlockError(ValueError):
    """A block cannot yield a correlation estimate (too short or constant column)."""


def _check_block(block) -> np.ndarray:
    x = np.asarray(block, dtype=float)
    if x.ndim != 2 or x.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) block, got shape {x.shape}")
    if x.shape[0] < 3:
        raise DegenerateBlockError(f"block has {x.shape[0]} observations; at least 3 are required")
    if not np.all(np.isfinite(x)):
        raise ValueError("block contains non-finite values")
    constant = np.flatnonzero(np.ptp(x, axis=0) == 0).tolist()
    if constant:
        raise DegenerateBlockError(f"column(s) {constant} have zero variance")
    return x


def _pearson_unchecked(x: np.ndarray) -> CorrelationVector:
    xc = x - x.mean(axis=0)
    # rescale first so tiny or huge magnitudes cannot under/overflow the products
    xc /= np.abs(xc).max(axis=0)
    xc /= np.sqrt((xc * xc).sum(axis=0))
    out = []
    for i, j in _PAIRS:
        r = float(np.dot(xc[:, i], xc[:, j]))
        out.append(min(1.0, max(-1.0, r)))
    return CorrelationVector(*out)


def rank(block) -> np.ndarray:
    """Column-wise average ranks (ties share the mean of their positions)."""
    return rankdata(np.asarray(block, dtype=float), method="average", axis=0)


def pearson(block) -> CorrelationVector:
    return _pearson_unchecked(_check_block(block))


def spearman(block) -> CorrelationVector:
    return _pearson_unchecked(rank(_check_block(block)))


@njit(cache=True)
def _tau_b_sorted(x, y):
    # x, y sorted lexicographically by (x, y); y is sorted in place (Knight's algorithm)
    n = x.shape[0]
    n0 = n * (n - 1) // 2

    n1 = 0
    n3 = 0
    run_x = 1
    run_xy = 1
    for i in range(1, n):
        if x[i] == x[i - 1]:
            run_x += 1
            if y[i] == y[i - 1]:
                run_xy += 1
            else:
                n3 += run_xy * (run_xy - 1) // 2
                run_xy = 1
        else:
            n1 += run_x * (run_x - 1) // 2
            n3 += run_xy * (run_xy - 1) // 2
            run_x = 1
            run_xy = 1
    n1 += run_x * (run_x - 1) // 2
    n3 += run_xy * (run_xy - 1) // 2

    # bottom-up merge sort of y counting exchanges
    swaps = 0
    buf = np.empty_like(y)
    src = y
    dst = buf
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if src[i] <= src[j]:
                    dst[k] = src[i]
                    i += 1
                else:
                    dst[k] = src[j]
                    swaps += mid - i
                    j += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
        tmp = src
        src = dst
        dst = tmp
        width *= 2

    n2 = 0
    run_y = 1
    for i in range(1, n):
        if src[i] == src[i - 1]:
            run_y += 1
        else:
            n2 += run_y * (run_y - 1) // 2
            run_y = 1
    n2 += run_y * (run_y - 1) // 2

    s = n0 - n1 - n2 + n3 - 2 * swaps
    denom = np.sqrt(float(n0 - n1)) * np.sqrt(float(n0 - n2))
    return s / denom


def tau_b(x, y) -> float:
    """Kendall tau-b of two 1-d samples in O(n log n)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.lexsort((y, x))
    t = _tau_b_sorted(x[order], y[order].copy())
    return min(1.0, max(-1.0, float(t)))


def kendall(block) -> CorrelationVector:
    x = _check_block(block)
    return CorrelationVector(*(tau_b(x[:, i], x[:, j]) for i, j in _PAIRS))


_ESTIMATORS = {"spearman": spearman, "pearson": pearson, "kendall": kendall}


def get_estimator(method: str):
    try:
        return _ESTIMATORS[method]
    except KeyError:
        raise ValueError(f"unknown correlation method {method!r}; choose from {METHODS}") from None


def segment_vectors(values: np.ndarray, bounds, method: str = "spearman") -> np.ndarray:
    """Estimate one vector per ``(start, stop)`` row range; returns ``(len(bounds), 3)``."""
    est = get_estimator(method)
    out = np.empty((len(bounds), 3))
    for i, (start, stop) in enumerate(bounds):
        try:
            out[i] = est(values[start:stop])
        except DegenerateBlockError as exc:
            raise DegenerateBlockError(f"segment {i} (rows {start}:{stop}): {exc}") from None
    return out
