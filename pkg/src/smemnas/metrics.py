"""Rank correlations and two-objective hypervolume (both objectives minimized)."""
from __future__ import annotations

import numpy as np


def _check_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size < 2:
        raise ValueError("need at least two items")
    return a, b


def kendall_tau(a, b) -> float:
    """Kendall's tau-b; reduces to tau-a when neither input has ties.

    Returns nan when one input is constant.
    """
    a, b = _check_pair(a, b)
    iu = np.triu_indices(a.size, k=1)
    da = np.sign(a[:, None] - a[None, :])[iu]
    db = np.sign(b[:, None] - b[None, :])[iu]
    s = float(np.sum(da * db))
    n_a = float(np.count_nonzero(da))
    n_b = float(np.count_nonzero(db))
    if n_a == 0 or n_b == 0:
        return float("nan")
    return s / np.sqrt(n_a * n_b)


def average_ranks(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(x.size)
    sx = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(a, b) -> float:
    a, b = _check_pair(a, b)
    ra, rb = average_ranks(a), average_ranks(b)
    ra -= ra.mean()
    rb -= rb.mean()
    denom = np.sqrt(np.sum(ra * ra) * np.sum(rb * rb))
    if denom == 0:
        return float("nan")
    return float(np.sum(ra * rb) / denom)


def hypervolume_2d(points, ref) -> float:
    """Area dominated by ``points`` inside the box bounded by ``ref``.

    Points not strictly better than ``ref`` in both coordinates are ignored.
    """
    ref = np.asarray(ref, dtype=float)
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(P)):
        raise ValueError("objective points must be finite")
    P = P[(P[:, 0] < ref[0]) & (P[:, 1] < ref[1])]
    if P.size == 0:
        return 0.0
    P = P[np.lexsort((P[:, 1], P[:, 0]))]
    area = 0.0
    best_y = ref[1]
    for x, y in P:
        if y < best_y:
            # Sweep in increasing x: each new lower y adds a slab to the right.
            area += (ref[0] - x) * (best_y - y)
            best_y = y
    return float(area)
