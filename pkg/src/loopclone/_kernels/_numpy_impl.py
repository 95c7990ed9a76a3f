"""Pure NumPy implementations of the pairwise kernels.

All three routines are O(N^2 * d) over an (N, d) point cloud. They are
evaluated in row chunks so peak memory stays at O(chunk * N) regardless of N.
Distances are always max-abs (infinity norm) across coordinates.
"""
from __future__ import annotations

import numpy as np

_CHUNK = 512


def _dist_block(W: np.ndarray, s: int, e: int) -> np.ndarray:
    """Infinity-norm distances from rows s:e of W to every row of W."""
    return np.max(np.abs(W[s:e, None, :] - W[None, :, :]), axis=2)


def neighborhood_spreads(
    W: np.ndarray, z: np.ndarray, rho: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-point spread of z over the closed rho-ball around each point.

    For each k, the neighborhood is every l with dist(W[k], W[l]) <= rho,
    the point itself included. Returns ``(spread, has_neighbor)`` where
    ``spread[k]`` is max minus min of z over that set (0.0 when the point
    is isolated) and ``has_neighbor[k]`` says whether any other point fell
    inside the ball.
    """
    W = np.ascontiguousarray(W, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    n = W.shape[0]
    spread = np.zeros(n)
    has_neighbor = np.zeros(n, dtype=bool)
    for s in range(0, n, _CHUNK):
        e = min(s + _CHUNK, n)
        inside = _dist_block(W, s, e) <= rho
        has_neighbor[s:e] = inside.sum(axis=1) > 1
        zmax = np.where(inside, z[None, :], -np.inf).max(axis=1)
        zmin = np.where(inside, z[None, :], np.inf).min(axis=1)
        spread[s:e] = zmax - zmin
    spread[~has_neighbor] = 0.0
    return spread, has_neighbor


def secant_excess_max(
    W: np.ndarray, z: np.ndarray, two_eps: float
) -> tuple[float, bool]:
    """Largest deadzoned secant slope of z over distinct-point pairs.

    For every pair with dist > 0 the candidate slope is
    ``(|z[k] - z[l]| - two_eps) / dist`` when the numerator is positive,
    else 0. Returns ``(max_slope, found_distinct_pair)``; the max is 0.0
    when no pair exceeds the deadzone.
    """
    W = np.ascontiguousarray(W, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    n = W.shape[0]
    best = 0.0
    found = False
    for s in range(0, n, _CHUNK):
        e = min(s + _CHUNK, n)
        dist = _dist_block(W, s, e)
        positive = dist > 0.0
        if positive.any():
            found = True
        excess = np.abs(z[s:e, None] - z[None, :]) - two_eps
        good = positive & (excess > 0.0)
        if good.any():
            best = max(best, float((excess[good] / dist[good]).max()))
    return best, found


def min_pairwise_dist(W: np.ndarray) -> float:
    """Smallest infinity-norm distance over distinct index pairs.

    Returns +inf for fewer than two points. Coincident points give 0.0.
    """
    W = np.ascontiguousarray(W, dtype=np.float64)
    n = W.shape[0]
    if n < 2:
        return float("inf")
    best = np.inf
    for s in range(0, n, _CHUNK):
        e = min(s + _CHUNK, n)
        dist = _dist_block(W, s, e)
        # Mask the self pairs inside this chunk.
        rows = np.arange(s, e)
        dist[rows - s, rows] = np.inf
        best = min(best, float(dist.min()))
    return best
