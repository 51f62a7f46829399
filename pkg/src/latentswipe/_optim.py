"""Deterministic grid plus golden-section maximizers.

Shared by the acquisition maximizers and the posterior-mean incumbent
search. Everything here is derivative free and batched: the coordinate
ascent driver evaluates all restarts against a shared 1-D grid in one
call, which is what keeps multi-restart optimization cheap on a single
core.

Tie handling is uniform: among equal values the smallest coordinate
wins, and among equal restart optima the lexicographically smallest
point wins. That makes every maximizer a pure function of its inputs.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

INVPHI = (np.sqrt(5.0) - 1.0) / 2.0

GRID_POINTS = 512
GOLDEN_ITERS = 20


def golden_refine_batch(
    fn: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    best_x: np.ndarray,
    best_v: np.ndarray,
    iters: int = GOLDEN_ITERS,
) -> tuple[np.ndarray, np.ndarray]:
    """Golden-section refinement of R brackets at once.

    fn maps an (R,) vector of probe coordinates to (R,) values. best_x,
    best_v seed the running optimum (normally the grid argmax); probes
    only replace it on strict improvement, or on a tie at a smaller
    coordinate.
    """
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    best_x = best_x.astype(float).copy()
    best_v = best_v.astype(float).copy()

    span = hi - lo
    c = hi - INVPHI * span
    d = lo + INVPHI * span
    fc = fn(c)
    fd = fn(d)
    for probe, vals in ((c, fc), (d, fd)):
        better = (vals > best_v) | ((vals == best_v) & (probe < best_x))
        best_x = np.where(better, probe, best_x)
        best_v = np.where(better, vals, best_v)

    for _ in range(iters):
        left = fc >= fd  # ties keep the left bracket, biasing small x
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        span = hi - lo
        new = np.where(left, hi - INVPHI * span, lo + INVPHI * span)
        fnew = fn(new)
        old_c, old_fc = c, fc
        c = np.where(left, new, d)
        fc = np.where(left, fnew, fd)
        d = np.where(left, old_c, new)
        fd = np.where(left, old_fc, fnew)
        better = (fnew > best_v) | ((fnew == best_v) & (new < best_x))
        best_x = np.where(better, new, best_x)
        best_v = np.where(better, fnew, best_v)
    return best_x, best_v


def maximize_on_grid(
    fn: Callable[[np.ndarray], np.ndarray],
    low: float,
    high: float,
    grid_points: int = GRID_POINTS,
    golden_iters: int = GOLDEN_ITERS,
) -> tuple[float, float]:
    """Maximize a scalar function of one variable on [low, high].

    fn is batched: it maps an (m,) array to an (m,) array. Scans a
    uniform grid, then refines the bracket around the best grid point by
    golden section. Returns (argmax, value); exact ties resolve to the
    smaller coordinate, so a constant function returns low.
    """
    if high < low:
        raise ValueError(f"empty interval [{low}, {high}]")
    if high == low:
        return float(low), float(fn(np.array([low]))[0])
    xs = np.linspace(low, high, grid_points)
    vals = fn(xs)
    idx = int(np.argmax(vals))  # first max -> smallest grid coordinate
    lo = xs[max(idx - 1, 0)]
    hi = xs[min(idx + 1, grid_points - 1)]
    best_x, best_v = golden_refine_batch(
        fn,
        np.array([lo]),
        np.array([hi]),
        np.array([xs[idx]]),
        np.array([vals[idx]]),
        iters=golden_iters,
    )
    return float(best_x[0]), float(best_v[0])


def coordinate_ascent(
    slice_values: Callable[[np.ndarray, int, np.ndarray], np.ndarray],
    point_values: Callable[[np.ndarray], np.ndarray],
    starts: np.ndarray,
    lows: np.ndarray,
    highs: np.ndarray,
    sweeps: int = 3,
    grid_points: int = GRID_POINTS,
    golden_iters: int = GOLDEN_ITERS,
) -> tuple[np.ndarray, float]:
    """Batched cyclic coordinate ascent from multiple starts.

    slice_values(base, j, xs) evaluates, for every restart r, the
    objective at base[r] with coordinate j replaced by each entry of xs,
    returning an (R, len(xs)) array. point_values evaluates full (R, q)
    points. Each coordinate update is a grid scan plus golden-section
    refinement. Stops early once a full sweep changes nothing, which
    cannot alter the result (a sweep is a deterministic function of the
    current points, so a fixed point stays fixed).

    Returns the best point across restarts and its value; value ties
    resolve to the lexicographically smallest point.
    """
    pts = np.array(starts, dtype=float)
    n_restarts, q = pts.shape
    for _ in range(sweeps):
        changed = False
        for j in range(q):
            if highs[j] == lows[j]:
                continue
            xs = np.linspace(lows[j], highs[j], grid_points)
            vals = slice_values(pts, j, xs)  # (R, grid)
            idx = np.argmax(vals, axis=1)
            grid_x = xs[idx]
            grid_v = vals[np.arange(n_restarts), idx]
            lo = xs[np.maximum(idx - 1, 0)]
            hi = xs[np.minimum(idx + 1, grid_points - 1)]

            def probe(x: np.ndarray) -> np.ndarray:
                cand = pts.copy()
                cand[:, j] = x
                return point_values(cand)

            best_x, _ = golden_refine_batch(
                probe, lo, hi, grid_x, grid_v, iters=golden_iters
            )
            if not np.array_equal(best_x, pts[:, j]):
                changed = True
                pts[:, j] = best_x
        if not changed:
            break
    final_vals = point_values(pts)
    best = float(final_vals.max())
    tied = np.flatnonzero(final_vals == best)
    order = np.lexsort(pts[tied].T[::-1])  # lexicographic by coordinates
    winner = tied[order[0]]
    return pts[winner].copy(), best
