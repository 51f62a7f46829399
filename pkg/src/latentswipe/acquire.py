"""Acquisition functions and their deterministic maximizers.

Two acquisition rules over a preference model's posterior: upper
confidence bound (mean + beta * std) and expected improvement against
the posterior-mean incumbent. Maximization is grid scan plus
golden-section refinement in one dimension, and multi-start coordinate
ascent built from those 1-D solves in several dimensions. Both
maximizers are deterministic: exact value ties resolve to the smaller
coordinate (lexicographically smaller point in several dimensions), so
a constant acquisition, e.g. from a model with no comparisons, returns
the lower corner of the search interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import _optim, prefgp
from .errors import DimensionMismatch

RESTARTS = 8
SWEEPS = 3

_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class AcquisitionSpec:
    """Which acquisition to use and its exploration weight."""

    kind: str = "ucb"
    beta: float = 2.0

    def __post_init__(self):
        if self.kind not in ("ucb", "ei"):
            raise ValueError(f"unknown acquisition kind {self.kind!r}")


def _scores(
    spec: AcquisitionSpec, mean: np.ndarray, var: np.ndarray, best: float
) -> np.ndarray:
    if spec.kind == "ucb":
        return mean + spec.beta * np.sqrt(var)
    sd = np.sqrt(var)
    out = np.maximum(mean - best, 0.0)
    pos = sd > 0
    if np.any(pos):
        u = (mean[pos] - best) / sd[pos]
        pdf = np.exp(-0.5 * u * u) / _SQRT_2PI
        out[pos] = sd[pos] * (u * ndtr(u) + pdf)
    return out


def _best_mean(
    spec: AcquisitionSpec,
    model: prefgp.PreferenceModel,
    box: tuple[np.ndarray, np.ndarray] | None,
) -> float:
    """Improvement baseline for EI: the boxed incumbent's mean when a box
    is available, otherwise the best posterior mean among training
    points, otherwise the prior mean."""
    if spec.kind != "ei":
        return 0.0
    if not model.comparisons:
        return 0.0
    if box is not None:
        _, value = prefgp.incumbent(model, box)
        return value
    mean, _ = prefgp._posterior_arrays(model, model.points)
    return float(mean.max())


def evaluate(
    spec: AcquisitionSpec,
    model: prefgp.PreferenceModel,
    points: np.ndarray,
    box: tuple[np.ndarray, np.ndarray] | None = None,
):
    """Acquisition value at one (dim,) point or an (m, dim) batch.

    Never raises for a model with no comparisons: the prior mean and
    variance feed the formula, so UCB returns beta * sqrt(signal
    variance) everywhere. A stale model (observations added after the
    last fit) raises UnfittedModel.
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != model.dim:
        raise DimensionMismatch(
            f"points must have trailing dimension {model.dim}, got {np.shape(points)}"
        )
    best = _best_mean(spec, model, box)
    mean, var = prefgp._posterior_arrays(model, pts)
    vals = _scores(spec, mean, var, best)
    return float(vals[0]) if single else vals


def maximize_1d(
    spec: AcquisitionSpec,
    model: prefgp.PreferenceModel,
    low: float,
    high: float,
) -> tuple[float, float]:
    """Maximize the acquisition for a 1-D model over [low, high].

    Grid scan (512 points) plus golden-section refinement of the best
    bracket. Returns (argmax, value).
    """
    if model.dim != 1:
        raise DimensionMismatch(f"maximize_1d needs a 1-D model, got dim {model.dim}")
    best = _best_mean(spec, model, (np.array([low]), np.array([high])))

    def fn(xs: np.ndarray) -> np.ndarray:
        mean, var = prefgp._posterior_arrays(model, xs[:, None])
        return _scores(spec, mean, var, best)

    return _optim.maximize_on_grid(fn, float(low), float(high))


def maximize_nd(
    spec: AcquisitionSpec,
    model: prefgp.PreferenceModel,
    box: tuple[np.ndarray, np.ndarray],
    restarts: int = RESTARTS,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, float]:
    """Maximize the acquisition over a box in the model's dimension.

    Draws `restarts` uniform starting points from rng (one generator
    call, so the caller's stream advances deterministically), then runs
    up to 3 coordinate-ascent sweeps where each coordinate update is the
    1-D grid + golden-section solve. Returns the best (point, value)
    across restarts.

    A model with no comparisons has a constant acquisition; the sweep
    would drive every coordinate to its lower bound, so that result is
    returned directly without consuming the generator.
    """
    lows = np.asarray(box[0], dtype=float)
    highs = np.asarray(box[1], dtype=float)
    if lows.shape != (model.dim,) or highs.shape != (model.dim,):
        raise DimensionMismatch(
            f"box must be two ({model.dim},) arrays, got {lows.shape}, {highs.shape}"
        )
    if not model.comparisons:
        return lows.copy(), evaluate(spec, model, lows)
    if rng is None:
        rng = np.random.default_rng(0)
    starts = rng.uniform(lows, highs, size=(restarts, model.dim))
    best = _best_mean(spec, model, (lows, highs))

    def slice_values(base: np.ndarray, j: int, xs: np.ndarray) -> np.ndarray:
        mean, var = prefgp._slice_posterior(model, base, j, xs)
        return _scores(spec, mean.ravel(), var.ravel(), best).reshape(mean.shape)

    def point_values(pts: np.ndarray) -> np.ndarray:
        mean, var = prefgp._posterior_arrays(model, pts)
        return _scores(spec, mean, var, best)

    return _optim.coordinate_ascent(
        slice_values, point_values, starts, lows, highs, sweeps=SWEEPS
    )
