"""Comparison session engine.

A session walks a user (or a simulated oracle) through pairwise
comparisons inside the reduced search box. The state always holds one
pending pair: `previous` is the pivot and `current` is the challenger.
Each piece of feedback says whether the challenger won; the winner
becomes the next pivot (configurable to always advance to the latest
point instead), and a strategy proposes the next challenger:

  banditbo  - a UCB bandit picks one search dimension; that dimension's
              1-D preference model is maximized for the new coordinate
              while every other coordinate sits at its own model's
              incumbent. Comparisons train only the model of the
              dimension that produced the challenger, and the reward is
              whether the challenger won. The opening comparison has no
              producing dimension, so it trains nothing.
  simplebo  - one full-dimensional preference model over the box,
              acquisition maximized by multi-start coordinate ascent.
  random    - uniform draws from the box.

Sessions are replayable: given the same config, subspace, and feedback
sequence, every proposed point and model state is reproduced exactly,
because the only randomness flows from one seeded generator whose
invocation count is tracked in rng_cursor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import acquire, bandit, prefgp, subspace
from .errors import NewtonDivergence, SessionFinished

STRATEGIES = ("banditbo", "simplebo", "random")
PIVOT_RULES = ("winner", "latest")

DEFAULT_BUDGET = 50
LENGTHSCALE_FACTOR = 0.3


@dataclass(frozen=True)
class SessionConfig:
    """Everything that, together with the subspace, pins down a session."""

    strategy: str = "banditbo"
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    beta: float = 2.0
    bandit_alpha: float = bandit.DEFAULT_ALPHA
    lengthscale_factor: float = LENGTHSCALE_FACTOR
    signal_variance: float = 1.0
    noise: float = 0.1
    restarts: int = acquire.RESTARTS
    pivot: str = "winner"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.pivot not in PIVOT_RULES:
            raise ValueError(f"pivot must be one of {PIVOT_RULES}, got {self.pivot!r}")
        if self.budget < 1:
            raise ValueError(f"budget must be positive, got {self.budget}")


@dataclass
class ShownPoint:
    coords: np.ndarray
    arm: int | None  # producing dimension for banditbo challengers


@dataclass
class ComparisonRecord:
    iteration: int  # 1-based feedback count
    previous_idx: int
    current_idx: int
    current_won: bool
    arm: int | None
    decision_time_ms: float | None


@dataclass
class SessionState:
    config: SessionConfig
    smap: subspace.SubspaceMap
    rng: np.random.Generator
    rng_cursor: int = 0
    iteration: int = 0
    finished: bool = False
    shown: list[ShownPoint] = field(default_factory=list)
    pending: tuple[int, int] = (0, 1)  # (previous, current) indices into shown
    history: list[ComparisonRecord] = field(default_factory=list)
    last_winner_idx: int | None = None
    bandit_state: bandit.BanditState | None = None
    arm_models: list[prefgp.PreferenceModel] | None = None
    full_model: prefgp.PreferenceModel | None = None
    incumbents: np.ndarray | None = None  # per-dimension cache (banditbo)

    @property
    def d_prime(self) -> int:
        return self.smap.d_prime

    @property
    def pending_pair(self) -> tuple[np.ndarray, np.ndarray]:
        prev, cur = self.pending
        return self.shown[prev].coords, self.shown[cur].coords


@dataclass(frozen=True)
class FeedbackResult:
    finished: bool
    next_idx: int | None  # index of the fresh challenger, None when finished
    final_idx: int | None  # index of the final choice, None while active


def _draw_uniform(state: SessionState, lows, highs, size=None) -> np.ndarray:
    state.rng_cursor += 1
    return state.rng.uniform(lows, highs, size=size)


def _box(state: SessionState) -> tuple[np.ndarray, np.ndarray]:
    return subspace.search_box(state.smap)


def _lengthscales(config: SessionConfig, lows, highs) -> np.ndarray:
    widths = np.maximum(highs - lows, 1e-12)
    return config.lengthscale_factor * widths


def start_session(config: SessionConfig, smap: subspace.SubspaceMap) -> SessionState:
    """Open a session: draw the two opening points and set up the
    strategy's models."""
    state = SessionState(
        config=config,
        smap=smap,
        rng=np.random.Generator(np.random.PCG64(config.seed)),
    )
    lows, highs = _box(state)
    first = _draw_uniform(state, lows, highs)
    second = _draw_uniform(state, lows, highs)
    state.shown = [ShownPoint(first, None), ShownPoint(second, None)]
    state.pending = (0, 1)

    ls = _lengthscales(config, lows, highs)
    if config.strategy == "banditbo":
        state.bandit_state = bandit.create_bandit(smap.d_prime, alpha=config.bandit_alpha)
        state.arm_models = [
            prefgp.PreferenceModel(
                1,
                lengthscale=ls[j],
                signal_variance=config.signal_variance,
                noise=config.noise,
            )
            for j in range(smap.d_prime)
        ]
        state.incumbents = 0.5 * (lows + highs)  # box centers until data arrives
    elif config.strategy == "simplebo":
        state.full_model = prefgp.PreferenceModel(
            smap.d_prime,
            lengthscale=ls,
            signal_variance=config.signal_variance,
            noise=config.noise,
        )
    return state


def _fit_or_fall_back(model: prefgp.PreferenceModel) -> None:
    """Refit after new evidence; a diverged mode search degrades the
    model to its prior rather than failing the session."""
    try:
        prefgp.fit_laplace(model)
    except NewtonDivergence:
        prefgp.reset_to_prior(model)


def _next_banditbo(state: SessionState) -> tuple[np.ndarray, int]:
    lows, highs = _box(state)
    arm = bandit.select_arm(state.bandit_state)
    spec = acquire.AcquisitionSpec("ucb", beta=state.config.beta)
    coord, _ = acquire.maximize_1d(spec, state.arm_models[arm], lows[arm], highs[arm])
    coords = state.incumbents.copy()
    coords[arm] = coord
    return coords, arm


def _next_simplebo(state: SessionState) -> np.ndarray:
    spec = acquire.AcquisitionSpec("ucb", beta=state.config.beta)
    state.rng_cursor += 1
    coords, _ = acquire.maximize_nd(
        spec,
        state.full_model,
        _box(state),
        restarts=state.config.restarts,
        rng=state.rng,
    )
    return coords


def submit_feedback(
    state: SessionState,
    current_won: bool,
    decision_time_ms: float | None = None,
) -> FeedbackResult:
    """Record one comparison outcome and propose the next challenger.

    Raises SessionFinished once the comparison budget is used up. The
    feedback that exhausts the budget finishes the session; the final
    choice is the winner of that last pair.
    """
    if state.finished:
        raise SessionFinished(
            f"session already finished after {state.iteration} comparisons"
        )
    prev_idx, cur_idx = state.pending
    winner_idx = cur_idx if current_won else prev_idx
    loser_idx = prev_idx if current_won else cur_idx
    producing_arm = state.shown[cur_idx].arm
    state.iteration += 1
    state.history.append(
        ComparisonRecord(
            iteration=state.iteration,
            previous_idx=prev_idx,
            current_idx=cur_idx,
            current_won=bool(current_won),
            arm=producing_arm,
            decision_time_ms=decision_time_ms,
        )
    )
    state.last_winner_idx = winner_idx

    config = state.config
    if config.strategy == "banditbo" and producing_arm is not None:
        bandit.record_reward(state.bandit_state, producing_arm, 1 if current_won else 0)
        model = state.arm_models[producing_arm]
        prefgp.add_observation(
            model,
            state.shown[winner_idx].coords[producing_arm : producing_arm + 1],
            state.shown[loser_idx].coords[producing_arm : producing_arm + 1],
        )
        _fit_or_fall_back(model)
        lows, highs = _box(state)
        best, _ = prefgp.incumbent(
            model, (lows[producing_arm : producing_arm + 1], highs[producing_arm : producing_arm + 1])
        )
        state.incumbents[producing_arm] = best[0]
    elif config.strategy == "simplebo":
        prefgp.add_observation(
            state.full_model,
            state.shown[winner_idx].coords,
            state.shown[loser_idx].coords,
        )
        _fit_or_fall_back(state.full_model)

    if state.iteration >= config.budget:
        state.finished = True
        return FeedbackResult(finished=True, next_idx=None, final_idx=winner_idx)

    if config.strategy == "banditbo":
        coords, arm = _next_banditbo(state)
    elif config.strategy == "simplebo":
        coords, arm = _next_simplebo(state), None
    else:
        lows, highs = _box(state)
        coords, arm = _draw_uniform(state, lows, highs), None

    state.shown.append(ShownPoint(coords, arm))
    next_idx = len(state.shown) - 1
    pivot_idx = winner_idx if config.pivot == "winner" else cur_idx
    state.pending = (pivot_idx, next_idx)
    return FeedbackResult(finished=False, next_idx=next_idx, final_idx=None)


def final_choice(state: SessionState) -> np.ndarray:
    """Coordinates of the winner of the most recent judged pair, or the
    first shown point before any feedback."""
    if state.last_winner_idx is None:
        return state.shown[state.pending[0]].coords
    return state.shown[state.last_winner_idx].coords
