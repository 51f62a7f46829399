"""UCB1-style bandit over search dimensions.

Each arm is one retained subspace dimension. A pull means proposing the
next candidate by moving along that dimension, and the binary reward is
whether the proposal beat the pivot. Scores follow

    U_i = r_hat_i + sqrt(alpha * ln(t) / N_i)

with r_hat_i the arm's empirical win rate, N_i its pull count, t the
total number of recorded rewards, and natural log throughout. Unpulled
arms score +inf, which forces one exploratory pull of every arm in
index order before the bonus term starts discriminating.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArm, NoArms

DEFAULT_ALPHA = 0.5


@dataclass
class ArmState:
    pulls: int = 0
    wins: int = 0

    @property
    def win_rate(self) -> float:
        return self.wins / self.pulls if self.pulls else 0.0


@dataclass
class BanditState:
    arms: list[ArmState]
    alpha: float = DEFAULT_ALPHA
    t: int = field(default=0)

    @property
    def n_arms(self) -> int:
        return len(self.arms)


def create_bandit(n_arms: int, alpha: float = DEFAULT_ALPHA) -> BanditState:
    if n_arms < 1:
        raise NoArms(f"need at least one arm, got {n_arms}")
    return BanditState(arms=[ArmState() for _ in range(n_arms)], alpha=alpha)


def ucb_scores(state: BanditState, t: int | None = None) -> np.ndarray:
    """Score every arm at time t (the stored reward count by default).

    Unpulled arms are +inf. With t <= 1 the bonus is zero and pulled
    arms score their raw win rate.
    """
    t_used = state.t if t is None else t
    log_t = np.log(t_used) if t_used > 1 else 0.0
    scores = np.empty(state.n_arms)
    for i, arm in enumerate(state.arms):
        if arm.pulls == 0:
            scores[i] = np.inf
        else:
            scores[i] = arm.win_rate + np.sqrt(state.alpha * log_t / arm.pulls)
    return scores


def select_arm(state: BanditState) -> int:
    """Arm with the highest score for the pull about to happen.

    Evaluates the scores at t + 1 since the pull being chosen will
    itself be the (t+1)-th. Ties, including among unpulled arms, go to
    the lowest index.
    """
    scores = ucb_scores(state, t=state.t + 1)
    return int(np.argmax(scores))


def record_reward(state: BanditState, arm: int, reward: float) -> None:
    """Record a 0/1 reward for one pull of `arm`."""
    if not 0 <= arm < state.n_arms:
        raise InvalidArm(f"arm {arm} out of range [0, {state.n_arms})")
    if reward not in (0, 1):
        raise ValueError(f"reward must be 0 or 1, got {reward!r}")
    state.arms[arm].pulls += 1
    state.arms[arm].wins += int(reward)
    state.t += 1
