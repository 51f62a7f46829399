import numpy as np
import pytest

from latentswipe import engine, prefgp, subspace
from latentswipe.engine import SessionConfig
from latentswipe.errors import NewtonDivergence, SessionFinished


@pytest.fixture(scope="module")
def smap():
    rng = np.random.default_rng(900)
    samples = rng.normal(size=(400, 6)) * np.array([2.5, 2.0, 1.5, 1.0, 0.6, 0.3])
    return subspace.fit_subspace(samples, 4)


def run_session(config, smap, feedback):
    state = engine.start_session(config, smap)
    results = []
    for won in feedback:
        results.append(engine.submit_feedback(state, won))
    return state, results


def scripted_feedback(n, seed):
    return [bool(b) for b in np.random.default_rng(seed).integers(0, 2, size=n)]


class TestStart:
    def test_two_starting_points_inside_box(self, smap):
        state = engine.start_session(SessionConfig(seed=1), smap)
        lows, highs = subspace.search_box(smap)
        assert len(state.shown) == 2
        for point in state.shown:
            assert np.all(point.coords >= lows) and np.all(point.coords <= highs)
            assert point.arm is None
        assert state.pending == (0, 1)
        assert state.rng_cursor == 2

    def test_same_seed_same_points(self, smap):
        a = engine.start_session(SessionConfig(seed=5), smap)
        b = engine.start_session(SessionConfig(seed=5), smap)
        for pa, pb in zip(a.shown, b.shown):
            np.testing.assert_array_equal(pa.coords, pb.coords)

    def test_strategy_specific_state(self, smap):
        bb = engine.start_session(SessionConfig(strategy="banditbo", seed=2), smap)
        assert bb.bandit_state.n_arms == 4
        assert len(bb.arm_models) == 4
        np.testing.assert_array_equal(bb.incumbents, np.zeros(4))
        sb = engine.start_session(SessionConfig(strategy="simplebo", seed=2), smap)
        assert sb.full_model.dim == 4
        rd = engine.start_session(SessionConfig(strategy="random", seed=2), smap)
        assert rd.bandit_state is None and rd.full_model is None

    def test_lengthscale_tracks_box_width(self, smap):
        state = engine.start_session(SessionConfig(strategy="simplebo", seed=3), smap)
        lows, highs = subspace.search_box(smap)
        np.testing.assert_allclose(
            state.full_model.lengthscale, 0.3 * (highs - lows)
        )

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            SessionConfig(strategy="hillclimb")
        with pytest.raises(ValueError):
            SessionConfig(pivot="loser")
        with pytest.raises(ValueError):
            SessionConfig(budget=0)


class TestBanditBoFlow:
    def test_first_feedback_trains_nothing_but_moves_pivot(self, smap):
        config = SessionConfig(strategy="banditbo", seed=7)
        state = engine.start_session(config, smap)
        result = engine.submit_feedback(state, True)
        assert state.bandit_state.t == 0  # no producing arm yet
        assert all(m.n_comparisons == 0 for m in state.arm_models)
        # challenger differs from both openers, one coordinate from the
        # selected arm, the rest at box centers
        new = state.shown[result.next_idx]
        assert new.arm == 0  # all arms unpulled, ties to lowest index
        others = [j for j in range(4) if j != new.arm]
        np.testing.assert_array_equal(new.coords[others], np.zeros(3))
        for idx in (0, 1):
            assert not np.array_equal(new.coords, state.shown[idx].coords)
        assert state.pending == (1, 2)  # current won, so it is the pivot

    def test_second_feedback_rewards_the_producing_arm(self, smap):
        config = SessionConfig(strategy="banditbo", seed=8)
        state = engine.start_session(config, smap)
        engine.submit_feedback(state, True)
        arm = state.shown[-1].arm
        engine.submit_feedback(state, False)
        assert state.bandit_state.t == 1
        assert state.bandit_state.arms[arm].pulls == 1
        assert state.bandit_state.arms[arm].wins == 0
        assert state.arm_models[arm].n_comparisons == 1
        # the next challenger explores the next unpulled arm
        assert state.shown[-1].arm == arm + 1

    def test_comparisons_recorded_in_one_dimension_only(self, smap):
        config = SessionConfig(strategy="banditbo", seed=9)
        state, _ = run_session(config, smap, scripted_feedback(12, seed=90))
        total = sum(m.n_comparisons for m in state.arm_models)
        assert total == 11  # every feedback after the first trains one arm
        for model in state.arm_models:
            assert model.dim == 1

    def test_incumbent_cache_updates_only_producing_arm(self, smap):
        config = SessionConfig(strategy="banditbo", seed=10)
        state = engine.start_session(config, smap)
        engine.submit_feedback(state, True)
        before = state.incumbents.copy()
        arm = state.shown[-1].arm
        engine.submit_feedback(state, True)
        after = state.incumbents
        unchanged = [j for j in range(4) if j != arm]
        np.testing.assert_array_equal(after[unchanged], before[unchanged])


class TestSimpleBoFlow:
    def test_every_feedback_trains_the_full_model(self, smap):
        config = SessionConfig(strategy="simplebo", seed=11)
        state, _ = run_session(config, smap, scripted_feedback(6, seed=61))
        assert state.full_model.n_comparisons == 6
        lows, highs = subspace.search_box(smap)
        for point in state.shown:
            assert np.all(point.coords >= lows) and np.all(point.coords <= highs)
            assert point.arm is None

    def test_rng_cursor_counts_maximizer_draws(self, smap):
        config = SessionConfig(strategy="simplebo", seed=12)
        state, _ = run_session(config, smap, scripted_feedback(3, seed=31))
        assert state.rng_cursor == 2 + 3  # two openers plus one per challenger


class TestRandomFlow:
    def test_uniform_proposals_no_models(self, smap):
        config = SessionConfig(strategy="random", seed=13)
        state, _ = run_session(config, smap, scripted_feedback(8, seed=81))
        assert state.full_model is None and state.arm_models is None
        assert state.rng_cursor == 2 + 8


class TestPivot:
    def test_winner_carries_forward(self, smap):
        config = SessionConfig(strategy="random", seed=14)
        state = engine.start_session(config, smap)
        engine.submit_feedback(state, False)  # previous wins
        assert state.pending[0] == 0
        engine.submit_feedback(state, True)  # challenger wins
        assert state.pending[0] == state.pending[1] - 1 == len(state.shown) - 2

    def test_latest_rule_advances_regardless(self, smap):
        config = SessionConfig(strategy="random", seed=15, pivot="latest")
        state = engine.start_session(config, smap)
        engine.submit_feedback(state, False)
        assert state.pending[0] == 1  # the loser, because it was latest

    def test_final_choice_tracks_last_winner(self, smap):
        config = SessionConfig(strategy="random", seed=16)
        state = engine.start_session(config, smap)
        first, second = (p.coords for p in state.shown)
        engine.submit_feedback(state, True)
        np.testing.assert_array_equal(engine.final_choice(state), second)
        state2 = engine.start_session(config, smap)
        engine.submit_feedback(state2, False)
        np.testing.assert_array_equal(engine.final_choice(state2), first)


class TestBudget:
    def test_session_finishes_exactly_at_budget(self, smap):
        config = SessionConfig(strategy="banditbo", seed=17, budget=10)
        state = engine.start_session(config, smap)
        for i in range(10):
            result = engine.submit_feedback(state, bool(i % 2))
        assert result.finished and state.finished
        assert result.final_idx == state.last_winner_idx
        assert len(state.shown) <= config.budget + 2
        with pytest.raises(SessionFinished):
            engine.submit_feedback(state, True)

    def test_shown_count_is_budget_plus_one(self, smap):
        config = SessionConfig(strategy="random", seed=18, budget=7)
        state, _ = run_session(config, smap, scripted_feedback(7, seed=71))
        assert len(state.shown) == 8  # 2 openers + 6 challengers


class TestDeterminism:
    @pytest.mark.parametrize("strategy", ["banditbo", "simplebo", "random"])
    def test_identical_runs_bit_for_bit(self, smap, strategy):
        config = SessionConfig(strategy=strategy, seed=19, budget=12)
        feedback = scripted_feedback(12, seed=191)
        a, _ = run_session(config, smap, feedback)
        b, _ = run_session(config, smap, feedback)
        assert len(a.shown) == len(b.shown)
        for pa, pb in zip(a.shown, b.shown):
            np.testing.assert_array_equal(pa.coords, pb.coords)
            assert pa.arm == pb.arm
        assert a.rng_cursor == b.rng_cursor

    def test_feedback_sequence_changes_proposals(self, smap):
        config = SessionConfig(strategy="simplebo", seed=20, budget=6)
        a, _ = run_session(config, smap, [True] * 6)
        b, _ = run_session(config, smap, [False] * 6)
        assert not np.array_equal(a.shown[-1].coords, b.shown[-1].coords)


class TestDivergenceRecovery:
    def test_failed_fit_degrades_to_prior_and_continues(self, smap, monkeypatch):
        config = SessionConfig(strategy="simplebo", seed=21)
        state = engine.start_session(config, smap)

        def explode(model):
            raise NewtonDivergence("forced")

        monkeypatch.setattr(prefgp, "fit_laplace", explode)
        result = engine.submit_feedback(state, True)
        assert not result.finished
        assert state.full_model.is_fitted  # prior installed
        mean, var = prefgp.posterior(state.full_model, np.zeros(4))
        assert mean == 0.0 and var == config.signal_variance
