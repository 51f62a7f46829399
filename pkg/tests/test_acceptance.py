"""End-to-end acceptance checks.

One test per acceptance criterion, each run at its stated tolerance.
Every test records a one-line verdict that the conftest hook prints in
an "acceptance criteria" section at the end of the pytest run.
"""

import math
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

import oracles
from conftest import record_criterion
from latentswipe import bandit, engine, eventlog, prefgp, simlab, subspace
from latentswipe.engine import SessionConfig
from latentswipe.genkit import ProceduralGenerator
from latentswipe.service import ServiceSettings, create_app


# -- strategy comparison trends ------------------------------------------


@pytest.fixture(scope="module")
def study(tmp_path_factory):
    """The full strategy comparison: budget 50, 10 targets, 5 seeds,
    all three strategies at 4, 8, and 16 search dimensions."""
    t0 = time.perf_counter()
    results = simlab.run_experiment(
        ["banditbo", "simplebo", "random"],
        [4, 8, 16],
        n_targets=10,
        n_seeds=5,
        budget=50,
        out_dir=tmp_path_factory.mktemp("study"),
    )
    elapsed = time.perf_counter() - t0
    failures = [r.run_id for r in results if r.status != "ok"]
    assert failures == [], f"failed runs: {failures}"
    means = {
        (s, d): simlab.mean_final(results, s, d)
        for s in ("banditbo", "simplebo", "random")
        for d in (4, 8, 16)
    }
    return means, elapsed


class TestStrategyTrends:
    def test_sixteen_dims_bandit_wins_with_margin(self, study):
        means, _ = study
        b, s, r = means["banditbo", 16], means["simplebo", 16], means["random", 16]
        ok = (b > s > r) and (b - s >= 0.02)
        record_criterion(
            "trend d16: banditbo > simplebo > random, margin >= 0.02",
            ok,
            f"banditbo {b:.4f}, simplebo {s:.4f}, random {r:.4f}, "
            f"margin {b - s:+.4f}",
        )
        assert ok

    def test_eight_dims_bandit_at_least_matches(self, study):
        means, _ = study
        b, s = means["banditbo", 8], means["simplebo", 8]
        ok = b >= s
        record_criterion(
            "trend d8: banditbo >= simplebo", ok,
            f"banditbo {b:.4f}, simplebo {s:.4f}, margin {b - s:+.4f}",
        )
        assert ok

    def test_four_dims_no_meaningful_gap(self, study):
        means, _ = study
        b, s = means["banditbo", 4], means["simplebo", 4]
        ok = abs(b - s) <= 0.05
        record_criterion(
            "trend d4: |banditbo - simplebo| <= 0.05", ok,
            f"banditbo {b:.4f}, simplebo {s:.4f}, gap {b - s:+.4f}",
        )
        assert ok

    def test_runtime_within_budget(self, study):
        _, elapsed = study
        ok = elapsed <= 600.0
        record_criterion(
            "trend study runtime <= 10 minutes", ok, f"{elapsed:.0f}s"
        )
        assert ok


# -- preference model correctness ----------------------------------------


def _random_model(rng, n_points, n_comparisons):
    dim = int(rng.integers(1, 4))
    model = prefgp.PreferenceModel(
        dim,
        lengthscale=float(rng.uniform(0.4, 1.5)),
        noise=float(rng.uniform(0.05, 0.3)),
    )
    points = rng.uniform(-1.5, 1.5, size=(n_points, dim))
    for _ in range(n_comparisons):
        i, j = rng.choice(n_points, size=2, replace=False)
        prefgp.add_observation(model, points[i], points[j])
    return model


class TestPreferenceModel:
    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(50):
            model = _random_model(
                rng, n_points=int(rng.integers(2, 9)),
                n_comparisons=int(rng.integers(1, 10)),
            )
            prefgp.fit_laplace(model)
            f = rng.normal(scale=0.8, size=model.n_points)
            _, grad = prefgp.log_posterior(model, f)
            num = oracles.central_difference_gradient(
                lambda x: prefgp.log_posterior(model, x)[0], f
            )
            rel = np.abs(grad - num) / np.maximum(np.abs(num), 1e-8)
            worst = max(worst, float(rel.max()))
        ok = worst < 1e-4
        record_criterion(
            "log-posterior gradient vs central differences (50 instances)",
            ok, f"worst relative error {worst:.2e} (< 1e-4)",
        )
        assert ok

    def test_map_matches_exhaustive_search(self):
        rng = np.random.default_rng(2025)
        worst = 0.0
        for n_points in (2, 3, 4):
            for _ in range(2):
                model = prefgp.PreferenceModel(
                    2, lengthscale=1.0, noise=float(rng.uniform(0.1, 0.3))
                )
                points = rng.uniform(-1, 1, size=(n_points, 2))
                for _ in range(int(rng.integers(1, 2 * n_points))):
                    i, j = rng.choice(n_points, size=2, replace=False)
                    prefgp.add_observation(model, points[i], points[j])
                prefgp.fit_laplace(model)
                K = model._kernel(model.points, model.points)
                ref = oracles.grid_map_estimate(
                    model.comparisons, K, model.noise
                )
                worst = max(worst, float(np.abs(model.f_hat - ref).max()))
        ok = worst < 0.05
        record_criterion(
            "Laplace mode vs exhaustive grid search (n <= 4)",
            ok, f"worst per-coordinate gap {worst:.4f} (< 0.05)",
        )
        assert ok

    def test_winner_utility_dominates(self):
        rng = np.random.default_rng(2026)
        violations = 0
        for _ in range(100):
            dim = int(rng.integers(1, 5))
            model = prefgp.PreferenceModel(
                dim,
                lengthscale=float(rng.uniform(0.4, 1.5)),
                noise=float(rng.uniform(0.05, 0.3)),
            )
            a, b = rng.uniform(-1.5, 1.5, size=(2, dim))
            prefgp.add_observation(model, a, b)
            prefgp.fit_laplace(model)
            if not model.f_hat[0] > model.f_hat[1]:
                violations += 1
        ok = violations == 0
        record_criterion(
            "winner dominance on 100 single-comparison fits",
            ok, f"{violations} violations",
        )
        assert ok


# -- linear reduction correctness ----------------------------------------


class TestReduction:
    def test_round_trip_identity_when_nothing_discarded(self):
        rng = np.random.default_rng(77)
        data = rng.normal(size=(300, 6)) * np.array(
            [2.2, 1.7, 1.3, 0.9, 0.5, 0.2]
        )
        smap = subspace.fit_subspace(data, 6)
        recon = subspace.inverse(smap, subspace.project(smap, data))
        worst = float(np.abs(recon - data).max())
        ok = worst < 1e-8
        record_criterion(
            "reduction round trip at full rank", ok,
            f"max abs error {worst:.2e} (< 1e-8)",
        )
        assert ok

    def test_reconstruction_error_is_discarded_variance(self):
        rng = np.random.default_rng(78)
        data = rng.normal(size=(500, 6)) * np.array(
            [2.0, 1.5, 1.1, 0.8, 0.4, 0.15]
        )
        smap = subspace.fit_subspace(data, 3)
        recon = subspace.inverse(smap, subspace.project(smap, data))
        mse = float(np.mean(np.sum((data - recon) ** 2, axis=1)))
        vals, _ = oracles.eigen_descending(oracles.covariance_by_definition(data))
        discarded = float(vals[3:].sum())
        gap = abs(mse - discarded)
        ok = gap < 1e-6
        record_criterion(
            "reconstruction error equals discarded eigenvalue sum", ok,
            f"mse {mse:.6f} vs eigensum {discarded:.6f}, gap {gap:.2e} (< 1e-6)",
        )
        assert ok


# -- bandit sanity ---------------------------------------------------------


class TestBandit:
    def test_ucb_score_matches_hand_computation(self):
        state = bandit.create_bandit(3, alpha=0.5)
        bandit.record_reward(state, 0, 1.0)
        bandit.record_reward(state, 0, 0.0)  # arm 0: N=2, mean reward 0.5
        score = float(bandit.ucb_scores(state, t=8)[0])
        expected = 0.5 + math.sqrt(0.5 * math.log(8.0) / 2.0)
        gap = abs(score - expected)
        ok = gap <= 1e-4
        record_criterion(
            "UCB score vs hand computation (t=8, N=2, mean 0.5, alpha 0.5)",
            ok, f"score {score:.7f} vs {expected:.7f}, gap {gap:.1e} (<= 1e-4)",
        )
        assert ok

    def test_best_bernoulli_arm_dominates_pulls(self):
        probs = np.array([0.9, 0.5, 0.1])
        shares = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            state = bandit.create_bandit(3, alpha=0.5)
            for _ in range(2000):
                arm = bandit.select_arm(state)
                bandit.record_reward(state, arm, float(rng.random() < probs[arm]))
            shares.append(state.arms[0].pulls / 2000.0)
        worst = min(shares)
        ok = worst > 0.60
        record_criterion(
            "Bernoulli(0.9/0.5/0.1) best-arm share > 60% on 20 seeds",
            ok, f"worst share {worst:.1%}, mean {np.mean(shares):.1%}",
        )
        assert ok


# -- determinism and replay ------------------------------------------------


def _scripted_session(smap, config, log_path):
    writer = eventlog.EventLogWriter(log_path, "scripted")
    state = engine.start_session(config, smap)
    writer.log_shown(state, 0)
    writer.log_shown(state, 1)
    feedback = np.random.default_rng(4242).integers(0, 2, size=config.budget)
    for won in feedback:
        result = engine.submit_feedback(state, bool(won), decision_time_ms=10.0)
        writer.log_feedback(state)
        if not result.finished:
            writer.log_shown(state, result.next_idx)
    return state


class TestReplay:
    def test_scripted_session_replays_bit_exactly(self, tmp_path):
        gen = ProceduralGenerator()
        smap = subspace.fit_subspace(gen.sample_latents(2000, seed=5), 8)
        config = SessionConfig(strategy="banditbo", seed=31415, budget=50)
        log_path = tmp_path / "events.log"
        live = _scripted_session(smap, config, log_path)
        replayed = eventlog.replay(
            config, smap, eventlog.read_events(log_path)
        )
        same = (
            len(replayed.shown) == len(live.shown)
            and all(
                np.array_equal(a.coords, b.coords) and a.arm == b.arm
                for a, b in zip(live.shown, replayed.shown)
            )
            and replayed.rng_cursor == live.rng_cursor
            and replayed.finished
        )
        record_criterion(
            "50-feedback session replays from its event log bit-exactly",
            same, f"{len(live.shown)} points compared, rng cursor "
                  f"{live.rng_cursor}",
        )
        assert same

    def test_service_crash_restart_preserves_session(self, tmp_path):
        settings = ServiceSettings(
            data_dir=tmp_path / "svc",
            generator_dim=24,
            pca_samples=600,
            pca_seed=41,
        )
        feedback = [bool(b) for b in
                    np.random.default_rng(999).integers(0, 2, size=50)]

        def drive(client, sid, lo, hi):
            for i in range(lo + 1, hi + 1):
                resp = client.post(f"/v1/sessions/{sid}/feedback", json={
                    "current_won": feedback[i - 1], "iteration": i,
                    "decision_time_ms": 5.0,
                })
                assert resp.status_code == 200

        with TestClient(create_app(settings)) as c1:
            resp = c1.post("/v1/sessions", json={
                "strategy": "banditbo", "d_prime": 8, "seed": 2718,
                "budget": 50,
            })
            sid = resp.json()["session_id"]
            drive(c1, sid, 0, 25)
            svc1 = c1.app.state.service
            shown_before = [p.coords.copy()
                            for p in svc1.sessions[sid].state.shown]

        # new process image over the same data directory
        with TestClient(create_app(settings)) as c2:
            svc2 = c2.app.state.service
            assert svc2.restore_errors == {}
            restored = svc2.sessions[sid].state
            exact = len(restored.shown) == len(shown_before) and all(
                np.array_equal(a, b.coords)
                for a, b in zip(shown_before, restored.shown)
            )
            drive(c2, sid, 25, 50)
            # feedback rebinds the entry's state, so re-fetch before reading
            restored = svc2.sessions[sid].state
            final_restarted = engine.final_choice(restored).copy()
            assert restored.finished

        # control: the same scripted session without the restart
        control = ServiceSettings(
            data_dir=tmp_path / "control",
            generator_dim=24,
            pca_samples=600,
            pca_seed=41,
        )
        with TestClient(create_app(control)) as c3:
            resp = c3.post("/v1/sessions", json={
                "strategy": "banditbo", "d_prime": 8, "seed": 2718,
                "budget": 50,
            })
            sid3 = resp.json()["session_id"]
            drive(c3, sid3, 0, 50)
            state3 = c3.app.state.service.sessions[sid3].state
            same_final = np.array_equal(
                engine.final_choice(state3), final_restarted
            )
        ok = exact and same_final
        record_criterion(
            "service crash-restart preserves a mid-flight session bit-exactly",
            ok, f"26 points verified at restart, final latent "
                f"{'identical' if same_final else 'DIVERGED'}",
        )
        assert ok


# -- oracle fidelity ---------------------------------------------------------


class TestOracleFidelity:
    def test_matches_independent_recomputation_on_10000_triples(self):
        gen = ProceduralGenerator()
        latents = gen.sample_latents(30_000, seed=91)
        disagreements = 0
        for i in range(10_000):
            target, prev, cur = latents[3 * i : 3 * i + 3]
            target_emb = gen.embed(target)
            got = simlab.oracle_compare(gen, target_emb, prev, cur)
            sim_prev = oracles.cosine_by_fsum(gen.embed(prev), target_emb)
            sim_cur = oracles.cosine_by_fsum(gen.embed(cur), target_emb)
            if got != (sim_cur > sim_prev):
                disagreements += 1
        ok = disagreements == 0
        record_criterion(
            "oracle agrees with independent recomputation on 10,000 triples",
            ok, f"{disagreements} disagreements",
        )
        assert ok
