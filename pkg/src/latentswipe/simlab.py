"""Simulated preference studies with a synthetic oracle.

Replaces the human in the comparison loop with an oracle that prefers
whichever image embeds closer (by cosine) to a hidden target. Targets
are drawn uniformly from the search box and shared by every strategy
and session seed, so strategies are compared on identical problems and
mean differences are paired rather than confounded by target draws.

The runner writes one row per run to summary.tsv, a per-iteration trace
per run under traces/, and aggregate means per (strategy, dimension)
to aggregates.tsv. `simlab plot` turns saved traces into smoothed
similarity-vs-iteration curves, one PNG per (strategy, dimension).

Runs are embarrassingly parallel; --jobs uses process parallelism when
asked, and results are merged in sorted run-key order either way so the
output files do not depend on scheduling.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import engine, subspace
from .engine import SessionConfig
from .genkit import Generator, ProceduralGenerator
from .genkit.external import ExternalGenerator

TIE_RULES = ("previous_wins", "current_wins")

DEFAULT_WINDOW = 5
_TARGET_TAG = 915001
_SESSION_TAG = 424243
DEFAULT_PCA_SEED = 20240501
DEFAULT_PCA_SAMPLES = 10_000


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two embeddings; 0.0 if either is the
    zero vector."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b) / (na * nb)


def oracle_compare(
    generator: Generator,
    target_embedding: np.ndarray,
    previous_latent: np.ndarray,
    current_latent: np.ndarray,
    tie_rule: str = "previous_wins",
) -> bool:
    """True when the current image is the better match for the target.

    Ties (exactly equal similarities, e.g. identical latents) fall to
    the configured rule; the default keeps the pivot.
    """
    if tie_rule not in TIE_RULES:
        raise ValueError(f"tie_rule must be one of {TIE_RULES}, got {tie_rule!r}")
    sim_prev = cosine_similarity(
        generator.embed(previous_latent), target_embedding
    )
    sim_cur = cosine_similarity(generator.embed(current_latent), target_embedding)
    if sim_cur == sim_prev:
        return tie_rule == "current_wins"
    return sim_cur > sim_prev


def moving_average(values: np.ndarray, window: int = DEFAULT_WINDOW) -> np.ndarray:
    """Trailing mean; early entries average the points seen so far."""
    if window < 1:
        raise ValueError(f"window must be positive, got {window}")
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    for i in range(len(values)):
        out[i] = values[max(0, i - window + 1) : i + 1].mean()
    return out


@dataclass
class RunResult:
    strategy: str
    d_prime: int
    target: int
    seed: int
    final_similarity: float
    best_similarity: float
    seconds: float
    status: str = "ok"
    trace: list[float] | None = None
    arms: list[int] | None = None
    wins: list[bool] | None = None

    @property
    def run_id(self) -> str:
        return f"{self.strategy}-d{self.d_prime}-t{self.target}-s{self.seed}"


def target_coords(smap: subspace.SubspaceMap, target_idx: int) -> np.ndarray:
    lows, highs = subspace.search_box(smap)
    seq = np.random.SeedSequence([_TARGET_TAG, smap.d_prime, target_idx])
    return np.random.default_rng(seq).uniform(lows, highs)


def session_seed(d_prime: int, target_idx: int, seed_idx: int) -> int:
    seq = np.random.SeedSequence([_SESSION_TAG, d_prime, target_idx, seed_idx])
    return int(seq.generate_state(1)[0])


def run_single(
    generator: Generator,
    smap: subspace.SubspaceMap,
    strategy: str,
    target_idx: int,
    seed_idx: int,
    budget: int,
    tie_rule: str = "previous_wins",
) -> RunResult:
    """One simulated session against one hidden target."""
    start = time.perf_counter()
    target = target_coords(smap, target_idx)
    target_emb = generator.embed(subspace.inverse(smap, target))
    config = SessionConfig(
        strategy=strategy,
        seed=session_seed(smap.d_prime, target_idx, seed_idx),
        budget=budget,
    )

    def sim_of(coords: np.ndarray) -> float:
        emb = generator.embed(subspace.inverse(smap, coords))
        return cosine_similarity(emb, target_emb)

    state = engine.start_session(config, smap)
    best = sim_of(state.shown[0].coords)
    trace: list[float] = []
    arms: list[int] = []
    wins: list[bool] = []
    for _ in range(budget):
        prev, cur = state.pending_pair
        cur_sim = sim_of(cur)
        won = oracle_compare(
            generator,
            target_emb,
            subspace.inverse(smap, prev),
            subspace.inverse(smap, cur),
            tie_rule=tie_rule,
        )
        trace.append(cur_sim)
        arms.append(-1 if state.shown[state.pending[1]].arm is None
                    else state.shown[state.pending[1]].arm)
        wins.append(won)
        best = max(best, cur_sim)
        engine.submit_feedback(state, won, decision_time_ms=0.0)
    final_sim = sim_of(engine.final_choice(state))
    return RunResult(
        strategy=strategy,
        d_prime=smap.d_prime,
        target=target_idx,
        seed=seed_idx,
        final_similarity=final_sim,
        best_similarity=best,
        seconds=time.perf_counter() - start,
        trace=trace,
        arms=arms,
        wins=wins,
    )


def _run_guarded(generator, smap, strategy, target_idx, seed_idx, budget, tie_rule):
    try:
        return run_single(generator, smap, strategy, target_idx, seed_idx, budget, tie_rule)
    except Exception as exc:  # a failed run is reported, not fatal
        return RunResult(
            strategy=strategy,
            d_prime=smap.d_prime,
            target=target_idx,
            seed=seed_idx,
            final_similarity=float("nan"),
            best_similarity=float("nan"),
            seconds=0.0,
            status=f"error: {type(exc).__name__}: {exc}",
        )


def build_generator(kind: str = "procedural", dim: int = 32,
                    external_url: str | None = None) -> Generator:
    if kind == "external":
        if not external_url:
            raise ValueError("external generator needs a base URL")
        return ExternalGenerator(external_url)
    return ProceduralGenerator(dim=dim)


def run_experiment(
    strategies: list[str],
    dims: list[int],
    n_targets: int,
    n_seeds: int,
    budget: int,
    out_dir: str | Path,
    generator: Generator | None = None,
    tie_rule: str = "previous_wins",
    n_jobs: int = 1,
    pca_samples: int = DEFAULT_PCA_SAMPLES,
    pca_seed: int = DEFAULT_PCA_SEED,
) -> list[RunResult]:
    """Run the full grid of (strategy, dimension, target, seed) sessions
    and write summary, trace, and aggregate files under out_dir."""
    out = Path(out_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    generator = generator or ProceduralGenerator()
    latents = generator.sample_latents(pca_samples, seed=pca_seed)
    maps = {d: subspace.fit_subspace(latents, d) for d in dims}

    jobs = [
        (maps[d], strategy, t, s)
        for d in dims
        for strategy in strategies
        for t in range(n_targets)
        for s in range(n_seeds)
    ]
    if n_jobs != 1:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=n_jobs)(
            delayed(_run_guarded)(generator, smap, strategy, t, s, budget, tie_rule)
            for smap, strategy, t, s in jobs
        )
    else:
        results = [
            _run_guarded(generator, smap, strategy, t, s, budget, tie_rule)
            for smap, strategy, t, s in jobs
        ]
    results.sort(key=lambda r: (r.strategy, r.d_prime, r.target, r.seed))

    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "strategies": strategies,
                "dims": dims,
                "targets": n_targets,
                "seeds": n_seeds,
                "budget": budget,
                "tie_rule": tie_rule,
                "pca_samples": pca_samples,
                "pca_seed": pca_seed,
                "generator_dim": generator.descriptor().dim,
            },
            fh,
            indent=2,
        )
    with open(out / "summary.tsv", "w", encoding="utf-8") as fh:
        fh.write("strategy\td_prime\ttarget\tseed\tfinal_similarity\t"
                 "best_similarity\tseconds\tstatus\n")
        for r in results:
            fh.write(
                f"{r.strategy}\t{r.d_prime}\t{r.target}\t{r.seed}\t"
                f"{r.final_similarity!r}\t{r.best_similarity!r}\t"
                f"{r.seconds:.3f}\t{r.status}\n"
            )
    for r in results:
        if r.trace is None:
            continue
        with open(out / "traces" / f"{r.run_id}.tsv", "w", encoding="utf-8") as fh:
            fh.write("iteration\tsimilarity\tarm\tcurrent_won\n")
            for i, (sim, arm, won) in enumerate(zip(r.trace, r.arms, r.wins), 1):
                fh.write(f"{i}\t{sim!r}\t{arm}\t{int(won)}\n")
    with open(out / "aggregates.tsv", "w", encoding="utf-8") as fh:
        fh.write("strategy\td_prime\truns\tmean_final\tstd_final\tmean_best\n")
        for strategy in strategies:
            for d in dims:
                finals = [
                    r.final_similarity
                    for r in results
                    if r.strategy == strategy and r.d_prime == d and r.status == "ok"
                ]
                bests = [
                    r.best_similarity
                    for r in results
                    if r.strategy == strategy and r.d_prime == d and r.status == "ok"
                ]
                if finals:
                    fh.write(
                        f"{strategy}\t{d}\t{len(finals)}\t"
                        f"{np.mean(finals):.6f}\t{np.std(finals):.6f}\t"
                        f"{np.mean(bests):.6f}\n"
                    )
    return results


def mean_final(results: list[RunResult], strategy: str, d_prime: int) -> float:
    vals = [
        r.final_similarity
        for r in results
        if r.strategy == strategy and r.d_prime == d_prime and r.status == "ok"
    ]
    return float(np.mean(vals)) if vals else float("nan")


def read_summary(out_dir: str | Path) -> list[RunResult]:
    rows = []
    with open(Path(out_dir) / "summary.tsv", encoding="utf-8") as fh:
        header = fh.readline()
        assert header.startswith("strategy")
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            rows.append(
                RunResult(
                    strategy=parts[0],
                    d_prime=int(parts[1]),
                    target=int(parts[2]),
                    seed=int(parts[3]),
                    final_similarity=float(parts[4]),
                    best_similarity=float(parts[5]),
                    seconds=float(parts[6]),
                    status=parts[7],
                )
            )
    return rows


def plot_results(out_dir: str | Path, window: int = DEFAULT_WINDOW) -> list[Path]:
    """One smoothed similarity-over-iterations PNG per (strategy, dim)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    plots_dir = out / "plots"
    plots_dir.mkdir(exist_ok=True)
    groups: dict[tuple[str, int], list[np.ndarray]] = {}
    for trace_path in sorted((out / "traces").glob("*.tsv")):
        name = trace_path.stem  # strategy-dD-tT-sS
        strategy, dtag = name.split("-")[:2]
        d_prime = int(dtag[1:])
        data = np.loadtxt(trace_path, skiprows=1, usecols=1, ndmin=1)
        groups.setdefault((strategy, d_prime), []).append(
            moving_average(data, window)
        )
    written = []
    for (strategy, d_prime), curves in sorted(groups.items()):
        stack = np.vstack(curves)
        mean = stack.mean(axis=0)
        std = stack.std(axis=0)
        xs = np.arange(1, stack.shape[1] + 1)
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(xs, mean, lw=2, label=f"{strategy}, {len(curves)} runs")
        ax.fill_between(xs, mean - std, mean + std, alpha=0.25)
        ax.set_xlabel("comparison")
        ax.set_ylabel(f"similarity (trailing mean, window {window})")
        ax.set_title(f"{strategy} in {d_prime} dimensions")
        ax.legend(loc="lower right")
        fig.tight_layout()
        path = plots_dir / f"{strategy}-d{d_prime}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="simlab", description="simulated preference optimization studies"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a strategy comparison grid")
    run_p.add_argument("--strategies", default="banditbo,simplebo,random")
    run_p.add_argument("--dims", default="4,8,16")
    run_p.add_argument("--targets", type=int, default=10)
    run_p.add_argument("--seeds", type=int, default=5)
    run_p.add_argument("--budget", type=int, default=50)
    run_p.add_argument("--out", required=True)
    run_p.add_argument("--jobs", type=int, default=1)
    run_p.add_argument("--tie-rule", default="previous_wins", choices=TIE_RULES)
    run_p.add_argument("--generator-dim", type=int, default=32)
    run_p.add_argument("--external-url", default=None,
                       help="use a generator served at this URL")
    run_p.add_argument("--pca-samples", type=int, default=DEFAULT_PCA_SAMPLES)

    plot_p = sub.add_parser("plot", help="plot saved traces")
    plot_p.add_argument("--in", dest="in_dir", required=True)
    plot_p.add_argument("--window", type=int, default=DEFAULT_WINDOW)

    args = parser.parse_args(argv)
    if args.command == "run":
        generator = build_generator(
            "external" if args.external_url else "procedural",
            dim=args.generator_dim,
            external_url=args.external_url,
        )
        results = run_experiment(
            strategies=[s.strip() for s in args.strategies.split(",") if s.strip()],
            dims=[int(d) for d in args.dims.split(",")],
            n_targets=args.targets,
            n_seeds=args.seeds,
            budget=args.budget,
            out_dir=args.out,
            generator=generator,
            tie_rule=args.tie_rule,
            n_jobs=args.jobs,
            pca_samples=args.pca_samples,
        )
        failures = [r for r in results if r.status != "ok"]
        for r in failures:
            print(f"{r.run_id}: {r.status}", file=sys.stderr)
        print(f"{len(results) - len(failures)}/{len(results)} runs ok -> {args.out}")
        return 1 if failures else 0
    plots = plot_results(args.in_dir, window=args.window)
    print(f"wrote {len(plots)} plots under {Path(args.in_dir) / 'plots'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
