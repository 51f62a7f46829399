"""
Comparing strategies with the study runner
==========================================

A reduced version of the full strategy comparison: every strategy hunts
the same hidden targets from the same seeds, so differences in mean
final similarity are attributable to the strategy alone. The full-size
study (10 targets, 5 seeds, d' in {4, 8, 16}) is one CLI call:

    simlab run --strategies banditbo,simplebo,random \
               --dims 4,8,16 --targets 10 --seeds 5 --budget 50 --out study/
    simlab plot --in study/
"""

from pathlib import Path

from latentswipe import simlab

OUT = Path("demo_study")

results = simlab.run_experiment(
    strategies=["banditbo", "simplebo", "random"],
    dims=[8],
    n_targets=3,
    n_seeds=2,
    budget=30,
    out_dir=OUT,
)

failures = [r.run_id for r in results if r.status != "ok"]
print(f"runs: {len(results)}, failures: {len(failures)}")

print(f"\n{'strategy':>10} {'mean final':>11} {'mean best':>10}")
for strategy in ("banditbo", "simplebo", "random"):
    rows = [r for r in results if r.strategy == strategy]
    mean_final = simlab.mean_final(results, strategy, 8)
    mean_best = sum(r.best_similarity for r in rows) / len(rows)
    print(f"{strategy:>10} {mean_final:>11.4f} {mean_best:>10.4f}")

written = simlab.plot_results(OUT)
print(f"\nwrote {len(written)} plots under {OUT / 'plots'}")
print(f"per-run traces under {OUT / 'traces'}, summary in {OUT / 'summary.tsv'}")
