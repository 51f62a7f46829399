"""
A full swipe session, answered by the synthetic oracle
======================================================

One session of the optimization loop: the engine proposes a candidate,
the oracle (standing in for a human) swipes it against the pivot, and
the winner becomes the next pivot. The hidden target is a point in the
search box; we watch the similarity climb.
"""

import numpy as np

from latentswipe import engine, simlab, subspace
from latentswipe.engine import SessionConfig
from latentswipe.genkit import ProceduralGenerator

gen = ProceduralGenerator()
latents = gen.sample_latents(10_000, seed=20240501)
smap = subspace.fit_subspace(latents, 8)

target = simlab.target_coords(smap, target_idx=0)
target_emb = gen.embed(subspace.inverse(smap, target))
print(f"hidden target drawn in the d'=8 box: {np.round(target, 2)}")


def similarity(coords):
    emb = gen.embed(subspace.inverse(smap, coords))
    return simlab.cosine_similarity(emb, target_emb)


for strategy in ("banditbo", "simplebo"):
    config = SessionConfig(strategy=strategy, seed=12, budget=50)
    state = engine.start_session(config, smap)
    for i in range(config.budget):
        prev, cur = state.pending_pair
        won = simlab.oracle_compare(
            gen,
            target_emb,
            subspace.inverse(smap, prev),
            subspace.inverse(smap, cur),
        )
        engine.submit_feedback(state, won)
        if (i + 1) % 10 == 0:
            best = similarity(engine.final_choice(state))
            print(f"{strategy:>9} swipe {i + 1:>2}: pivot similarity {best:.3f}")
    final = engine.final_choice(state)
    print(f"{strategy:>9} final similarity {similarity(final):.3f}")

    # the chosen latent renders to an actual face
    image = gen.render(subspace.inverse(smap, final))
    path = f"demo_session_{strategy}.png"
    with open(path, "wb") as fh:
        fh.write(image.to_png_bytes())
    print(f"wrote {path}")

# the target itself, for visual comparison
with open("demo_session_target.png", "wb") as fh:
    fh.write(gen.render(subspace.inverse(smap, target)).to_png_bytes())
print("wrote demo_session_target.png")
