"""
Learning a utility function from pairwise comparisons
=====================================================

The model never sees function values, only "A beat B" outcomes. This
demo fits the preference GP on comparisons generated by a hidden 1-D
utility and plots the learned posterior against the truth.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from latentswipe import prefgp


def hidden_utility(x):
    return np.exp(-0.5 * ((x - 0.6) / 0.5) ** 2)


rng = np.random.default_rng(7)
model = prefgp.PreferenceModel(dim=1, lengthscale=0.6, noise=0.1)

# pairs drawn at random; the winner is whichever scores higher
for _ in range(25):
    a, b = rng.uniform(-2.0, 2.0, size=(2, 1))
    if hidden_utility(a[0]) >= hidden_utility(b[0]):
        prefgp.add_observation(model, a, b)
    else:
        prefgp.add_observation(model, b, a)

prefgp.fit_laplace(model)
print(f"model holds {model.n_points} points, {model.n_comparisons} comparisons")
print(f"Newton iterations to the mode: {model.newton_iters}")

xs = np.linspace(-2.0, 2.0, 200)[:, None]
mean, var = prefgp.posterior(model, xs)
std = np.sqrt(var)

best_x, _ = prefgp.incumbent(model, (np.array([-2.0]), np.array([2.0])))
print(f"posterior argmax: x = {best_x[0]:+.3f} (truth peaks at +0.600)")

fig, ax = plt.subplots(figsize=(6, 4))
truth = hidden_utility(xs[:, 0])
# utilities are only identified up to scale and shift; normalize both
ax.plot(xs[:, 0], (truth - truth.mean()) / truth.std(), "k--", label="hidden utility (scaled)")
ax.plot(xs[:, 0], (mean - mean.mean()) / mean.std(), label="posterior mean (scaled)")
ax.fill_between(
    xs[:, 0],
    (mean - mean.mean()) / mean.std() - std,
    (mean - mean.mean()) / mean.std() + std,
    alpha=0.25,
    label="posterior band",
)
ax.scatter(model.points[:, 0], np.zeros(model.n_points), marker="|", c="k",
           label="compared points")
ax.legend(loc="lower center", fontsize=8)
ax.set_title("preference GP after 25 pairwise comparisons")
fig.tight_layout()
fig.savefig("demo_preference_model.png", dpi=120)
print("wrote demo_preference_model.png")
