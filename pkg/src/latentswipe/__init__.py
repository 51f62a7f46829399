"""Swipe-driven preferential Bayesian optimization over a reduced
latent subspace of an image generator."""

__version__ = "0.1.0"

from . import acquire, bandit, errors, prefgp, subspace  # noqa: F401
