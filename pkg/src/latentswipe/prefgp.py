"""Gaussian process over latent utility, learned from pairwise choices.

The model places a GP prior with a squared-exponential kernel on an
unobserved utility function and explains each recorded comparison with a
probit likelihood: the probability that the winner beat the loser is
Phi((f_w - f_l) / (sqrt(2) * noise)). The posterior over utilities at
the observed points is approximated by a Laplace fit (Newton iterations
with a backtracking line search), and predictions at new points use the
standard Gaussian conditional around that mode.

Numerical notes. The likelihood curvature W is a sum of rank-one terms
d_k d_k^T and is PSD but often singular, so the predictive variance is
evaluated through the symmetric square root of W: with S = W^{1/2},
var(q) = k(q,q) - k_*^T S (I + S K S)^{-1} S k_*, which never inverts W
itself. The Cholesky of K gets a jitter of 1e-6 on the diagonal,
escalated tenfold on failure up to 1e-2 before giving up.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh, solve_triangular
from scipy.special import log_ndtr

from . import _optim
from .errors import (
    DimensionMismatch,
    IllConditionedKernel,
    NewtonDivergence,
    UnfittedModel,
)

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

NEWTON_TOL = 1e-6
MAX_NEWTON_ITERS = 50
BASE_JITTER = 1e-6
MAX_JITTER = 1e-2


def _probit_terms(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(log Phi(z), r(z), s(z)) evaluated stably for very negative z.

    r = phi/Phi is the derivative of log Phi; s = r * (z + r) is its
    negated second derivative, which lies in (0, 1).
    """
    logcdf = log_ndtr(z)
    logpdf = -0.5 * z * z - _LOG_SQRT_2PI
    r = np.exp(logpdf - logcdf)
    s = r * (z + r)
    return logcdf, r, np.maximum(s, 0.0)


class PreferenceModel:
    """Pairwise-preference GP state.

    Parameters
    ----------
    dim : dimensionality of the points being compared.
    lengthscale : scalar or (dim,) array of kernel lengthscales.
    signal_variance : prior variance of the utility.
    noise : probit likelihood noise (comparison noisiness).
    """

    def __init__(
        self,
        dim: int,
        lengthscale: float | np.ndarray = 1.0,
        signal_variance: float = 1.0,
        noise: float = 0.1,
        newton_tol: float = NEWTON_TOL,
        max_newton_iters: int = MAX_NEWTON_ITERS,
    ):
        if dim < 1:
            raise DimensionMismatch(f"dim must be positive, got {dim}")
        ls = np.broadcast_to(np.asarray(lengthscale, dtype=float), (dim,)).copy()
        if np.any(ls <= 0):
            raise ValueError("lengthscales must be positive")
        self.dim = int(dim)
        self.lengthscale = ls
        self.signal_variance = float(signal_variance)
        self.noise = float(noise)
        self.newton_tol = float(newton_tol)
        self.max_newton_iters = int(max_newton_iters)

        self.points = np.empty((0, dim))
        self.comparisons: list[tuple[int, int]] = []

        self._fitted = True  # empty model is its own prior
        self.f_hat = np.zeros(0)
        self.newton_iters = 0
        self._alpha = np.zeros(0)
        self._G = np.zeros((0, 0))
        self._K_chol = None
        self._jitter = BASE_JITTER

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def n_comparisons(self) -> int:
        return len(self.comparisons)

    @property
    def is_fitted(self) -> bool:
        return self._fitted

    def _index_of(self, point: np.ndarray) -> int:
        """Index of an exactly matching stored point, appending if new."""
        if self.n_points:
            hits = np.flatnonzero((self.points == point).all(axis=1))
            if hits.size:
                return int(hits[0])
        self.points = np.vstack([self.points, point[None, :]])
        return self.n_points - 1

    def _kernel(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        sa = a / self.lengthscale
        sb = b / self.lengthscale
        sq = (
            np.sum(sa * sa, axis=1)[:, None]
            + np.sum(sb * sb, axis=1)[None, :]
            - 2.0 * sa @ sb.T
        )
        np.maximum(sq, 0.0, out=sq)
        return self.signal_variance * np.exp(-0.5 * sq)


def add_observation(
    model: PreferenceModel, winner: np.ndarray, loser: np.ndarray
) -> None:
    """Record one comparison. Points equal to a stored point are reused
    rather than duplicated, so repeated pivots do not grow the model.
    Marks the model as needing a refit."""
    winner = np.asarray(winner, dtype=float).reshape(-1)
    loser = np.asarray(loser, dtype=float).reshape(-1)
    if winner.shape != (model.dim,) or loser.shape != (model.dim,):
        raise DimensionMismatch(
            f"points must have shape ({model.dim},), got {winner.shape} and {loser.shape}"
        )
    wi = model._index_of(winner)
    li = model._index_of(loser)
    model.comparisons.append((wi, li))
    model._fitted = False


def _chol_with_jitter(K: np.ndarray) -> tuple[tuple, float]:
    jitter = BASE_JITTER
    eye = np.eye(K.shape[0])
    while jitter <= MAX_JITTER:
        try:
            return cho_factor(K + jitter * eye, lower=True), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise IllConditionedKernel(
        f"kernel matrix not positive definite up to jitter {MAX_JITTER}"
    )


def _likelihood_parts(
    model: PreferenceModel, f: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """(sum log Phi, gradient of sum log Phi, per-comparison s values)."""
    win = np.fromiter((w for w, _ in model.comparisons), dtype=int)
    lose = np.fromiter((l for _, l in model.comparisons), dtype=int)
    scale = 1.0 / (np.sqrt(2.0) * model.noise)
    z = (f[win] - f[lose]) * scale
    logcdf, r, s = _probit_terms(z)
    grad = np.zeros_like(f)
    np.add.at(grad, win, r * scale)
    np.add.at(grad, lose, -r * scale)
    return float(logcdf.sum()), grad, s * scale * scale


def _curvature(model: PreferenceModel, s_scaled: np.ndarray) -> np.ndarray:
    """W = sum_k s_k d_k d_k^T with d_k = e_winner - e_loser."""
    n = model.n_points
    D = np.zeros((len(model.comparisons), n))
    rows = np.arange(len(model.comparisons))
    win = [w for w, _ in model.comparisons]
    lose = [l for _, l in model.comparisons]
    D[rows, win] += 1.0
    D[rows, lose] -= 1.0
    return (D * s_scaled[:, None]).T @ D


def fit_laplace(model: PreferenceModel) -> PreferenceModel:
    """Find the posterior mode of the utilities by damped Newton iteration.

    Converges when the sup norm of the log-posterior gradient drops
    below newton_tol. Raises NewtonDivergence if that norm grows three
    iterations in a row or the iteration budget runs out; callers are
    expected to fall back to the prior. With zero comparisons the fit is
    the identity and the posterior equals the prior.
    """
    n = model.n_points
    if not model.comparisons:
        model.f_hat = np.zeros(n)
        model._alpha = np.zeros(n)
        model._G = np.zeros((n, n))
        model._K_chol = None
        model.newton_iters = 0
        model._fitted = True
        return model

    K_chol, jitter = _chol_with_jitter(model._kernel(model.points, model.points))
    K_inv = cho_solve(K_chol, np.eye(n))

    def objective(f: np.ndarray) -> float:
        loglik, _, _ = _likelihood_parts(model, f)
        return loglik - 0.5 * f @ K_inv @ f

    f = np.zeros(n)
    grad_norm_prev = np.inf
    growths = 0
    converged = False
    iters = 0
    for iters in range(1, model.max_newton_iters + 1):
        loglik, lik_grad, s_scaled = _likelihood_parts(model, f)
        grad = lik_grad - K_inv @ f
        grad_norm = float(np.abs(grad).max())
        if grad_norm < model.newton_tol:
            converged = True
            iters -= 1
            break
        if grad_norm > grad_norm_prev:
            growths += 1
            if growths >= 3:
                raise NewtonDivergence(
                    f"gradient grew {growths} consecutive iterations "
                    f"(now {grad_norm:.3g})"
                )
        else:
            growths = 0
        grad_norm_prev = grad_norm

        W = _curvature(model, s_scaled)
        A = K_inv + W
        try:
            step = cho_solve(cho_factor(A, lower=True), grad)
        except np.linalg.LinAlgError:
            step = np.linalg.solve(A + 1e-10 * np.eye(n), grad)
        psi0 = loglik - 0.5 * f @ K_inv @ f
        t = 1.0
        while t > 1e-10 and objective(f + t * step) < psi0:
            t *= 0.5
        f = f + t * step
    if not converged:
        # check the final iterate before declaring failure
        _, lik_grad, _ = _likelihood_parts(model, f)
        grad = lik_grad - K_inv @ f
        if float(np.abs(grad).max()) >= model.newton_tol:
            raise NewtonDivergence(
                f"no convergence in {model.max_newton_iters} iterations"
            )

    model.f_hat = f
    model.newton_iters = iters
    model._K_chol = K_chol
    model._jitter = jitter
    model._alpha = cho_solve(K_chol, f)

    _, _, s_scaled = _likelihood_parts(model, f)
    W = _curvature(model, s_scaled)
    evals, evecs = eigh(W)
    S = (evecs * np.sqrt(np.maximum(evals, 0.0))) @ evecs.T
    K_jit = model._kernel(model.points, model.points) + jitter * np.eye(n)
    B = np.eye(n) + S @ K_jit @ S
    B = 0.5 * (B + B.T)
    try:
        LB = np.linalg.cholesky(B)
    except np.linalg.LinAlgError:
        LB = np.linalg.cholesky(B + 1e-12 * np.eye(n))
    # quadratic form k*^T S B^{-1} S k* == ||G k*||^2 with G = LB^{-1} S
    model._G = solve_triangular(LB, S, lower=True)
    model._fitted = True
    return model


def reset_to_prior(model: PreferenceModel) -> PreferenceModel:
    """Install the prior as the current fit, keeping observations.

    The recovery path after NewtonDivergence: the posterior answers as
    if no comparisons existed, while later add_observation + fit_laplace
    calls retry the full fit.
    """
    n = model.n_points
    model.f_hat = np.zeros(n)
    model._alpha = np.zeros(n)
    model._G = np.zeros((n, n))
    model._K_chol = None
    model.newton_iters = 0
    model._fitted = True
    return model


def _require_fitted(model: PreferenceModel) -> None:
    if not model._fitted:
        raise UnfittedModel(
            "observations were added after the last fit_laplace call"
        )


def _posterior_arrays(
    model: PreferenceModel, queries: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    _require_fitted(model)
    if model.n_points == 0 or not model.comparisons:
        m = queries.shape[0]
        return np.zeros(m), np.full(m, model.signal_variance)
    k_star = model._kernel(queries, model.points)
    mean = k_star @ model._alpha
    V = k_star @ model._G.T
    quad = np.einsum("ij,ij->i", V, V)
    var = np.maximum(model.signal_variance - quad, 0.0)
    return mean, var


def posterior(
    model: PreferenceModel, query: np.ndarray
) -> tuple[np.ndarray | float, np.ndarray | float]:
    """Posterior mean and variance of the utility at query point(s).

    query may be a single (dim,) point or an (m, dim) batch. An empty
    model returns the prior (mean 0, variance signal_variance); a model
    with unfitted observations raises UnfittedModel. Variances are
    clamped to [0, signal_variance].
    """
    q = np.asarray(query, dtype=float)
    single = q.ndim == 1
    if single:
        q = q[None, :]
    if q.ndim != 2 or q.shape[1] != model.dim:
        raise DimensionMismatch(
            f"query must have trailing dimension {model.dim}, got shape {np.shape(query)}"
        )
    mean, var = _posterior_arrays(model, q)
    if single:
        return float(mean[0]), float(var[0])
    return mean, var


def _slice_posterior(
    model: PreferenceModel, base: np.ndarray, j: int, xs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior along coordinate j for a batch of base points.

    Returns (mean, var) of shape (R, len(xs)) for base of shape (R, q).
    Exploits the product form of the squared-exponential kernel: the
    factor that varies along the grid is shared by every base point, so
    the exp cost is R*n + len(xs)*n instead of R*len(xs)*n.
    """
    _require_fitted(model)
    R = base.shape[0]
    m = xs.shape[0]
    if model.n_points == 0 or not model.comparisons:
        return np.zeros((R, m)), np.full((R, m), model.signal_variance)
    t = model.points
    inv_l2 = 1.0 / (model.lengthscale * model.lengthscale)
    diff = base[:, None, :] - t[None, :, :]
    sq_full = np.einsum("rim,m->ri", diff * diff, inv_l2)
    sq_j = (base[:, j, None] - t[None, :, j]) ** 2 * inv_l2[j]
    c = np.exp(-0.5 * (sq_full - sq_j))  # (R, n) context factors
    u = np.exp(-0.5 * (xs[:, None] - t[None, :, j]) ** 2 * inv_l2[j])  # (m, n)

    sv = model.signal_variance
    mean = sv * (c * model._alpha) @ u.T  # (R, m)
    var = np.empty((R, m))
    Gt = model._G.T
    for r in range(R):
        V = (u * c[r]) @ Gt  # (m, n)
        var[r] = sv - sv * sv * np.einsum("ij,ij->i", V, V)
    np.maximum(var, 0.0, out=var)
    return mean, var


def log_posterior(
    model: PreferenceModel, f: np.ndarray
) -> tuple[float, np.ndarray]:
    """Unnormalized log posterior over utilities and its gradient.

    The value omits additive constants that do not depend on f; the
    gradient is exact. Uses the kernel factorization from the last fit
    when available so the gradient agrees with what the Newton iteration
    saw, and a fresh factorization otherwise.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (model.n_points,):
        raise DimensionMismatch(
            f"f must have shape ({model.n_points},), got {f.shape}"
        )
    if model._K_chol is not None and model._fitted:
        K_chol = model._K_chol
    else:
        K_chol, _ = _chol_with_jitter(model._kernel(model.points, model.points))
    Kinv_f = cho_solve(K_chol, f)
    if model.comparisons:
        loglik, lik_grad, _ = _likelihood_parts(model, f)
    else:
        loglik, lik_grad = 0.0, np.zeros_like(f)
    return loglik - 0.5 * float(f @ Kinv_f), lik_grad - Kinv_f


def incumbent(
    model: PreferenceModel, box: tuple[np.ndarray, np.ndarray]
) -> tuple[np.ndarray, float]:
    """Maximizer of the posterior mean over the box, and its mean value.

    Deterministic: coordinate ascent from the box center and from every
    training point (clipped into the box); value ties resolve to the
    lexicographically smallest point. An empty model returns the box
    center with mean 0.
    """
    lows = np.asarray(box[0], dtype=float)
    highs = np.asarray(box[1], dtype=float)
    if lows.shape != (model.dim,) or highs.shape != (model.dim,):
        raise DimensionMismatch(
            f"box must be two ({model.dim},) arrays, got {lows.shape}, {highs.shape}"
        )
    center = 0.5 * (lows + highs)
    if not model.comparisons:
        return center, 0.0
    _require_fitted(model)
    starts = np.vstack([center[None, :], np.clip(model.points, lows, highs)])
    starts = np.unique(starts, axis=0)

    def slice_values(base: np.ndarray, j: int, xs: np.ndarray) -> np.ndarray:
        mean, _ = _slice_posterior(model, base, j, xs)
        return mean

    def point_values(pts: np.ndarray) -> np.ndarray:
        mean, _ = _posterior_arrays(model, pts)
        return mean

    best, value = _optim.coordinate_ascent(
        slice_values, point_values, starts, lows, highs
    )
    return best, value
