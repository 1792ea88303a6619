"""Best linear unbiased field reconstruction.

Among all affine estimators ``a + B y`` of the field at a query point, the
one minimizing the mean squared error is

    f_hat = mu(x*) + c^T C^{-1} (y - E[Y])
    mse   = k(x*, x*) - c^T C^{-1} c

where ``C = Cov(Y, Y)`` and ``c = Cov(f(x*), Y)``. The intercept is the prior
mean at the query minus ``B E[Y]``, which is why the centered covariances,
not raw second moments, enter both expressions. ``C`` is only ever used
through its Cholesky factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWeights, DimensionMismatch
from .gp import Prior, as_locations, chol_jitter, cross_cov, eval_mean, sample_field
from .moments import DEFAULT_QUADRATURE, Quadrature
from .network import MomentBundle, SensorArray, cross_moments, observation_moments


@dataclass(frozen=True)
class Prediction:
    estimate: float
    mse: float
    query: tuple[float, float] | None = None


@dataclass(frozen=True)
class GridSpec:
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("nx and ny must be >= 1")
        for name, (lo, hi) in (("x_range", self.x_range), ("y_range", self.y_range)):
            if not (np.isfinite(lo) and np.isfinite(hi) and hi >= lo):
                raise ValueError(f"{name} must be a finite interval with hi >= lo")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_range[0], self.x_range[1], self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_range[0], self.y_range[1], self.ny)

    def points(self) -> np.ndarray:
        """Cell centres in row-major order (y outer, x inner), shape ``(ny*nx, 2)``."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.column_stack([X.ravel(), Y.ravel()])


@dataclass(frozen=True)
class GridPrediction:
    grid: GridSpec
    estimate: np.ndarray  # (ny, nx)
    mse: np.ndarray  # (ny, nx)


def sblue_predict(bundle: MomentBundle, obs, prior_mean_at_query: float | None = None, query=None) -> Prediction:
    """Linear MMSE estimate and its MSE at one query point."""
    obs = np.asarray(obs, dtype=float)
    n = bundle.mean.shape[0]
    if obs.shape != (n,):
        raise DimensionMismatch(f"expected {n} readings, got shape {obs.shape}")
    mu = bundle.prior_mean if prior_mean_at_query is None else float(prior_mean_at_query)
    q = None if query is None else tuple(float(v) for v in np.ravel(query))
    if n == 0:
        return Prediction(mu, bundle.prior_var, q)
    cov = chol_jitter(bundle.cov)
    v = cov.whiten(bundle.cross)
    r = cov.whiten(obs - bundle.mean)
    estimate = mu + float(v @ r)
    mse = max(bundle.prior_var - float(v @ v), 0.0)
    return Prediction(estimate, mse, q)


def sblue_grid(
    prior: Prior, arr: SensorArray, obs, grid: GridSpec, quad: Quadrature = DEFAULT_QUADRATURE
) -> GridPrediction:
    """Evaluate :func:`sblue_predict` over every grid cell with one factorization."""
    obs = np.asarray(obs, dtype=float)
    if obs.shape != (len(arr),):
        raise DimensionMismatch(f"expected {len(arr)} readings, got shape {obs.shape}")
    pts = grid.points()
    est, mse = predict_many(prior, arr, obs, pts, quad)
    return GridPrediction(grid, est.reshape(grid.ny, grid.nx), mse.reshape(grid.ny, grid.nx))


def predict_many(prior: Prior, arr: SensorArray, obs, queries, quad: Quadrature = DEFAULT_QUADRATURE):
    """Estimates and MSEs at many query points; returns two flat arrays."""
    obs = np.asarray(obs, dtype=float)
    mean, cov_mat = observation_moments(prior, arr, quad)
    cross, prior_var, prior_mean = cross_moments(prior, arr, queries)
    if len(arr) == 0:
        return prior_mean.copy(), prior_var.copy()
    cov = chol_jitter(cov_mat)
    V = cov.whiten(cross.T)  # (n, q)
    r = cov.whiten(obs - mean)
    est = prior_mean + r @ V
    mse = np.maximum(prior_var - np.einsum("ij,ij->j", V, V), 0.0)
    return est, mse


def gp_posterior(prior: Prior, locs, noise_std, obs, query) -> tuple[float, float]:
    """Textbook GP-regression posterior mean and variance at one point.

    Independent of the moment machinery; used as a reference for uncensored
    networks.
    """
    X = as_locations(locs)
    xq = as_locations(query)
    y = np.asarray(obs, float)
    mu_q = float(eval_mean(prior.mean, xq)[0])
    kqq = prior.kernel.signal_variance
    if X.shape[0] == 0:
        return mu_q, kqq
    K = cross_cov(prior.kernel, X, X) + np.diag(np.broadcast_to(np.square(noise_std), (X.shape[0],)))
    kq = cross_cov(prior.kernel, xq, X)[0]
    alpha = np.linalg.solve(K, y - eval_mean(prior.mean, X))
    beta = np.linalg.solve(K, kq)
    return mu_q + float(kq @ alpha), kqq - float(kq @ beta)


def mmse_oracle(
    prior: Prior, arr: SensorArray, obs, query, n_samples: int, seed: int, min_ess: float = 100.0
) -> tuple[float, float]:
    """Self-normalized importance-sampling estimate of ``E[f(x*) | Y = obs]``.

    Proposals are joint prior draws of the field at the sensors and the
    query; weights are the observation likelihoods. Returns
    ``(estimate, std_error)``. Raises :class:`DegenerateWeights` when the
    effective sample size drops below ``min_ess``; this is expected for
    near-noiseless sensors.
    """
    if n_samples < 10_000:
        raise ValueError("n_samples must be >= 1e4")
    obs = np.asarray(obs, float)
    n = len(arr)
    locs = np.vstack([arr.locs, as_locations(query)]) if n else as_locations(query)
    f = sample_field(prior, locs, seed, size=n_samples, purpose="mmse_oracle")
    fq = f[:, -1]
    if n == 0:
        return float(fq.mean()), float(fq.std(ddof=1) / math.sqrt(n_samples))
    fs = f[:, :n]
    signal = np.where(fs >= arr.thresholds, fs, 0.0)
    sd = arr.noise_std
    if np.any(sd <= 0):
        raise DegenerateWeights("importance weights need strictly positive sensor noise")
    logw = -0.5 * np.sum(np.square((obs - signal) / sd), axis=1)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    ess = 1.0 / float(np.sum(w * w))
    if ess < min_ess:
        raise DegenerateWeights(f"effective sample size {ess:.1f} < {min_ess}")
    est = float(w @ fq)
    se = math.sqrt(float(np.sum(w * w * np.square(fq - est))))
    return est, se
