"""Gaussian-process prior over a planar field.

Mean and covariance functions, Gram-matrix assembly with a bounded jitter
ladder, and exact joint sampling of field realizations.

Locations are passed as arrays of shape ``(n, 2)``; a single point may be
given as a length-2 sequence or a :class:`Location`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg

from ._rng import stream
from .errors import DuplicateLocationWarning, FactorizationError

JITTER_START = 1e-10
JITTER_STOP = 1e-4


class Location(NamedTuple):
    x: float
    y: float


def as_locations(locs) -> np.ndarray:
    """Coerce ``locs`` to a float array of shape ``(n, 2)``."""
    arr = np.asarray(locs, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"locations must have shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("locations must be finite")
    return arr


@dataclass(frozen=True)
class MeanSpec:
    """Mean function: ``kind="zero"`` or ``kind="constant"`` with value ``c``."""

    kind: str = "zero"
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "constant"):
            raise ValueError(f"unknown mean kind {self.kind!r}")
        if not np.isfinite(self.c):
            raise ValueError("mean constant must be finite")
        if self.kind == "zero" and self.c != 0.0:
            raise ValueError("zero mean cannot carry a nonzero constant")


@dataclass(frozen=True)
class KernelSpec:
    """Stationary covariance function.

    Only the squared-exponential family is implemented:
    ``k(a, b) = signal_variance * exp(-|a - b|**2 / (2 * lengthscale**2))``.
    """

    signal_variance: float = 1.0
    lengthscale: float = 1.0
    family: str = "squared-exponential"

    def __post_init__(self):
        if self.family != "squared-exponential":
            raise ValueError(f"unsupported kernel family {self.family!r}")
        if not self.signal_variance > 0:
            raise ValueError("signal_variance must be > 0")
        if not self.lengthscale > 0:
            raise ValueError("lengthscale must be > 0")


@dataclass(frozen=True)
class Prior:
    mean: MeanSpec
    kernel: KernelSpec


@dataclass(frozen=True)
class CovMatrix:
    """A covariance matrix with its lower Cholesky factor.

    ``jitter`` is the absolute amount added to the diagonal before
    factorization succeeded (0.0 when none was needed).
    """

    matrix: np.ndarray
    chol: np.ndarray
    jitter: float

    def solve(self, b: np.ndarray) -> np.ndarray:
        return linalg.cho_solve((self.chol, True), b, check_finite=False)

    def whiten(self, b: np.ndarray) -> np.ndarray:
        """Return ``L^{-1} b``; ``|L^{-1} c|^2 = c^T K^{-1} c``."""
        return linalg.solve_triangular(self.chol, b, lower=True, check_finite=False)


def eval_mean(spec: MeanSpec, loc) -> float | np.ndarray:
    """Mean function at one location (float) or many (array)."""
    arr = np.asarray(loc, dtype=float)
    if arr.ndim <= 1:
        return float(spec.c)
    return np.full(arr.shape[0], float(spec.c))


def _sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # direct differences keep k(a, a) exact and k(a, b) == k(b, a) bitwise
    d = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


def cross_cov(spec: KernelSpec, a, b) -> np.ndarray:
    """Kernel matrix between location sets ``a`` (n) and ``b`` (m)."""
    a = as_locations(a)
    b = as_locations(b)
    r2 = _sqdist(a, b)
    return spec.signal_variance * np.exp(-0.5 * r2 / spec.lengthscale**2)


def eval_kernel(spec: KernelSpec, a, b) -> float:
    return float(cross_cov(spec, a, b)[0, 0])


def chol_jitter(matrix: np.ndarray) -> CovMatrix:
    """Cholesky-factorize ``matrix``, escalating diagonal jitter if needed.

    Tries no jitter, then ``1e-10 * max(diag)``, growing tenfold up to
    ``1e-4 * max(diag)``. Raises :class:`FactorizationError` past that.
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if n == 0:
        return CovMatrix(matrix, np.zeros((0, 0)), 0.0)
    scale = float(np.max(np.diag(matrix)))
    if not scale > 0:
        scale = 1.0
    eye = np.eye(n)
    rel = 0.0
    while True:
        jitter = rel * scale
        try:
            chol = linalg.cholesky(matrix + jitter * eye, lower=True, check_finite=False)
            if np.all(np.isfinite(chol)):
                return CovMatrix(matrix, chol, jitter)
        except linalg.LinAlgError:
            pass
        rel = JITTER_START if rel == 0.0 else rel * 10.0
        if rel > JITTER_STOP * (1 + 1e-9):
            raise FactorizationError(
                f"matrix of size {n} not positive definite with jitter up to "
                f"{JITTER_STOP:g} x max diagonal"
            )


def gram(spec: KernelSpec, locs) -> CovMatrix:
    """Kernel Gram matrix over ``locs``, factorized under the jitter ladder."""
    locs = as_locations(locs)
    if locs.shape[0] == 0:
        raise ValueError("gram needs at least one location")
    _, counts = np.unique(locs, axis=0, return_counts=True)
    if np.any(counts > 1):
        warnings.warn(
            f"{int(np.sum(counts[counts > 1]))} locations coincide; Gram matrix is rank deficient",
            DuplicateLocationWarning,
            stacklevel=2,
        )
    return chol_jitter(cross_cov(spec, locs, locs))


def sample_field(
    prior: Prior, locs, seed: int, size: int | None = None, purpose: str = "sample_field"
) -> np.ndarray:
    """Draw the field jointly at ``locs``.

    Returns shape ``(n,)`` for ``size=None`` and ``(size, n)`` otherwise.
    Identical ``(seed, purpose)`` gives identical draws.
    """
    locs = as_locations(locs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DuplicateLocationWarning)
        cov = gram(prior.kernel, locs)
    mu = eval_mean(prior.mean, locs)
    rng = stream(seed, "gp", purpose)
    n = locs.shape[0]
    z = rng.standard_normal((1 if size is None else size, n))
    draws = mu + z @ cov.chol.T
    return draws[0] if size is None else draws
