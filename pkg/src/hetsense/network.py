"""Heterogeneous sensor networks.

High-quality sensors read ``f(x) + W``. Low-quality sensors read
``f(x) + V`` when ``f(x) >= T`` and ``V`` otherwise, and the fusion center
does not know which regime produced a reading. Both kinds are handled by one
moment engine: a high-quality sensor is a low-quality sensor whose threshold
is ``-inf``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._rng import stream
from .gp import Prior, as_locations, cross_cov, eval_mean, sample_field
from .moments import DEFAULT_QUADRATURE, Gauss2, Quadrature, _m1, _m2, cens_cross_m11, cond_linear_cross

HIGH = "H"
LOW = "L"


@dataclass(frozen=True)
class Sensor:
    """One deployed sensor.

    ``threshold`` is ``None`` for high-quality sensors. Low-quality sensors
    need a threshold; ``-inf`` and ``inf`` are accepted as sentinels for
    "always active" and "never active".
    """

    id: str
    x: float
    y: float
    network: str
    noise_std: float
    threshold: float | None = None
    cost: float = 0.0

    def __post_init__(self):
        if self.network not in (HIGH, LOW):
            raise ValueError(f"sensor {self.id}: network must be 'H' or 'L'")
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError(f"sensor {self.id}: location must be finite")
        if not self.noise_std >= 0:
            raise ValueError(f"sensor {self.id}: noise_std must be >= 0")
        if not self.cost >= 0:
            raise ValueError(f"sensor {self.id}: cost must be >= 0")
        if self.network == HIGH and self.threshold is not None:
            raise ValueError(f"sensor {self.id}: high-quality sensors take no threshold")
        if self.network == LOW and (self.threshold is None or np.isnan(self.threshold)):
            raise ValueError(f"sensor {self.id}: low-quality sensors need a threshold")

    @property
    def loc(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def effective_threshold(self) -> float:
        return -np.inf if self.threshold is None else float(self.threshold)


def _canonical_key(s: Sensor):
    return (0 if s.network == HIGH else 1, s.id)


@dataclass(frozen=True)
class SensorArray:
    """Sensors in canonical order: high-quality first, then low, each by id."""

    sensors: tuple[Sensor, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ordered = tuple(sorted(self.sensors, key=_canonical_key))
        ids = [s.id for s in ordered]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate sensor ids: {dupes}")
        object.__setattr__(self, "sensors", ordered)

    @classmethod
    def of(cls, sensors: Iterable[Sensor]) -> SensorArray:
        return cls(tuple(sensors))

    def __len__(self) -> int:
        return len(self.sensors)

    def __iter__(self):
        return iter(self.sensors)

    @property
    def n_high(self) -> int:
        return sum(s.network == HIGH for s in self.sensors)

    @property
    def n_low(self) -> int:
        return sum(s.network == LOW for s in self.sensors)

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.sensors]

    @property
    def locs(self) -> np.ndarray:
        return np.array([s.loc for s in self.sensors], dtype=float).reshape(-1, 2)

    @property
    def is_low(self) -> np.ndarray:
        return np.array([s.network == LOW for s in self.sensors], dtype=bool)

    @property
    def noise_std(self) -> np.ndarray:
        return np.array([s.noise_std for s in self.sensors], dtype=float)

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([s.effective_threshold for s in self.sensors], dtype=float)

    @property
    def costs(self) -> np.ndarray:
        return np.array([s.cost for s in self.sensors], dtype=float)

    def subset(self, mask: Sequence[bool] | np.ndarray) -> SensorArray:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (len(self),):
            raise ValueError(f"mask length {mask.shape} does not match {len(self)} sensors")
        return SensorArray(tuple(s for s, m in zip(self.sensors, mask) if m))


def make_sensors(
    locs,
    network: str,
    noise_std: float,
    threshold: float | None = None,
    cost: float = 0.0,
    prefix: str | None = None,
) -> list[Sensor]:
    """Build a homogeneous batch of sensors with zero-padded ids."""
    locs = as_locations(locs)
    prefix = network if prefix is None else prefix
    if network == HIGH:
        threshold = None
    return [
        Sensor(f"{prefix}{i:03d}", float(x), float(y), network, noise_std, threshold, cost)
        for i, (x, y) in enumerate(locs)
    ]


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def simulate_observations(
    prior: Prior, arr: SensorArray, seed: int, size: int | None = None, extra_locs=None
) -> tuple[np.ndarray, np.ndarray]:
    """Draw the field at the sensors (and ``extra_locs``) and the readings.

    Returns ``(field, obs)``. ``field`` holds the sensor columns followed by
    any ``extra_locs`` columns; ``obs`` holds one reading per sensor. Leading
    axis of length ``size`` when ``size`` is given.
    """
    locs = arr.locs
    if extra_locs is not None:
        locs = np.vstack([locs, as_locations(extra_locs)])
    n = len(arr)
    if locs.shape[0] == 0:
        shape = (0,) if size is None else (size, 0)
        return np.zeros(shape), np.zeros(shape)
    f = np.atleast_2d(sample_field(prior, locs, seed, size=size or 1, purpose="obs_field"))
    noise = stream(seed, "obs", "noise").standard_normal((f.shape[0], n)) * arr.noise_std
    fs = f[:, :n]
    signal = np.where(fs >= arr.thresholds, fs, 0.0)
    obs = signal + noise
    if size is None:
        return f[0], obs[0]
    return f, obs


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentBundle:
    """Everything the linear estimator needs for one query point.

    ``mean`` is ``E[Y]``, ``cov`` is ``Cov(Y, Y)``, ``cross`` is
    ``Cov(f(x*), Y)``, ``prior_var`` is ``k(x*, x*)`` and ``prior_mean`` is
    the prior mean at the query.
    """

    mean: np.ndarray
    cov: np.ndarray
    cross: np.ndarray
    prior_var: float
    prior_mean: float = 0.0

    def subset(self, mask) -> MomentBundle:
        mask = np.asarray(mask, dtype=bool)
        return MomentBundle(
            self.mean[mask], self.cov[np.ix_(mask, mask)], self.cross[mask], self.prior_var, self.prior_mean
        )


def _raw_cross(mu_a, mu_b, sd_a, sd_b, k_ab, T_a, T_b, quad):
    """``E[Y_a Y_b]`` signal parts for pairs, dispatching on censoring."""
    g = Gauss2.from_cov(mu_a, mu_b, sd_a**2, sd_b**2, k_ab)
    out = np.empty(np.shape(k_ab))
    a_open = np.isneginf(T_a)
    b_open = np.isneginf(T_b)
    both = a_open & b_open
    out[both] = (mu_a * mu_b + k_ab)[both]
    sel = a_open & ~b_open
    if np.any(sel):
        out[sel] = cond_linear_cross(_take(g, sel), T_b[sel])
    sel = ~a_open & b_open
    if np.any(sel):
        out[sel] = cond_linear_cross(_swap(_take(g, sel)), T_a[sel])
    sel = ~a_open & ~b_open
    if np.any(sel):
        out[sel] = cens_cross_m11(_take(g, sel), T_a[sel], T_b[sel], quad)
    return out


def _take(g: Gauss2, sel) -> Gauss2:
    return Gauss2(*(np.broadcast_to(v, sel.shape)[sel] for v in (g.mu1, g.mu2, g.sigma1, g.sigma2, g.rho)))


def _swap(g: Gauss2) -> Gauss2:
    return Gauss2(g.mu2, g.mu1, g.sigma2, g.sigma1, g.rho)


def signal_means(prior: Prior, arr: SensorArray) -> np.ndarray:
    """``E[Y]``: prior mean for open sensors, ``E[f 1(f >= T)]`` otherwise."""
    locs = arr.locs
    mu = eval_mean(prior.mean, locs)
    sd = np.full(len(arr), np.sqrt(prior.kernel.signal_variance))
    T = arr.thresholds
    return np.where(np.isneginf(T), mu, _m1(mu, sd, T))


def observation_moments(
    prior: Prior, arr: SensorArray, quad: Quadrature = DEFAULT_QUADRATURE
) -> tuple[np.ndarray, np.ndarray]:
    """``(E[Y], Cov(Y, Y))`` for the readings of ``arr``."""
    n = len(arr)
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    locs = arr.locs
    K = cross_cov(prior.kernel, locs, locs)
    mu = eval_mean(prior.mean, locs)
    sd = np.sqrt(np.diag(K))
    T = arr.thresholds
    mean = signal_means(prior, arr)

    open_ = np.isneginf(T)
    second = np.where(open_, np.diag(K), _m2(mu, sd, T) - mean**2)
    cov = np.zeros((n, n))
    iu, ju = np.triu_indices(n, k=1)
    if iu.size:
        raw = _raw_cross(mu[iu], mu[ju], sd[iu], sd[ju], K[iu, ju], T[iu], T[ju], quad)
        # open pairs reuse the kernel directly to avoid cancellation
        c = np.where(open_[iu] & open_[ju], K[iu, ju], raw - mean[iu] * mean[ju])
        cov[iu, ju] = c
        cov[ju, iu] = c
    cov[np.diag_indices(n)] = second + arr.noise_std**2
    return mean, cov


def cross_moments(prior: Prior, arr: SensorArray, queries) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Query-side moments for many query points at once.

    Returns ``(cross, prior_var, prior_mean)`` with ``cross`` of shape
    ``(n_queries, n_sensors)``.
    """
    q = as_locations(queries)
    n = len(arr)
    prior_var = np.full(q.shape[0], prior.kernel.signal_variance)
    prior_mean = eval_mean(prior.mean, q)
    if n == 0:
        return np.zeros((q.shape[0], 0)), prior_var, prior_mean
    locs = arr.locs
    Kq = cross_cov(prior.kernel, q, locs)
    mu = eval_mean(prior.mean, locs)
    sd = np.sqrt(prior.kernel.signal_variance)
    T = np.broadcast_to(arr.thresholds, Kq.shape)
    mean = signal_means(prior, arr)
    g = Gauss2.from_cov(prior_mean[:, None], mu[None, :], prior.kernel.signal_variance, sd**2, Kq)
    raw = cond_linear_cross(g, T)
    cross = np.where(np.isneginf(T), Kq, raw - prior_mean[:, None] * mean[None, :])
    return cross, prior_var, prior_mean


def moment_bundle(
    prior: Prior, arr: SensorArray, query, quad: Quadrature = DEFAULT_QUADRATURE
) -> MomentBundle:
    """Assemble ``E[Y]``, ``Cov(Y, Y)`` and ``Cov(f(x*), Y)`` for one query."""
    mean, cov = observation_moments(prior, arr, quad)
    cross, prior_var, prior_mean = cross_moments(prior, arr, np.asarray(query, float).reshape(1, 2))
    return MomentBundle(mean, cov, cross[0], float(prior_var[0]), float(prior_mean[0]))
