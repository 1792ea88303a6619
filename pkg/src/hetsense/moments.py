"""Moments of censored Gaussian variables.

A low-quality sensor reports ``f * 1(f >= T) + noise``. Its first two moments,
and its cross-moments with other sensors and with the field at a query point,
reduce to the quantities computed here:

=================  =========================================
``trunc_m0``       ``P(f >= T)``
``trunc_m1``       ``E[f 1(f >= T)]``
``trunc_m2``       ``E[f^2 1(f >= T)]``
``bvn_upper``      ``P(f1 >= T1, f2 >= T2)``
``cens_cross_m11`` ``E[f1 f2 1(f1 >= T1) 1(f2 >= T2)]``
``cond_linear_cross`` ``E[f1 f2 1(f2 >= T2)]``
=================  =========================================

With ``a = (T - mu) / sigma`` the univariate moments are

    m0 = Q(a)
    m1 = mu Q(a) + sigma phi(a)
    m2 = (mu^2 + sigma^2) Q(a) + sigma (mu + T) phi(a)

The bivariate moments are evaluated by whitening ``(f1, f2)`` to
``(z1, z2)``, integrating the ``z2`` direction in closed form given ``z1``
(a univariate truncated moment of the conditional law) and integrating ``z1``
over ``[a1, inf)`` with composite Gauss-Legendre panels. The panel boundary is
placed where the conditional mean of ``f2`` crosses ``T2`` so each panel sees
a smooth integrand. Near comonotonicity (``|rho| > 0.99``) the conditional law
collapses into a step and the closed-form identities built on the
Drezner-Wesolowsky/Genz bivariate normal integral are used instead.

All functions broadcast over array-valued parameters. A threshold of
``-inf`` means "always active"; ``+inf`` means "never active".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from ._rng import stream
from .errors import QuadratureNotConverged

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_ZMAX = 12.0  # phi(12) ~ 2e-32
_RHO_FALLBACK = 0.99


def std_pdf(z):
    with np.errstate(over="ignore"):
        return _INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def std_cdf(z):
    return special.ndtr(z)


def std_q(z):
    """Upper tail ``1 - Phi(z)``, accurate for large positive ``z``."""
    return special.ndtr(np.negative(z))


@dataclass(frozen=True)
class Gauss1:
    mu: float | np.ndarray
    sigma: float | np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.sigma) < 0):
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True)
class Gauss2:
    mu1: float | np.ndarray
    mu2: float | np.ndarray
    sigma1: float | np.ndarray
    sigma2: float | np.ndarray
    rho: float | np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.sigma1) < 0) or np.any(np.asarray(self.sigma2) < 0):
            raise ValueError("sigma1 and sigma2 must be >= 0")
        if np.any(np.abs(np.asarray(self.rho)) > 1):
            raise ValueError("rho must lie in [-1, 1]")

    @classmethod
    def from_cov(cls, mu1, mu2, var1, var2, cov12) -> Gauss2:
        s1 = np.sqrt(var1)
        s2 = np.sqrt(var2)
        denom = s1 * s2
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = np.where(denom > 0, cov12 / np.where(denom > 0, denom, 1.0), 0.0)
        return cls(mu1, mu2, s1, s2, np.clip(rho, -1.0, 1.0))


@dataclass(frozen=True)
class Quadrature:
    """Composite Gauss-Legendre rule along the whitened conditioning axis.

    ``nodes_per_axis`` nodes are used on each panel; the result is accepted
    when doubling it changes the value by at most ``abs_tol``.
    """

    nodes_per_axis: int = 40
    abs_tol: float = 1e-8
    panels: int = 6

    def __post_init__(self):
        if self.nodes_per_axis < 8:
            raise ValueError("nodes_per_axis must be >= 8")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be > 0")
        if self.panels < 1:
            raise ValueError("panels must be >= 1")


DEFAULT_QUADRATURE = Quadrature()


# ---------------------------------------------------------------------------
# univariate
# ---------------------------------------------------------------------------


def _standardize(mu, sigma, T):
    """``(T - mu) / sigma`` with the sigma = 0 limit mapped to -inf / +inf."""
    mu, sigma, T = np.broadcast_arrays(
        np.asarray(mu, float), np.asarray(sigma, float), np.asarray(T, float)
    )
    pos = sigma > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (T - mu) / np.where(pos, sigma, 1.0)
    return np.where(pos, a, np.where(mu >= T, -np.inf, np.inf))


def _m0(mu, sigma, T):
    return std_q(_standardize(mu, sigma, T))


def _m1(mu, sigma, T):
    a = _standardize(mu, sigma, T)
    return mu * std_q(a) + sigma * std_pdf(a)


def _m2(mu, sigma, T):
    a = _standardize(mu, sigma, T)
    fin = np.isfinite(a)
    a_safe = np.where(fin, a, 0.0)
    tail = np.where(fin, sigma * (2.0 * mu + sigma * a_safe) * std_pdf(a_safe), 0.0)
    return (np.square(mu) + np.square(sigma)) * std_q(a) + tail


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def trunc_m0(g: Gauss1, T):
    """``P(f >= T)`` for ``f ~ N(mu, sigma^2)``."""
    return _out(_m0(g.mu, g.sigma, T))


def trunc_m1(g: Gauss1, T):
    """``E[f 1(f >= T)]``."""
    return _out(_m1(np.asarray(g.mu, float), np.asarray(g.sigma, float), T))


def trunc_m2(g: Gauss1, T):
    """``E[f^2 1(f >= T)]``."""
    return _out(_m2(np.asarray(g.mu, float), np.asarray(g.sigma, float), T))


# ---------------------------------------------------------------------------
# bivariate normal upper orthant, closed form (Genz's BVNU)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _legendre01(n: int):
    """Gauss-Legendre nodes on [0, 2] and weights (sum 2)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 1.0 + x, w


def _bvnu_scalar(h: float, k: float, r: float) -> float:
    """``P(z1 > h, z2 > k)`` for standard normals with correlation ``r``.

    Drezner & Wesolowsky (1989) with Genz's double-precision treatment of
    ``|r|`` close to 1.
    """
    if h == math.inf or k == math.inf:
        return 0.0
    if h == -math.inf:
        return 1.0 if k == -math.inf else float(std_q(k))
    if k == -math.inf:
        return float(std_q(h))
    if r == 0:
        return float(std_q(h) * std_q(k))
    ar = abs(r)
    ng = 6 if ar < 0.3 else 12 if ar < 0.75 else 20
    x, w = _legendre01(ng)
    hk = h * k
    twopi = 2.0 * math.pi
    if ar < 0.925:
        hs = (h * h + k * k) / 2.0
        asr = math.asin(r) / 2.0
        sn = np.sin(asr * x)
        bvn = float(np.sum(w * np.exp((sn * hk - hs) / (1.0 - sn * sn))))
        bvn = bvn * asr / twopi + float(std_q(h) * std_q(k))
    else:
        if r < 0:
            k = -k
            hk = -hk
        bvn = 0.0
        if ar < 1:
            as_ = (1.0 - r) * (1.0 + r)
            a = math.sqrt(as_)
            bs = (h - k) ** 2
            c = (4.0 - hk) / 8.0
            d = (12.0 - hk) / 16.0
            asr = -(bs / as_ + hk) / 2.0
            if asr > -100:
                bvn = a * math.exp(asr) * (
                    1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0
                )
            if hk > -100:
                b = math.sqrt(bs)
                sp = math.sqrt(twopi) * float(std_cdf(-b / a))
                bvn -= math.exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0)
            a /= 2.0
            xs = (a * x) ** 2
            asr_v = -(bs / xs + hk) / 2.0
            keep = asr_v > -100
            xs, ww, asr_v = xs[keep], w[keep], asr_v[keep]
            sp = 1.0 + c * xs * (1.0 + d * xs)
            rs = np.sqrt(1.0 - xs)
            ep = np.exp(-(hk / 2.0) * xs / (1.0 + rs) ** 2) / rs
            bvn = (a * float(np.sum(ww * np.exp(asr_v) * (sp - ep))) - bvn) / twopi
        if r > 0:
            bvn += float(std_q(max(h, k)))
        elif h >= k:
            bvn = -bvn
        else:
            if h < 0:
                span = float(std_cdf(k) - std_cdf(h))
            else:
                span = float(std_q(h) - std_q(k))
            bvn = span - bvn
    return min(1.0, max(0.0, bvn))


_bvnu = np.vectorize(_bvnu_scalar, otypes=[float])


def _bvn_cross_closed(h, k, r):
    """Standardized orthant moments ``(L, E[z1 1], E[z2 1], E[z1 z2 1])``.

    ``1`` is the indicator ``z1 >= h, z2 >= k``.
    """
    L = _bvnu(h, k, r)
    s = np.sqrt(np.maximum(1.0 - np.square(r), 0.0))
    s_eff = np.maximum(s, 1e-300)
    fh, fk = np.isfinite(h), np.isfinite(k)
    h0 = np.where(fh, h, 0.0)
    k0 = np.where(fk, k, 0.0)
    # conditional thresholds; only used where the matching pdf factor is nonzero
    with np.errstate(over="ignore", invalid="ignore"):
        u = np.where(fk, (k0 - r * h0) / s_eff, k)
        v = np.where(fh, (h0 - r * k0) / s_eff, h)
    ph = std_pdf(h0) * fh
    pk = std_pdf(k0) * fk
    qu = std_q(u)
    qv = std_q(v)
    ez1 = ph * qu + r * pk * qv
    ez2 = pk * qv + r * ph * qu
    ez12 = r * L + r * h0 * ph * qu + r * k0 * pk * qv + s * ph * std_pdf(u)
    return L, ez1, ez2, ez12


# ---------------------------------------------------------------------------
# bivariate, quadrature path
# ---------------------------------------------------------------------------


def _panel_nodes(lo, hi, split, n: int, panels: int):
    """Composite Gauss-Legendre nodes/weights on ``[lo, split] + [split, hi]``.

    Returns arrays of shape ``(m, 2 * panels * n)``; empty intervals get zero
    weight.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    valid = hi > lo
    lo = np.where(valid, lo, 0.0)
    hi = np.where(valid, hi, 0.0)
    split = np.clip(np.where(np.isfinite(split), split, 0.5 * (lo + hi)), lo, hi)
    t = np.arange(panels + 1) / panels
    edges = np.concatenate(
        [
            lo[:, None] + (split - lo)[:, None] * t[None, :-1],
            split[:, None] + (hi - split)[:, None] * t[None, :],
        ],
        axis=1,
    )  # (m, 2*panels + 1)
    a = edges[:, :-1, None]
    b = edges[:, 1:, None]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b) + half * x).reshape(lo.shape[0], -1)
    weights = (half * w).reshape(lo.shape[0], -1) * valid[:, None]
    return nodes, weights


def _orthant_quad(h, k, r, n: int, panels: int):
    """Quadrature for the standardized ``(L, E[z1 1], E[z2 1], E[z1 z2 1])``.

    Integrates over ``z1 in [h, inf)``; given ``z1``, ``z2 ~ N(r z1, 1 - r^2)``
    truncated at ``k`` is handled in closed form.
    """
    h, k, r = (np.atleast_1d(np.asarray(v, float)) for v in np.broadcast_arrays(h, k, r))
    s = np.sqrt(np.maximum(1.0 - r * r, 0.0))
    lo = np.maximum(h, -_ZMAX)
    hi = np.full_like(lo, _ZMAX)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        split = np.where((r != 0) & np.isfinite(k), k / np.where(r != 0, r, 1.0), np.nan)
    z, wz = _panel_nodes(lo, hi, split, n, panels)
    wz = wz * std_pdf(z)
    cm = r[:, None] * z
    cs = np.broadcast_to(s[:, None], z.shape)
    kk = np.broadcast_to(k[:, None], z.shape)
    i0 = _m0(cm, cs, kk)
    i1 = _m1(cm, cs, kk)
    L = np.sum(wz * i0, axis=1)
    ez1 = np.sum(wz * z * i0, axis=1)
    ez2 = np.sum(wz * i1, axis=1)
    ez12 = np.sum(wz * z * i1, axis=1)
    return L, ez1, ez2, ez12


def _standard_pair(g: Gauss2, T1, T2):
    mu1, mu2, s1, s2, rho, T1, T2 = np.broadcast_arrays(
        *(np.asarray(v, float) for v in (g.mu1, g.mu2, g.sigma1, g.sigma2, g.rho, T1, T2))
    )
    h = _standardize(mu1, s1, T1)
    k = _standardize(mu2, s2, T2)
    # a degenerate marginal is independent of everything
    rho = np.where((s1 > 0) & (s2 > 0), rho, 0.0)
    return mu1, mu2, s1, s2, rho, h, k


def _orthant_moments(h, k, rho, quad: Quadrature):
    shape = np.shape(h)
    h, k, rho = (np.atleast_1d(v).ravel() for v in (h, k, rho))
    out = [np.empty_like(h) for _ in range(4)]
    near = np.abs(rho) > _RHO_FALLBACK
    if np.any(near):
        for o, v in zip(out, _bvn_cross_closed(h[near], k[near], rho[near])):
            o[near] = v
    far = ~near
    if np.any(far):
        coarse = _orthant_quad(h[far], k[far], rho[far], quad.nodes_per_axis, quad.panels)
        fine = _orthant_quad(h[far], k[far], rho[far], 2 * quad.nodes_per_axis, quad.panels)
        err = max(float(np.max(np.abs(c - f))) for c, f in zip(coarse, fine))
        if not err <= quad.abs_tol:
            raise QuadratureNotConverged(
                f"doubling nodes changed result by {err:.3e} > abs_tol {quad.abs_tol:g}"
            )
        for o, v in zip(out, fine):
            o[far] = v
    return [o.reshape(shape) for o in out]


def bvn_upper(g: Gauss2, T1, T2, quad: Quadrature = DEFAULT_QUADRATURE):
    """``P(f1 >= T1, f2 >= T2)``."""
    *_, rho, h, k = _standard_pair(g, T1, T2)
    L, *_ = _orthant_moments(h, k, rho, quad)
    return _out(np.clip(L, 0.0, 1.0))


def cens_cross_m11(g: Gauss2, T1, T2, quad: Quadrature = DEFAULT_QUADRATURE):
    """``E[f1 f2 1(f1 >= T1) 1(f2 >= T2)]``."""
    mu1, mu2, s1, s2, rho, h, k = _standard_pair(g, T1, T2)
    L, ez1, ez2, ez12 = _orthant_moments(h, k, rho, quad)
    return _out(mu1 * mu2 * L + mu1 * s2 * ez2 + mu2 * s1 * ez1 + s1 * s2 * ez12)


def cond_linear_cross(g: Gauss2, T2):
    """``E[f1 f2 1(f2 >= T2)]``: ``f1`` uncensored, ``f2`` censored at ``T2``.

    Uses ``E[f1 | f2] = a + b f2`` so the result is ``a m1(f2) + b m2(f2)``.
    """
    mu1, mu2, s1, s2, rho, T2 = np.broadcast_arrays(
        *(np.asarray(v, float) for v in (g.mu1, g.mu2, g.sigma1, g.sigma2, g.rho, T2))
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.where(s2 > 0, rho * s1 / np.where(s2 > 0, s2, 1.0), 0.0)
    a = mu1 - b * mu2
    return _out(a * _m1(mu2, s2, T2) + b * _m2(mu2, s2, T2))


# ---------------------------------------------------------------------------
# Monte-Carlo oracle
# ---------------------------------------------------------------------------

_MC_KINDS = ("m0", "m1", "m2", "bvn", "m11", "cross")


def mc_oracle(
    expr: str, g: Gauss1 | Gauss2, T, n_samples: int, seed: int, chunk: int = 1_000_000
) -> tuple[float, float]:
    """Monte-Carlo estimate and standard error of one moment.

    ``expr`` is one of ``m0, m1, m2`` (``g`` a :class:`Gauss1`, ``T`` a
    scalar), ``bvn, m11`` (``g`` a :class:`Gauss2`, ``T = (T1, T2)``) or
    ``cross`` (``g`` a :class:`Gauss2`, ``T`` the threshold on ``f2``).
    """
    if expr not in _MC_KINDS:
        raise ValueError(f"unknown expression {expr!r}; expected one of {_MC_KINDS}")
    if n_samples < 10_000:
        raise ValueError("n_samples must be >= 1e4")
    rng = stream(seed, "moments", "mc_oracle", expr)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        if expr in ("m0", "m1", "m2"):
            f = g.mu + g.sigma * rng.standard_normal(m)
            ind = f >= T
            vals = ind * (1.0 if expr == "m0" else f if expr == "m1" else f * f)
        else:
            z = rng.standard_normal((2, m))
            s = math.sqrt(max(1.0 - g.rho**2, 0.0))
            f1 = g.mu1 + g.sigma1 * z[0]
            f2 = g.mu2 + g.sigma2 * (g.rho * z[0] + s * z[1])
            if expr == "cross":
                vals = f1 * f2 * (f2 >= T)
            else:
                ind = (f1 >= T[0]) & (f2 >= T[1])
                vals = ind * (1.0 if expr == "bvn" else f1 * f2)
        vals = np.asarray(vals, float)
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
        done += m
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0) * n_samples / (n_samples - 1)
    return mean, math.sqrt(var / n_samples)
