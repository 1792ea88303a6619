"""Minimum-cost sensor activation under an MSE bound at a query point.

Find the activation mask ``s`` minimizing ``sum(cost[s])`` subject to
``mse(s) < qos_var``, where ``mse(s)`` is the linear-estimator MSE at the
query using only the active sensors.

Two solvers share one utility,

    U(s) = -sum(cost[s])   if mse(s) < qos_var
           -inf            otherwise

:func:`cem_select` runs the cross-entropy method over independent Bernoulli
activation probabilities; :func:`brute_force_select` enumerates all masks and
is the reference for small arrays.

Moments are pointwise, so the full-array bundle is assembled once and every
mask reads its sub-blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from ._rng import stream
from .errors import Infeasible, TooLarge
from .gp import Prior, chol_jitter
from .moments import DEFAULT_QUADRATURE, Quadrature
from .network import MomentBundle, SensorArray, moment_bundle

BRUTE_FORCE_MAX = 22
NEG_INF = -math.inf


@dataclass(frozen=True)
class SelectionProblem:
    query: tuple[float, float]
    qos_var: float
    arr: SensorArray
    prior: Prior
    quad: Quadrature = DEFAULT_QUADRATURE

    def __post_init__(self):
        if not self.qos_var > 0:
            raise ValueError("qos_var must be > 0")

    @cached_property
    def bundle(self) -> MomentBundle:
        return moment_bundle(self.prior, self.arr, self.query, self.quad)

    @cached_property
    def evaluator(self) -> MaskEvaluator:
        return MaskEvaluator(self.bundle)

    @property
    def n(self) -> int:
        return len(self.arr)

    def with_qos(self, qos_var: float) -> SelectionProblem:
        """Same array and query with a different bound; moments are shared."""
        new = replace(self, qos_var=qos_var)
        new.__dict__["bundle"] = self.bundle
        new.__dict__["evaluator"] = self.evaluator
        return new

    def utilities(self, masks) -> np.ndarray:
        masks = np.atleast_2d(np.asarray(masks, dtype=bool))
        mse = self.evaluator.mse(masks)
        cost = masks @ self.arr.costs
        return np.where(mse < self.qos_var, -cost, NEG_INF)


class MaskEvaluator:
    """Batched ``mse(mask)`` with a per-mask cache.

    Inactive sensors are replaced by unit-variance, zero-cross dummies so all
    masks share one matrix size and can be factorized as a stack.
    """

    def __init__(self, bundle: MomentBundle):
        self.bundle = bundle
        self.n = bundle.mean.shape[0]
        self._cache: dict[bytes, float] = {}
        self._table: np.ndarray | None = None

    def _stacked(self, masks: np.ndarray) -> np.ndarray:
        C = self.bundle.cov
        c = self.bundle.cross
        m = masks.astype(float)
        Cm = C[None, :, :] * m[:, :, None] * m[:, None, :]
        idx = np.arange(self.n)
        Cm[:, idx, idx] += 1.0 - m
        cm = c[None, :] * m
        try:
            L = np.linalg.cholesky(Cm)
            v = np.linalg.solve(L, cm[:, :, None])[:, :, 0]
            out = self.bundle.prior_var - np.einsum("ij,ij->i", v, v)
        except np.linalg.LinAlgError:
            out = np.array([self._single(row) for row in masks])
        return np.maximum(out, 0.0)

    def _single(self, mask: np.ndarray) -> float:
        if not mask.any():
            return self.bundle.prior_var
        sub = self.bundle.subset(mask)
        v = chol_jitter(sub.cov).whiten(sub.cross)
        return self.bundle.prior_var - float(v @ v)

    def mse(self, masks: np.ndarray, chunk: int = 8192) -> np.ndarray:
        masks = np.atleast_2d(np.asarray(masks, dtype=bool))
        keys = [row.tobytes() for row in masks]
        out = np.empty(masks.shape[0])
        todo = []
        for i, k in enumerate(keys):
            hit = self._cache.get(k)
            if hit is None:
                todo.append(i)
            else:
                out[i] = hit
        if todo:
            uniq: dict[bytes, int] = {}
            for i in todo:
                uniq.setdefault(keys[i], i)
            rows = np.array([masks[i] for i in uniq.values()])
            vals = np.concatenate(
                [self._stacked(rows[s : s + chunk]) for s in range(0, rows.shape[0], chunk)]
            )
            for k, v in zip(uniq, vals):
                self._cache[k] = float(v)
            for i in todo:
                out[i] = self._cache[keys[i]]
        return out

    def table(self, chunk: int = 8192) -> np.ndarray:
        """``mse`` of every mask, indexed by its code (sensor 0 = most significant bit)."""
        if self._table is None:
            n = self.n
            shifts = _shifts(n)
            parts = []
            for start in range(0, 1 << n, chunk):
                codes = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
                parts.append(self._stacked(_decode(codes, shifts)))
            self._table = np.concatenate(parts)
        return self._table


def _shifts(n: int) -> np.ndarray:
    return np.arange(n - 1, -1, -1, dtype=np.int64)


def _decode(codes: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    return ((codes[:, None] >> shifts[None, :]) & 1).astype(bool)


def utility(problem: SelectionProblem, mask) -> float:
    """``-cost(mask)`` if the mask meets the MSE bound, else ``-inf``."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (problem.n,):
        raise ValueError(f"mask must have length {problem.n}")
    return float(problem.utilities(mask[None, :])[0])


def achieved_mse(problem: SelectionProblem, mask) -> float:
    return float(problem.evaluator.mse(np.asarray(mask, dtype=bool)[None, :])[0])


def feasibility_check(problem: SelectionProblem) -> bool:
    """True when activating every sensor meets the bound."""
    return utility(problem, np.ones(problem.n, dtype=bool)) > NEG_INF


def brute_force_select(problem: SelectionProblem) -> tuple[np.ndarray, float]:
    """Exact optimum by enumerating all ``2**n`` masks.

    Ties go to the lexicographically smallest mask. Returns
    ``(all-ones mask, -inf)`` when nothing is feasible. The table of
    per-mask MSEs is kept on the problem's evaluator, so re-solving with a
    different bound via :meth:`SelectionProblem.with_qos` is cheap.
    """
    n = problem.n
    if n > BRUTE_FORCE_MAX:
        raise TooLarge(f"{n} sensors exceeds the enumeration bound of {BRUTE_FORCE_MAX}")
    mse = problem.evaluator.table()
    shifts = _shifts(n)
    costs = problem.arr.costs
    # cost of every code, built bit by bit to avoid a (2**n, n) matrix
    total = np.zeros(1 << n)
    codes = np.arange(1 << n, dtype=np.int64)
    for j, sh in enumerate(shifts):
        total += ((codes >> sh) & 1) * costs[j]
    u = np.where(mse < problem.qos_var, -total, NEG_INF)
    # ascending codes are ascending lexicographic masks; argmax takes the first
    i = int(np.argmax(u))
    if not np.isfinite(u[i]):
        return np.ones(n, dtype=bool), NEG_INF
    return _decode(np.array([i], dtype=np.int64), shifts)[0], float(u[i])


# ---------------------------------------------------------------------------
# cross-entropy method
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CemConfig:
    n_samples: int = 50
    elite_fraction: float = 0.1
    smoothing: float = 0.7
    max_iters: int = 10
    p_init: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 10:
            raise ValueError("n_samples must be >= 10")
        if not 0 < self.elite_fraction < 1:
            raise ValueError("elite_fraction must lie in (0, 1)")
        if self.elite_fraction * self.n_samples < 1:
            raise ValueError("elite_fraction * n_samples must be >= 1")
        if not 0 < self.smoothing <= 1:
            raise ValueError("smoothing must lie in (0, 1]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.p_init < 1:
            raise ValueError("p_init must lie in (0, 1)")

    @property
    def n_elite(self) -> int:
        return math.ceil(self.elite_fraction * self.n_samples)


@dataclass
class CemState:
    p: np.ndarray
    beta: float
    best_mask: np.ndarray
    best_utility: float
    iter: int


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    beta: float
    best_utility: float
    n_feasible: int
    p_mean: float
    p_min: float
    p_max: float


@dataclass
class CemResult:
    state: CemState
    trace: list[TraceRecord] = field(default_factory=list)

    def __iter__(self):
        return iter((self.state, self.trace))


def _converged(p: np.ndarray) -> bool:
    return bool(np.all(np.minimum(p, 1.0 - p) < 1e-3))


def cem_select(problem: SelectionProblem, cfg: CemConfig = CemConfig()) -> CemResult:
    """Cross-entropy search for the cheapest mask meeting the MSE bound.

    Each iteration samples ``n_samples`` masks bitwise from Bernoulli(p),
    takes ``beta`` as the ``ceil(elite_fraction * n_samples)``-th largest
    finite utility, and moves ``p`` toward the activation frequency of the
    masks with utility ``>= beta``. An iteration without any feasible sample
    leaves ``p`` unchanged. The best mask ever seen is returned.

    The empty mask is checked first: if it is feasible it costs nothing and
    is optimal, and the search stops after one iteration.
    """
    n = problem.n
    rng = stream(cfg.seed, "selection", "cem")
    p = np.full(n, cfg.p_init)
    empty = np.zeros(n, dtype=bool)
    trace: list[TraceRecord] = []

    if utility(problem, empty) > NEG_INF:
        pm = float(p.mean()) if n else 0.0
        trace.append(TraceRecord(1, 0.0, 0.0, 1, pm, pm, pm))
        return CemResult(CemState(p, 0.0, empty, 0.0, 1), trace)

    best_mask = empty
    best_u = NEG_INF
    beta = NEG_INF
    it = 0
    for it in range(1, cfg.max_iters + 1):
        masks = rng.random((cfg.n_samples, n)) < p
        u = problem.utilities(masks)
        finite = np.isfinite(u)
        n_feas = int(finite.sum())
        if n_feas:
            order = np.argsort(-u, kind="stable")
            i = int(order[0])
            if u[i] > best_u:
                best_u = float(u[i])
                best_mask = masks[i].copy()
            fu = np.sort(u[finite])[::-1]
            beta = float(fu[min(cfg.n_elite, n_feas) - 1])
            elite = finite & (u >= beta)
            freq = masks[elite].mean(axis=0)
            p = cfg.smoothing * freq + (1.0 - cfg.smoothing) * p
            p = np.clip(p, 0.0, 1.0)
        trace.append(
            TraceRecord(
                it,
                beta,
                best_u,
                n_feas,
                float(p.mean()) if n else 0.0,
                float(p.min(initial=1.0)) if n else 0.0,
                float(p.max(initial=0.0)),
            )
        )
        if n_feas and _converged(p):
            break

    if not math.isfinite(best_u):
        full = np.ones(n, dtype=bool)
        u_full = utility(problem, full)
        if not math.isfinite(u_full):
            raise Infeasible(
                f"no mask meets mse < {problem.qos_var:g}; full activation gives "
                f"{achieved_mse(problem, full):.6g}"
            )
        best_mask, best_u = full, u_full

    return CemResult(CemState(p, beta, best_mask, best_u, it), trace)
