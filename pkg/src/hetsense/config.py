"""Run configuration: a single YAML file, validated into dataclasses.

Example::

    seed: 2015
    prior:
      mean: {kind: zero}
      kernel: {family: squared-exponential, signal_variance: 5.8, lengthscale: 10.0}
    network: {noise_high: 0.001, noise_low: 0.003, threshold: 0.0, cost_high: 150, cost_low: 30}
    sensors:
      synthetic: {n_high: 50, n_low: 50, x_range: [0, 60], y_range: [20, 80]}
    task:
      reconstruct:
        grid: {x_range: [0, 60], y_range: [20, 80], nx: 40, ny: 40}

``sensors`` takes either ``synthetic`` or ``csv: <path>`` (relative to the
config file). ``task`` takes exactly one of ``reconstruct``, ``select``,
``experiment`` or ``oracle``. Validation errors name the offending key path.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ParseError, ValidationError
from .gp import KernelSpec, MeanSpec, Prior
from .moments import Quadrature
from .sblue import GridSpec
from .selection import CemConfig

QOS_SWEEP = (3.4, 3.6, 3.8, 4.0, 4.2, 4.4)
EXPERIMENTS = ("mse-vs-counts", "cem-vs-optimal")
TASKS = ("reconstruct", "select", "experiment", "oracle")

DEFAULT_REGION = ((0.0, 60.0), (20.0, 80.0))
DEFAULT_QUERY = (10.0, 50.0)


@dataclass(frozen=True)
class NetworkParams:
    noise_high: float = 0.001
    noise_low: float = 0.003
    threshold: float = 0.0
    cost_high: float = 150.0
    cost_low: float = 30.0


@dataclass(frozen=True)
class SyntheticSource:
    n_high: int
    n_low: int
    x_range: tuple[float, float] = DEFAULT_REGION[0]
    y_range: tuple[float, float] = DEFAULT_REGION[1]


@dataclass(frozen=True)
class CsvSource:
    path: Path


@dataclass(frozen=True)
class ReconstructTask:
    grid: GridSpec


@dataclass(frozen=True)
class SelectTask:
    query: tuple[float, float]
    qos_var: float
    cem: CemConfig


@dataclass(frozen=True)
class ExperimentTask:
    name: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class OracleTask:
    n_moment_cases: int = 20
    n_samples: int = 1_000_000
    n_selection_cases: int = 5


@dataclass(frozen=True)
class RunConfig:
    prior: Prior
    network: NetworkParams
    source: SyntheticSource | CsvSource
    task: ReconstructTask | SelectTask | ExperimentTask | OracleTask
    quad: Quadrature
    seed: int
    output_dir: Path
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def task_name(self) -> str:
        return {
            ReconstructTask: "reconstruct",
            SelectTask: "select",
            ExperimentTask: "experiment",
            OracleTask: "oracle",
        }[type(self.task)]

    def config_hash(self) -> str:
        """Hash of the validated content, independent of ``output_dir``."""
        payload = {k: v for k, v in self.raw.items() if k != "output_dir"}
        payload["seed"] = self.seed
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def header(self) -> str:
        return f"hetsense task={self.task_name} config_hash={self.config_hash()} seed={self.seed}"


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------


def _mapping(d, path: str, allowed: tuple[str, ...]) -> dict:
    if d is None:
        d = {}
    if not isinstance(d, dict):
        raise ValidationError(path, "expected a mapping")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ValidationError(f"{path}.{extra[0]}" if path else extra[0], "unknown key")
    return d


def _num(d: dict, key: str, path: str, default=None, *, positive=False, nonneg=False, allow_inf=False) -> float:
    v = d.get(key, default)
    p = f"{path}.{key}" if path else key
    if v is None:
        raise ValidationError(p, "required")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "-inf") and allow_inf:
            v = float(v)
        else:
            raise ValidationError(p, f"expected a number, got {v!r}")
    v = float(v)
    if math.isnan(v) or (math.isinf(v) and not allow_inf):
        raise ValidationError(p, "must be finite")
    if positive and not v > 0:
        raise ValidationError(p, "must be > 0")
    if nonneg and not v >= 0:
        raise ValidationError(p, "must be >= 0")
    return v


def _int(d: dict, key: str, path: str, default=None, minimum: int = 0) -> int:
    v = d.get(key, default)
    p = f"{path}.{key}" if path else key
    if v is None:
        raise ValidationError(p, "required")
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(p, f"expected an integer, got {v!r}")
    if v < minimum:
        raise ValidationError(p, f"must be >= {minimum}")
    return v


def _pair(d: dict, key: str, path: str, default=None) -> tuple[float, float]:
    v = d.get(key, default)
    p = f"{path}.{key}"
    if v is None:
        raise ValidationError(p, "required")
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ValidationError(p, "expected a pair [a, b]")
    tmp = {"a": v[0], "b": v[1]}
    return (_num(tmp, "a", p), _num(tmp, "b", p))


def _range(d: dict, key: str, path: str, default=None) -> tuple[float, float]:
    lo, hi = _pair(d, key, path, default)
    if hi < lo:
        raise ValidationError(f"{path}.{key}", "upper bound below lower bound")
    return lo, hi


def _prior(d, path="prior") -> Prior:
    d = _mapping(d, path, ("mean", "kernel"))
    m = _mapping(d.get("mean"), f"{path}.mean", ("kind", "c"))
    kind = m.get("kind", "zero")
    if kind not in ("zero", "constant"):
        raise ValidationError(f"{path}.mean.kind", "must be 'zero' or 'constant'")
    c = _num(m, "c", f"{path}.mean", 0.0) if kind == "constant" else 0.0
    k = _mapping(d.get("kernel"), f"{path}.kernel", ("family", "signal_variance", "lengthscale"))
    family = k.get("family", "squared-exponential")
    if family != "squared-exponential":
        raise ValidationError(f"{path}.kernel.family", "only 'squared-exponential' is supported")
    var = _num(k, "signal_variance", f"{path}.kernel", 5.8, positive=True)
    ell = _num(k, "lengthscale", f"{path}.kernel", 10.0, positive=True)
    return Prior(MeanSpec(kind, c), KernelSpec(var, ell, family))


def _network(d, path="network") -> NetworkParams:
    d = _mapping(d, path, ("noise_high", "noise_low", "threshold", "cost_high", "cost_low"))
    base = NetworkParams()
    return NetworkParams(
        _num(d, "noise_high", path, base.noise_high, nonneg=True),
        _num(d, "noise_low", path, base.noise_low, nonneg=True),
        _num(d, "threshold", path, base.threshold, allow_inf=True),
        _num(d, "cost_high", path, base.cost_high, nonneg=True),
        _num(d, "cost_low", path, base.cost_low, nonneg=True),
    )


def _grid(d, path) -> GridSpec:
    d = _mapping(d, path, ("x_range", "y_range", "nx", "ny"))
    return GridSpec(
        _range(d, "x_range", path, DEFAULT_REGION[0]),
        _range(d, "y_range", path, DEFAULT_REGION[1]),
        _int(d, "nx", path, 40, 1),
        _int(d, "ny", path, 40, 1),
    )


def _cem(d, path, seed: int) -> CemConfig:
    d = _mapping(d, path, ("n_samples", "elite_fraction", "smoothing", "max_iters", "p_init"))
    base = CemConfig()
    kw = dict(
        n_samples=_int(d, "n_samples", path, base.n_samples, 10),
        elite_fraction=_num(d, "elite_fraction", path, base.elite_fraction),
        smoothing=_num(d, "smoothing", path, base.smoothing),
        max_iters=_int(d, "max_iters", path, base.max_iters, 1),
        p_init=_num(d, "p_init", path, base.p_init),
        seed=seed,
    )
    try:
        return CemConfig(**kw)
    except ValueError as exc:
        raise ValidationError(path, str(exc)) from None


def _source(d, path, base_dir: Path):
    d = _mapping(d, path, ("synthetic", "csv"))
    if ("synthetic" in d) == ("csv" in d):
        raise ValidationError(path, "give exactly one of 'synthetic' or 'csv'")
    if "csv" in d:
        p = d["csv"]
        if not isinstance(p, str):
            raise ValidationError(f"{path}.csv", "expected a path string")
        full = (base_dir / p).resolve()
        if not full.is_file():
            raise ValidationError(f"{path}.csv", f"file not found: {full}")
        return CsvSource(full)
    s = _mapping(d["synthetic"], f"{path}.synthetic", ("n_high", "n_low", "x_range", "y_range"))
    sp = f"{path}.synthetic"
    return SyntheticSource(
        _int(s, "n_high", sp, 0),
        _int(s, "n_low", sp, 0),
        _range(s, "x_range", sp, DEFAULT_REGION[0]),
        _range(s, "y_range", sp, DEFAULT_REGION[1]),
    )


def _experiment(d, path, seed: int) -> ExperimentTask:
    d = _mapping(
        d,
        path,
        (
            "name", "counts", "fixed", "seeds", "grid",
            "instances", "qos_values", "query", "n_high", "n_low", "cem",
        ),
    )
    name = d.get("name")
    if name not in EXPERIMENTS:
        raise ValidationError(f"{path}.name", f"must be one of {list(EXPERIMENTS)}")
    if name == "mse-vs-counts":
        counts = d.get("counts", [5, 10, 20, 40])
        if not isinstance(counts, list) or not counts or not all(isinstance(c, int) and c >= 0 for c in counts):
            raise ValidationError(f"{path}.counts", "expected a nonempty list of nonnegative integers")
        params = dict(
            counts=[int(c) for c in counts],
            fixed=_int(d, "fixed", path, 10),
            seeds=_int(d, "seeds", path, 20, 1),
            grid=_grid(d.get("grid"), f"{path}.grid"),
        )
    else:
        qos = d.get("qos_values", list(QOS_SWEEP))
        if not isinstance(qos, list) or not qos:
            raise ValidationError(f"{path}.qos_values", "expected a nonempty list")
        qv = [_num({"q": q}, "q", f"{path}.qos_values", positive=True) for q in qos]
        params = dict(
            instances=_int(d, "instances", path, 100, 1),
            qos_values=qv,
            query=_pair(d, "query", path, DEFAULT_QUERY),
            n_high=_int(d, "n_high", path, 5),
            n_low=_int(d, "n_low", path, 10),
            cem=_cem(d.get("cem"), f"{path}.cem", seed),
        )
        if params["n_high"] + params["n_low"] > 22:
            raise ValidationError(f"{path}.n_high", "n_high + n_low must be <= 22 for brute force")
    return ExperimentTask(name, params)


def _task(d, seed: int):
    d = _mapping(d, "task", TASKS)
    if len(d) != 1:
        raise ValidationError("task", f"give exactly one of {list(TASKS)}")
    (name, body), = d.items()
    path = f"task.{name}"
    if name == "reconstruct":
        b = _mapping(body, path, ("grid",))
        return ReconstructTask(_grid(b.get("grid"), f"{path}.grid"))
    if name == "select":
        b = _mapping(body, path, ("query", "qos_var", "cem"))
        return SelectTask(
            _pair(b, "query", path, DEFAULT_QUERY),
            _num(b, "qos_var", path, positive=True),
            _cem(b.get("cem"), f"{path}.cem", seed),
        )
    if name == "experiment":
        return _experiment(body, path, seed)
    b = _mapping(body, path, ("n_moment_cases", "n_samples", "n_selection_cases"))
    return OracleTask(
        _int(b, "n_moment_cases", path, 20, 1),
        _int(b, "n_samples", path, 1_000_000, 10_000),
        _int(b, "n_selection_cases", path, 5, 0),
    )


def parse_config(raw: dict, base_dir: Path = Path("."), seed: int | None = None) -> RunConfig:
    """Validate a parsed config mapping. ``seed`` overrides ``raw['seed']``."""
    raw = _mapping(raw, "", ("seed", "output_dir", "prior", "network", "sensors", "quadrature", "task"))
    eff_seed = _int(raw, "seed", "", 0) if seed is None else int(seed)
    if not 0 <= eff_seed < 2**64:
        raise ValidationError("seed", "must be an unsigned 64-bit integer")
    q = _mapping(raw.get("quadrature"), "quadrature", ("nodes_per_axis", "abs_tol", "panels"))
    try:
        quad = Quadrature(
            _int(q, "nodes_per_axis", "quadrature", 40, 8),
            _num(q, "abs_tol", "quadrature", 1e-8, positive=True),
            _int(q, "panels", "quadrature", 6, 1),
        )
    except ValueError as exc:
        raise ValidationError("quadrature", str(exc)) from None
    if "task" not in raw:
        raise ValidationError("task", "required")
    task = _task(raw["task"], eff_seed)
    needs_sensors = isinstance(task, (ReconstructTask, SelectTask))
    if needs_sensors and "sensors" not in raw:
        raise ValidationError("sensors", "required for this task")
    source = _source(raw["sensors"], "sensors", base_dir) if "sensors" in raw else SyntheticSource(0, 0)
    out = raw.get("output_dir", "out")
    if not isinstance(out, str):
        raise ValidationError("output_dir", "expected a path string")
    return RunConfig(
        prior=_prior(raw.get("prior")),
        network=_network(raw.get("network")),
        source=source,
        task=task,
        quad=quad,
        seed=eff_seed,
        output_dir=(base_dir / out),
        raw=raw,
    )


def load_config(path, seed: int | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be a mapping")
    return parse_config(raw, path.parent, seed)
