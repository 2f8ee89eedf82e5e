"""Monte Carlo and quadrature experiments with scaling-law regression.

Every experiment is a pure function of its :class:`ExperimentConfig`.  Work
items (one per ``(n, replica)`` pair, or one per ``n`` for the deterministic
Ginibre quadratures) run on a thread pool and are collected in submission
order, so the record list does not depend on scheduling.  Replica seeds are
derived from ``(config.seed, replica)`` with :func:`ensembles.replica_seed`.

Numerical failures never disappear: the failing work item becomes a typed
error row, and :class:`ExperimentAborted` carries all rows produced before it
so callers can flush partial output.
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, stats

from . import equilibrium, ginibre, hermitization, linalg
from .ensembles import EnsembleSpec, Family, replica_seed, sample
from .hermitization import GRAD_NORM_SQ, TestFunction
from .records import ExperimentRecord, NonFiniteValue

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "DegenerateInput",
    "ExperimentAborted",
    "ExperimentConfig",
    "ExperimentResult",
    "PowerLawFit",
    "fit_power_law",
    "worker_count",
    "ordered_map",
    "disk_reference",
    "run_experiment",
    "run_local_law",
    "run_circular_law",
    "run_comparison",
    "run_ginibre_stats",
    "run_girko_check",
    "run_extremes",
]

EXPERIMENTS = ("local-law", "circular-law", "comparison", "ginibre-stats", "girko-check", "extremes")

# exceptions that mark a numerical (rather than a programming or config) failure
NUMERICAL_ERRORS = (ArithmeticError, NonFiniteValue)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class DegenerateInput(ValueError):
    """A power-law fit was requested on data that cannot determine it."""


class ExperimentAborted(RuntimeError):
    """A work item failed numerically; ``records`` holds everything produced so far."""

    def __init__(self, records: List[ExperimentRecord], cause: BaseException):
        super().__init__(f"{type(cause).__name__}: {cause}")
        self.records = records
        self.cause = cause


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"complex value must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        parts = v.split(",")
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
        return complex(v.replace(" ", ""))
    return complex(v)


@dataclass(frozen=True)
class ExperimentConfig:
    """Inputs of one experiment run.

    ``ensemble`` is a template: its ``n`` and ``seed`` are replaced per work
    item.  ``params`` holds experiment-specific knobs (energy, eta values,
    comparison family, grid sizes); unknown keys are rejected by each runner.
    """

    experiment: str
    ensemble: EnsembleSpec
    n_values: Tuple[int, ...]
    a: float = 0.25
    z0: complex = 1.0
    epsilon: float = 0.05
    replicas: int = 100
    seed: int = 0
    out_path: str = ""
    format: str = "csv"
    params: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        ns = tuple(int(n) for n in self.n_values)
        if not ns or any(n < 1 for n in ns):
            raise ConfigError("n_values must be a non-empty list of positive integers")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("n_values must be strictly ascending")
        object.__setattr__(self, "n_values", ns)
        if int(self.replicas) < 1:
            raise ConfigError("replicas must be >= 1")
        object.__setattr__(self, "replicas", int(self.replicas))
        if not 0.0 <= float(self.a) <= 0.5:
            raise ConfigError("a must lie in [0, 1/2]")
        object.__setattr__(self, "a", float(self.a))
        if not 0.0 < float(self.epsilon) < 1.0:
            raise ConfigError("epsilon must lie in (0, 1)")
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "z0", _parse_complex(self.z0))
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def from_dict(cls, d: dict, experiment: Optional[str] = None) -> "ExperimentConfig":
        d = dict(d)
        if experiment is not None:
            if d.setdefault("experiment", experiment) != experiment:
                raise ConfigError(f"config is for {d['experiment']!r}, not {experiment!r}")
        known = {"experiment", "ensemble", "n_values", "a", "z0", "epsilon", "replicas",
                 "seed", "out_path", "format", "params"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            ns = [int(n) for n in d["n_values"]]
            ens = d.get("ensemble", {"family": Family.GAUSSIAN_REAL.value})
            if isinstance(ens, str):
                ens = {"family": ens}
            template = EnsembleSpec(Family(ens["family"]), int(ens.get("n", ns[0])),
                                    int(ens.get("seed", d.get("seed", 0))))
            return cls(
                experiment=d["experiment"],
                ensemble=template,
                n_values=tuple(ns),
                a=float(d.get("a", 0.25)),
                z0=_parse_complex(d.get("z0", 1.0)),
                epsilon=float(d.get("epsilon", 0.05)),
                replicas=int(d.get("replicas", 100)),
                seed=int(d.get("seed", 0)),
                out_path=str(d.get("out_path", "")),
                format=str(d.get("format", "csv")),
                params=dict(d.get("params", {})),
            )
        except ConfigError:
            raise
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    @classmethod
    def from_json(cls, text: str, experiment: Optional[str] = None) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d, experiment)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "ensemble": {"family": self.ensemble.family.value},
            "n_values": list(self.n_values),
            "a": self.a,
            "z0": [self.z0.real, self.z0.imag],
            "epsilon": self.epsilon,
            "replicas": self.replicas,
            "seed": self.seed,
            "out_path": self.out_path,
            "format": self.format,
            "params": dict(self.params),
        }

    def seeds(self) -> List[int]:
        return [replica_seed(self.seed, r) for r in range(self.replicas)]

    def param(self, key: str, default):
        return self.params.get(key, default)

    def check_params(self, allowed: Sequence[str]) -> None:
        extra = set(self.params) - set(allowed)
        if extra:
            raise ConfigError(f"unknown params for {self.experiment}: {sorted(extra)}")


# ---------------------------------------------------------------------------
# fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerLawFit:
    """log |y| = intercept + exponent * log x, least squares."""

    exponent: float
    intercept: float
    r_squared: float

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.exponent


def fit_power_law(points: Sequence[Tuple[float, float]]) -> PowerLawFit:
    """Log-log least squares after taking the median of repeated abscissae.

    Parameters
    ----------
    points : sequence of (n, statistic)
        Statistics are taken in absolute value.  Several points may share
        the same n (replicas); they are aggregated by their median.

    Raises
    ------
    DegenerateInput
        Fewer than three distinct n, a non-positive n, or a zero median.
    """
    pts = [(float(x), abs(float(y))) for x, y in points]
    if any(not (math.isfinite(x) and math.isfinite(y)) for x, y in pts):
        raise DegenerateInput("non-finite data")
    groups: Dict[float, List[float]] = {}
    for x, y in pts:
        groups.setdefault(x, []).append(y)
    if len(groups) < 3:
        raise DegenerateInput(f"need at least 3 distinct n, got {len(groups)}")
    xs = np.array(sorted(groups))
    ys = np.array([np.median(groups[x]) for x in xs])
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise DegenerateInput("power-law fit needs positive n and non-zero statistics")
    res = stats.linregress(np.log(xs), np.log(ys))
    return PowerLawFit(float(res.slope), float(res.intercept), float(res.rvalue ** 2))


# ---------------------------------------------------------------------------
# work pool
# ---------------------------------------------------------------------------


def worker_count() -> int:
    """Worker threads: ``CIRCULAW_THREADS`` if set, else the usable CPU count."""
    env = os.environ.get("CIRCULAW_THREADS")
    if env not in (None, ""):
        try:
            k = int(env)
        except ValueError:
            raise ConfigError(f"CIRCULAW_THREADS must be an integer, got {env!r}") from None
        if k < 1:
            raise ConfigError("CIRCULAW_THREADS must be >= 1")
        return k
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def ordered_map(fn: Callable, items: Sequence, workers: Optional[int] = None) -> list:
    """``[fn(x) for x in items]`` on a thread pool; result order = item order."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class _Task:
    n: int
    seed: int
    index: int = 0


def _run_tasks(config: ExperimentConfig, tasks: Sequence[_Task],
               body: Callable[[_Task], List[Tuple]]) -> List[ExperimentRecord]:
    """Run ``body`` per task and turn its rows into records, in task order.

    ``body`` returns tuples (statistic, measured, reference).  A numerical
    exception inside a task becomes an error row and aborts the experiment
    after the rows of all earlier tasks.
    """

    def wrapped(task: _Task):
        t0 = time.perf_counter()
        try:
            rows = body(task)
            ms = 1e3 * (time.perf_counter() - t0)
            recs = [ExperimentRecord(config.experiment, task.n, task.seed, config.z0, config.a,
                                     stat, meas, ref, ms) for stat, meas, ref in rows]
            return recs, None
        except NUMERICAL_ERRORS as exc:
            ms = 1e3 * (time.perf_counter() - t0)
            return [ExperimentRecord.failure(config.experiment, task.n, task.seed, config.z0,
                                             config.a, exc, ms)], exc

    out: List[ExperimentRecord] = []
    for recs, exc in ordered_map(wrapped, tasks):
        out.extend(recs)
        if exc is not None:
            raise ExperimentAborted(out, exc)
    return out


def _summary(config: ExperimentConfig, n: int, statistic: str, measured: float,
             reference: Optional[float] = None) -> ExperimentRecord:
    return ExperimentRecord(config.experiment, n, config.seed, config.z0, config.a,
                            statistic, measured, reference, 0.0)


def _fit_records(config, fit: PowerLawFit, n: int, name: str,
                 reference: Optional[float]) -> List[ExperimentRecord]:
    return [
        _summary(config, n, f"{name}_exponent", fit.exponent, reference),
        _summary(config, n, f"{name}_intercept", fit.intercept),
        _summary(config, n, f"{name}_r_squared", fit.r_squared),
    ]


@dataclass
class ExperimentResult:
    records: List[ExperimentRecord]
    fits: Dict[str, PowerLawFit] = field(default_factory=dict)

    def values(self, statistic: str, n: Optional[int] = None) -> np.ndarray:
        return np.array([r.measured for r in self.records
                         if r.statistic == statistic and (n is None or r.n == n)])

    def value(self, statistic: str, n: Optional[int] = None) -> float:
        v = self.values(statistic, n)
        if v.size != 1:
            raise KeyError(f"{v.size} records named {statistic!r} at n={n}")
        return float(v[0])


def _measurements(records, statistic: str, n: int) -> np.ndarray:
    return np.array([r.measured for r in records if r.statistic == statistic and r.n == n])


# ---------------------------------------------------------------------------
# local law
# ---------------------------------------------------------------------------


def _default_etas(n: int, count: int = 9) -> np.ndarray:
    return np.geomspace(math.log(n) ** 2 / n, 1.0, count)


def run_local_law(config: ExperimentConfig) -> ExperimentResult:
    """|m - m_c| at fixed (E, z) over an eta sweep and at fixed n*eta.

    Params: ``E`` (default lambda_+ / 2), ``etas`` (default log-spaced in
    [(log n)^2 / n, 1]), ``n_eta`` (default 20).
    """
    config.check_params(("E", "etas", "n_eta"))
    z = config.z0
    E = float(config.param("E", equilibrium.edge_parameters(z).lambda_plus / 2.0))
    n_eta = float(config.param("n_eta", 20.0))
    etas_cfg = config.param("etas", None)
    fam = config.ensemble.family

    def etas_for(n):
        return np.asarray(etas_cfg, dtype=float) if etas_cfg is not None else _default_etas(n)

    mc_cache = {}
    for n in config.n_values:
        for eta in list(etas_for(n)) + [n_eta / n]:
            mc_cache[(n, eta)] = equilibrium.solve_mc(complex(E, eta), z)

    def body(task: _Task):
        lam = hermitization.singular_spectrum(sample(EnsembleSpec(fam, task.n, task.seed)), z)
        rows = []
        for eta in etas_for(task.n):
            m = linalg.resolvent_trace(lam, complex(E, eta))
            rows.append((f"abs_m_minus_mc[eta={eta:.6g}]", abs(m - mc_cache[(task.n, eta)]), None))
        eta = n_eta / task.n
        m = linalg.resolvent_trace(lam, complex(E, eta))
        rows.append((f"abs_m_minus_mc[n_eta={n_eta:g}]", abs(m - mc_cache[(task.n, eta)]), None))
        return rows

    tasks = [_Task(n, s, i) for n in config.n_values for i, s in enumerate(config.seeds())]
    records = _run_tasks(config, tasks, body)
    fits = {}
    for n in config.n_values:
        etas = etas_for(n)
        pts = [(eta, v) for eta in etas for v in _measurements(records, f"abs_m_minus_mc[eta={eta:.6g}]", n)]
        if len(set(etas)) >= 3:
            fit = fit_power_law(pts)
            fits[f"eta_n={n}"] = fit
            records += _fit_records(config, fit, n, "fit_eta", -1.0)
    if len(config.n_values) >= 3:
        stat = f"abs_m_minus_mc[n_eta={n_eta:g}]"
        pts = [(n, v) for n in config.n_values for v in _measurements(records, stat, n)]
        fit = fit_power_law(pts)
        fits["n_fixed_n_eta"] = fit
        records += _fit_records(config, fit, config.n_values[-1], "fit_n_at_fixed_n_eta", None)
    return ExperimentResult(records, fits)


# ---------------------------------------------------------------------------
# circular law
# ---------------------------------------------------------------------------


def _bump_primitive(rho):
    """int_0^rho (1 - s^2)^4 s ds."""
    rho = np.clip(rho, 0.0, 1.0)
    return (1.0 - (1.0 - rho * rho) ** 5) / 10.0


def disk_reference(f: TestFunction, n: int) -> float:
    """pi^{-1} int_D f_{z0}, integrating the radial profile exactly along rays from z0.

    Along the ray z0 + r e^{i theta} the unit disk is the interval between
    the roots of r^2 + 2 b r + |z0|^2 - 1 with b = Re(z0 e^{-i theta}); the
    radial integral of the bump is closed form, leaving a 1-D angular
    integral with kinks only where the ray is tangent to the circle.
    """
    s = f.scale(n)
    z0 = f.z0
    c = abs(z0) ** 2 - 1.0
    if abs(z0) + 1.0 / s <= 1.0:
        return 0.2  # (1/pi) * 2 pi * 1/10

    def ray(theta):
        b = (z0 * np.exp(-1j * theta)).real
        disc = b * b - c
        if disc <= 0:
            return 0.0
        r_lo = max(0.0, -b - math.sqrt(disc))
        r_hi = -b + math.sqrt(disc)
        if r_hi <= r_lo:
            return 0.0
        return float(_bump_primitive(s * r_hi) - _bump_primitive(s * r_lo))

    # kinks: rays tangent to the circle and rays leaving supp f exactly on it
    brk = []
    r0 = abs(z0)
    if r0 > 0:
        phi = float(np.angle(z0))
        bs = [-(c + 1.0 / s ** 2) * s / 2.0]
        if c > 0:
            bs += [-math.sqrt(c), math.sqrt(c)]
        for b in bs:
            if abs(b) <= r0:
                d = math.acos(b / r0)
                brk += [(phi + d) % (2 * math.pi), (phi - d) % (2 * math.pi)]
    total, _ = integrate.quad(ray, 0.0, 2.0 * math.pi, points=sorted(set(brk)) or None,
                              limit=400, epsabs=1e-13, epsrel=1e-12)
    return total / math.pi


def run_circular_law(config: ExperimentConfig) -> ExperimentResult:
    """n^{-1} sum_j f_{z0}(mu_j) against pi^{-1} int_D f_{z0}, fitted against n.

    Params: ``backend`` for the eigensolver (default ``"lapack"``).
    Summary rows per n: median |error| and its ratio to the envelope
    C n^{-1/2+2a} with C fixed at the smallest n.
    """
    config.check_params(("backend",))
    backend = config.param("backend", "lapack")
    f = TestFunction(config.z0, config.a)
    fam = config.ensemble.family
    refs = {n: disk_reference(f, n) for n in config.n_values}

    def body(task: _Task):
        X = sample(EnsembleSpec(fam, task.n, task.seed))
        mu = linalg.complex_eigenvalues(X, backend=backend).values
        return [("normalized_linear_statistic", hermitization.girko_lhs(f, mu, task.n), refs[task.n])]

    tasks = [_Task(n, s, i) for n in config.n_values for i, s in enumerate(config.seeds())]
    records = _run_tasks(config, tasks, body)
    med = {}
    for n in config.n_values:
        errs = [r.error for r in records if r.n == n and r.statistic == "normalized_linear_statistic"]
        med[n] = float(np.median(np.abs(errs)))
        records.append(_summary(config, n, "median_abs_error", med[n]))
    n0 = config.n_values[0]
    rate = -0.5 + 2.0 * config.a
    C = med[n0] / n0 ** rate
    for n in config.n_values:
        records.append(_summary(config, n, "envelope_ratio", med[n] / (C * n ** rate) if C > 0 else 0.0))
    fits = {}
    if len(config.n_values) >= 3:
        pts = [(r.n, r.error) for r in records if r.statistic == "normalized_linear_statistic"]
        fit = fit_power_law(pts)
        fits["error_vs_n"] = fit
        records += _fit_records(config, fit, config.n_values[-1], "fit_n", -1.0 + 2.0 * config.a)
    return ExperimentResult(records, fits)


# ---------------------------------------------------------------------------
# moment-matching comparison
# ---------------------------------------------------------------------------


def _bootstrap_abs_diff(x1: np.ndarray, x2: np.ndarray, seed: int, resamples: int = 2000):
    rng = np.random.default_rng(seed)
    i1 = rng.integers(0, len(x1), size=(resamples, len(x1)))
    i2 = rng.integers(0, len(x2), size=(resamples, len(x2)))
    d = np.abs(x1[i1].mean(axis=1) - x2[i2].mean(axis=1))
    return np.percentile(d, [2.5, 97.5])


def run_comparison(config: ExperimentConfig) -> ExperimentResult:
    """Difference of the mean Stieltjes transforms of two ensembles at w = E + i eta.

    The first ensemble is ``config.ensemble``; params: ``other`` (family of
    the second ensemble, default Rademacher), ``E`` (default lambda_+ / 2),
    ``eta`` (default 0.05).  The second ensemble uses seeds disjoint from the
    first, so comparing a family with itself is a null control.
    """
    config.check_params(("other", "E", "eta"))
    z = config.z0
    fam1 = config.ensemble.family
    fam2 = Family(config.param("other", Family.RADEMACHER.value))
    E = float(config.param("E", equilibrium.edge_parameters(z).lambda_plus / 2.0))
    eta = float(config.param("eta", 0.05))
    w = complex(E, eta)
    R = config.replicas
    mc = equilibrium.solve_mc(w, z)
    tag1, tag2 = f"m[1:{fam1.value}]", f"m[2:{fam2.value}]"

    def body(task: _Task):
        fam, tag = (fam1, tag1) if task.index < R else (fam2, tag2)
        lam = hermitization.singular_spectrum(sample(EnsembleSpec(fam, task.n, task.seed)), z)
        m = linalg.resolvent_trace(lam, w)
        return [(f"re_{tag}", m.real, mc.real), (f"im_{tag}", m.imag, mc.imag)]

    tasks = [_Task(n, replica_seed(config.seed, i), i) for n in config.n_values for i in range(2 * R)]
    records = _run_tasks(config, tasks, body)
    for n in config.n_values:
        x1 = _measurements(records, f"re_{tag1}", n) + 1j * _measurements(records, f"im_{tag1}", n)
        x2 = _measurements(records, f"re_{tag2}", n) + 1j * _measurements(records, f"im_{tag2}", n)
        diff = abs(x1.mean() - x2.mean())
        se = 0.0
        if R > 1:
            se = math.sqrt((np.var(x1.real, ddof=1) + np.var(x1.imag, ddof=1)) / len(x1)
                           + (np.var(x2.real, ddof=1) + np.var(x2.imag, ddof=1)) / len(x2))
        lo, hi = _bootstrap_abs_diff(x1, x2, replica_seed(config.seed, 2 * R + n))
        records += [
            _summary(config, n, "abs_mean_difference", diff),
            _summary(config, n, "stderr_difference", se),
            _summary(config, n, "difference_over_stderr", diff / se if se > 0 else 0.0),
            _summary(config, n, "abs_mean_difference_ci_low", float(lo)),
            _summary(config, n, "abs_mean_difference_ci_high", float(hi)),
            _summary(config, n, "n_eta_times_difference", n * eta * diff),
        ]
    return ExperimentResult(records, {})


# ---------------------------------------------------------------------------
# Ginibre quadratures
# ---------------------------------------------------------------------------


def _two_point_fit(xs, ys) -> PowerLawFit:
    """Exact log-log line through two points (r_squared = 1 by construction)."""
    lx, ly = np.log(xs), np.log(np.abs(ys))
    slope = (ly[1] - ly[0]) / (lx[1] - lx[0])
    return PowerLawFit(float(slope), float(ly[0] - slope * lx[0]), 1.0)


def variance_limit(f: TestFunction) -> float:
    """Limit variance for the bump: edge formula on the unit circle, else (1/4pi) ||grad f||^2."""
    if abs(abs(f.z0) - 1.0) < 1e-12:
        return ginibre.limit_variance_edge(f)
    return GRAD_NORM_SQ / (4.0 * math.pi)


def run_ginibre_stats(config: ExperimentConfig) -> ExperimentResult:
    """E[X_f] and Var[X_f] of the Ginibre ensemble by kernel quadrature.

    Deterministic (no sampling); one work item per n.  The expectation decay
    exponent is a least-squares fit for three or more n and the exact
    two-point slope for two.
    """
    config.check_params(())
    f = TestFunction(config.z0, config.a)
    limit = variance_limit(f)

    def body(task: _Task):
        e = ginibre.one_point_integral(f, task.n)
        v = ginibre.two_point_variance(f, task.n)
        return [("expectation", e, 0.0), ("variance", v, limit), ("variance_rel_dev", (v - limit) / limit, 0.0)]

    records = _run_tasks(config, [_Task(n, config.seed) for n in config.n_values], body)
    fits = {}
    ns = np.array(config.n_values, dtype=float)
    es = np.array([_measurements(records, "expectation", n)[0] for n in config.n_values])
    if len(ns) >= 3:
        fits["expectation_vs_n"] = fit_power_law(list(zip(ns, es)))
    elif len(ns) == 2 and np.all(es != 0):
        fits["expectation_vs_n"] = _two_point_fit(ns, es)
    if fits:
        records += _fit_records(config, fits["expectation_vs_n"], config.n_values[-1],
                                "fit_expectation", -0.5)
    return ExperimentResult(records, fits)


# ---------------------------------------------------------------------------
# Hermitization identities
# ---------------------------------------------------------------------------


def run_girko_check(config: ExperimentConfig) -> ExperimentResult:
    """Girko identity and Helffer-Sjostrand trace gaps on sampled matrices.

    Params: ``xi_radial`` / ``xi_angular`` (default 48 / 96), ``hs`` (run the
    trace check, default true), ``refinement`` (estimate the convergence
    order of the xi-grid by three successive doublings, default false).
    """
    config.check_params(("xi_radial", "xi_angular", "hs", "refinement", "backend"))
    if max(config.n_values) > 64:
        raise ConfigError("girko-check is limited to n <= 64")
    f = TestFunction(config.z0, config.a)
    nr = int(config.param("xi_radial", 48))
    na = int(config.param("xi_angular", 96))
    do_hs = bool(config.param("hs", True))
    do_ref = bool(config.param("refinement", False))
    backend = config.param("backend", "native")
    fam = config.ensemble.family

    def body(task: _Task):
        X = sample(EnsembleSpec(fam, task.n, task.seed))
        mu = linalg.complex_eigenvalues(X, backend=backend).values
        lhs = hermitization.girko_lhs(f, mu, task.n)
        rhs = hermitization.girko_rhs(f, X, hermitization.default_xi_grid(nr, na))
        rows = [("girko_rhs", rhs, lhs), ("girko_rel_gap", abs(rhs - lhs) / abs(lhs) if lhs else abs(rhs), 0.0)]
        if do_ref:
            vals = [hermitization.girko_rhs(f, X, hermitization.default_xi_grid(nr * k // 2, na * k // 2))
                    for k in (1, 2, 4)]
            d1, d2 = abs(vals[0] - vals[1]), abs(vals[1] - vals[2])
            if d1 > 0 and d2 > 0:
                rows.append(("girko_refinement_order", math.log2(d1 / d2), None))
        if do_hs:
            cutoff = hermitization.CutoffLog.for_z(config.z0, task.n, config.epsilon)
            lam = hermitization.singular_spectrum(X, config.z0)
            direct = float(np.sum(cutoff.phi(lam)))
            hs = hermitization.hs_trace(cutoff, hermitization.stieltjes_from_eigenvalues(lam))
            rows.append(("hs_trace", hs, direct))
            rows.append(("hs_rel_gap", abs(hs - direct) / abs(direct) if direct else abs(hs), 0.0))
        return rows

    tasks = [_Task(n, s, i) for n in config.n_values for i, s in enumerate(config.seeds())]
    return ExperimentResult(_run_tasks(config, tasks, body), {})


# ---------------------------------------------------------------------------
# extreme singular values
# ---------------------------------------------------------------------------


def run_extremes(config: ExperimentConfig) -> ExperimentResult:
    """Smallest and largest eigenvalues of (X - z0)^*(X - z0) per replica."""
    config.check_params(())
    fam = config.ensemble.family

    def body(task: _Task):
        d = hermitization.extreme_eigen_diagnostics(sample(EnsembleSpec(fam, task.n, task.seed)), config.z0)
        if not math.isfinite(d.log_lambda_1):
            raise hermitization.SpectrumFailure(f"smallest eigenvalue is zero at z={config.z0}")
        return [
            ("log_lambda_1", d.log_lambda_1, None),
            ("lambda_N", d.lambda_N, d.lambda_N - d.lambda_plus_gap),
            ("edge_gap_scaled", d.lambda_plus_gap * task.n ** (2.0 / 3.0), 0.0),
            ("count_above_2lambda_plus", float(d.count_above_2lambda_plus), 0.0),
        ]

    tasks = [_Task(n, s, i) for n in config.n_values for i, s in enumerate(config.seeds())]
    records = _run_tasks(config, tasks, body)
    for n in config.n_values:
        records.append(_summary(config, n, "median_edge_gap_scaled",
                                float(np.median(_measurements(records, "edge_gap_scaled", n))), 0.0))
        records.append(_summary(config, n, "total_count_above_2lambda_plus",
                                float(np.sum(_measurements(records, "count_above_2lambda_plus", n))), 0.0))
    return ExperimentResult(records, {})


_RUNNERS = {
    "local-law": run_local_law,
    "circular-law": run_circular_law,
    "comparison": run_comparison,
    "ginibre-stats": run_ginibre_stats,
    "girko-check": run_girko_check,
    "extremes": run_extremes,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    return _RUNNERS[config.experiment](config)
