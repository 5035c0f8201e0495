"""Shot-count sweeps and the linear latency model ``T(n) = T_V + n * T_Q``."""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import median
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..compiler import compile_program
from ..device import DeviceModel
from ..executor import execute, patch
from .circuits import PROGRAM_FAMILIES, literal_program

__all__ = [
    "DEFAULT_SHOTS",
    "MODES",
    "LatencySample",
    "LatencyFit",
    "LatencyModel",
    "measure_latency",
    "fit_latency",
    "benchmark",
    "BenchmarkResult",
    "compare_configurations",
    "write_csv",
    "write_json",
    "summary_table",
]

DEFAULT_SHOTS = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000, 20000, 50000, 100000)
MODES = ("simulated_clock", "wall_clock")


@dataclass(frozen=True)
class LatencySample:
    """Median total latency over ``repetitions`` runs at ``n`` shots."""

    n: int
    total: float
    repetitions: int
    runs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.total > 0:
            raise ValueError("total latency must be positive")


def _as_column(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ValueError("expected a single feature: the shot count")
    if not np.all(np.isfinite(x)):
        raise ValueError("shot counts must be finite")
    return x


class LatencyModel(RegressorMixin, BaseEstimator):
    """Least-squares fit of total latency against shot count.

    Fitted attributes: ``variational_latency_`` (intercept),
    ``shot_latency_`` (slope), ``critical_shots_`` (their ratio, or None when
    the slope is zero) and ``diagnostics_``. Negative estimates are clamped
    at zero when ``clamp`` is set, refitting the other coefficient.
    """

    def __init__(self, clamp: bool = True):
        self.clamp = clamp

    def fit(self, X, y, sample_weight=None):
        n = _as_column(X)
        t = np.asarray(y, dtype=float).reshape(-1)
        if n.shape != t.shape:
            raise ValueError(f"X and y lengths differ: {n.size} vs {t.size}")
        if np.unique(n).size < 2:
            raise ValueError("need at least two distinct shot counts to fit the latency model")
        w = np.ones_like(t) if sample_weight is None else np.asarray(sample_weight, dtype=float).reshape(-1)
        if w.shape != t.shape or np.any(w < 0) or not np.any(w > 0):
            raise ValueError("sample_weight must be non-negative, not all zero, and match y")
        n_bar, t_bar = np.average(n, weights=w), np.average(t, weights=w)
        slope = float(np.dot(w * (n - n_bar), t - t_bar) / np.dot(w * (n - n_bar), n - n_bar))
        intercept = float(t_bar - slope * n_bar)
        diagnostics = []
        if self.clamp and slope < 0:
            diagnostics.append(f"negative shot latency {slope:.3e} s clamped to 0")
            slope, intercept = 0.0, float(t_bar)
        if self.clamp and intercept < 0:
            diagnostics.append(f"negative variational latency {intercept:.3e} s clamped to 0")
            intercept, slope = 0.0, max(float(np.dot(w * n, t) / np.dot(w * n, n)), 0.0)
        for msg in diagnostics:
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        self.variational_latency_ = intercept
        self.shot_latency_ = slope
        self.critical_shots_ = intercept / slope if slope > 0 else None
        self.diagnostics_ = tuple(diagnostics)
        self.residuals_ = t - self.predict(n)
        self.n_features_in_ = 1
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "shot_latency_")
        return self.variational_latency_ + self.shot_latency_ * _as_column(X)


@dataclass(frozen=True)
class LatencyFit:
    T_V: float
    T_Q: float
    n_c: float | None
    max_abs_residual: float
    rms_residual: float
    max_rel_residual: float
    samples: tuple[LatencySample, ...] = ()
    diagnostics: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["samples"] = [{"n": s.n, "median_total_s": s.total, "repetitions": s.repetitions} for s in self.samples]
        return d


def fit_latency(samples: Sequence[LatencySample], relative: bool = True) -> LatencyFit:
    """Fit ``T(n) = T_V + n T_Q``.

    With ``relative`` each point is weighted by ``1/T^2``, i.e. residuals are
    compared as fractions of the measured latency. Timing noise grows with
    the latency and the sweep spans several decades, so unweighted least
    squares would let the largest shot counts swamp the intercept.
    """
    samples = tuple(samples)
    n = np.array([s.n for s in samples], dtype=float)
    t = np.array([s.total for s in samples], dtype=float)
    model = LatencyModel().fit(n, t, sample_weight=1.0 / t**2 if relative and np.all(t > 0) else None)
    res = model.residuals_
    return LatencyFit(
        T_V=model.variational_latency_,
        T_Q=model.shot_latency_,
        n_c=model.critical_shots_,
        max_abs_residual=float(np.max(np.abs(res))),
        rms_residual=float(np.sqrt(np.mean(res**2))),
        max_rel_residual=float(np.max(np.abs(res) / np.abs(t))),
        samples=samples,
        diagnostics=model.diagnostics_,
    )


def measure_latency(
    device: DeviceModel,
    m: int | None = None,
    shots_list: Sequence[int] = DEFAULT_SHOTS,
    r: int = 100,
    mode: str = "simulated_clock",
    parametric: bool = True,
    active_reset: bool = False,
    seed: int | None = 0,
    family: str = "RPG",
    compiler=compile_program,
) -> list[LatencySample]:
    """Sweep shot counts for one fixed program structure (one permutation set for RPG).

    Parameter values are redrawn on every run. Parametric mode compiles once
    and charges the compile overhead on the first run only; otherwise every
    run recompiles a literal program and pays the overhead again.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not shots_list:
        raise ValueError("shots_list must not be empty")
    if r < 1:
        raise ValueError("r must be >= 1")
    m = device.log2_quantum_volume if m is None else m
    rng = np.random.default_rng(seed)
    workload = PROGRAM_FAMILIES[family](m, int(rng.integers(2**32)), active_reset)
    reset_mode = "active" if active_reset else "passive"
    compile_cost = device.step_overheads["compile"]
    binary = None
    samples = []
    for n in shots_list:
        runs = []
        for _ in range(r):
            values = workload.sample(rng)
            exec_seed = int(rng.integers(2**63))
            started = time.perf_counter()
            charge = 0.0
            if parametric:
                if binary is None:
                    binary = compiler(workload.program, device)
                    charge = compile_cost
                patched = patch(binary, values)
            else:
                patched = patch(compiler(literal_program(workload.program, values), device))
                charge = compile_cost
            report = execute(patched, device, int(n), exec_seed, reset_mode)
            if mode == "simulated_clock":
                runs.append(report.simulated_total + charge)
            else:
                runs.append(time.perf_counter() - started)
        samples.append(LatencySample(int(n), float(median(runs)), r, tuple(runs)))
    return samples


@dataclass
class BenchmarkResult:
    family: str
    m: int
    parametric: bool
    active_reset: bool
    mode: str
    fits: list[LatencyFit] = field(default_factory=list)

    @property
    def T_V(self) -> float:
        return float(median(f.T_V for f in self.fits))

    @property
    def T_Q(self) -> float:
        return float(median(f.T_Q for f in self.fits))

    @property
    def n_c(self) -> float | None:
        return self.T_V / self.T_Q if self.T_Q > 0 else None

    @property
    def samples(self) -> list[LatencySample]:
        """Per-n medians across permutation sets."""
        by_n: dict[int, list[float]] = {}
        for fit in self.fits:
            for s in fit.samples:
                by_n.setdefault(s.n, []).append(s.total)
        r = self.fits[0].samples[0].repetitions if self.fits else 0
        return [LatencySample(n, float(median(v)), r * len(v)) for n, v in by_n.items()]

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "m": self.m,
            "parametric": self.parametric,
            "active_reset": self.active_reset,
            "mode": self.mode,
            "T_V_s": self.T_V,
            "T_Q_s": self.T_Q,
            "n_c": self.n_c,
            "permutation_sets": [f.to_dict() for f in self.fits],
        }


def benchmark(
    device: DeviceModel,
    m: int | None = None,
    shots_list: Sequence[int] = DEFAULT_SHOTS,
    r: int = 100,
    n_permutation_sets: int = 5,
    mode: str = "simulated_clock",
    parametric: bool = True,
    active_reset: bool = False,
    seed: int | None = 0,
    family: str = "RPG",
) -> BenchmarkResult:
    """Fit each of ``n_permutation_sets`` program instances and aggregate by median."""
    m = device.log2_quantum_volume if m is None else m
    result = BenchmarkResult(family, m, parametric, active_reset, mode)
    for child in np.random.SeedSequence(seed).spawn(n_permutation_sets):
        child_seed = int(child.generate_state(1)[0])
        samples = measure_latency(device, m, shots_list, r, mode, parametric, active_reset, child_seed, family)
        result.fits.append(fit_latency(samples))
    return result


def compare_configurations(device: DeviceModel, m: int | None = None, **kwargs) -> dict[tuple[bool, bool], BenchmarkResult]:
    """Benchmark all four (parametric, active_reset) combinations with shared seeds."""
    return {
        (p, a): benchmark(device, m, parametric=p, active_reset=a, **kwargs)
        for p in (False, True)
        for a in (False, True)
    }


def write_csv(path: str | Path, samples: Iterable[LatencySample], fit: LatencyFit | BenchmarkResult) -> Path:
    path = Path(path)
    n_c = fit.n_c if fit.n_c is not None else math.nan
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "median_total_s", "T_V_s", "T_Q_s", "n_c"])
        for s in samples:
            writer.writerow([s.n, repr(s.total), repr(fit.T_V), repr(fit.T_Q), repr(n_c)])
    return path


def write_json(path: str | Path, result: BenchmarkResult | LatencyFit) -> Path:
    path = Path(path)
    path.write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return path


def summary_table(results: dict[str, BenchmarkResult]) -> str:
    """Plain-text table of median latency per shot count, one column per configuration."""
    names = list(results)
    rows = {}
    for name in names:
        for s in results[name].samples:
            rows.setdefault(s.n, {})[name] = s.total
    width = max(12, *(len(n) + 2 for n in names))
    lines = ["n".rjust(8) + "".join(name.rjust(width) for name in names)]
    for n in sorted(rows):
        lines.append(f"{n:>8d}" + "".join(f"{rows[n].get(name, math.nan):>{width}.6g}" for name in names))
    lines.append("T_V [s]".rjust(8) + "".join(f"{results[nm].T_V:>{width}.6g}" for nm in names))
    lines.append("T_Q [s]".rjust(8) + "".join(f"{results[nm].T_Q:>{width}.6g}" for nm in names))
    lines.append("n_c".rjust(8) + "".join(f"{(results[nm].n_c or math.nan):>{width}.6g}" for nm in names))
    return "\n".join(lines)
