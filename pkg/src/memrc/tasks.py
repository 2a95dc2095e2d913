"""Benchmark signal generators: harmonic generation, MSO, NARMA-10, noise."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TimeSeries",
    "TaskInstance",
    "NarmaDivergenceError",
    "sine",
    "triangle_wave",
    "square_wave",
    "hhg_sine_task",
    "hhg_triangle_task",
    "hhg_square_task",
    "mso_wave",
    "mso_task",
    "narma10",
    "narma10_task",
    "uniform_series",
    "write_series_csv",
    "read_series_csv",
]

TRIANGLE_KMAX = 100
SQUARE_KMAX = 200


@dataclass(frozen=True)
class TimeSeries:
    samples: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1:
            raise ValueError("a TimeSeries is one-dimensional")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return len(self.samples)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dt


@dataclass(frozen=True)
class TaskInstance:
    input: TimeSeries
    target: TimeSeries
    name: str

    def __post_init__(self):
        if len(self.input) != len(self.target) or self.input.dt != self.target.dt:
            raise ValueError("input and target must share length and dt")


class NarmaDivergenceError(ArithmeticError):
    def __init__(self, index: int):
        super().__init__(f"NARMA-10 sequence diverged at index {index}")
        self.index = index


def _times(dt, n):
    return np.arange(n) * dt


def sine(f: float, amplitude: float = 1.0, dt: float = 1e-3, n_samples: int = 1000, phase: float = 0.0) -> TimeSeries:
    if not f > 0:
        raise ValueError("f must be > 0")
    if not dt < 1 / (2 * f):
        raise ValueError("dt must be below the Nyquist interval 1/(2f)")
    return TimeSeries(amplitude * np.sin(2 * np.pi * f * _times(dt, n_samples) + phase), dt)


def triangle_wave(f: float, dt: float, n: int, k_max: int = TRIANGLE_KMAX) -> TimeSeries:
    """Unit triangle wave from its odd-harmonic Fourier series, truncated at ``k_max``."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    t = _times(dt, n)
    k = np.arange(k_max + 1)
    h = 2 * k + 1
    coef = (-1.0) ** k / h**2
    x = np.sin(2 * np.pi * f * np.outer(t, h)) @ coef
    return TimeSeries(8 / np.pi**2 * x, dt)


def square_wave(f: float, dt: float, n: int, k_max: int = SQUARE_KMAX) -> TimeSeries:
    """Unit square wave from its Fourier series with ``k_max`` odd harmonics."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    t = _times(dt, n)
    h = 2 * np.arange(1, k_max + 1) - 1
    x = np.sin(2 * np.pi * f * np.outer(t, h)) @ (1.0 / h)
    return TimeSeries(4 / np.pi * x, dt)


def hhg_sine_task(f: float = 20.0, dt: float = 1e-3, n: int = 2200) -> TaskInstance:
    return TaskInstance(sine(f, 1.0, dt, n), sine(2 * f, 1.0, dt, n), "sine")


def hhg_triangle_task(f: float = 20.0, dt: float = 1e-3, n: int = 2200, k_max: int = TRIANGLE_KMAX) -> TaskInstance:
    return TaskInstance(sine(f, 1.0, dt, n), triangle_wave(f, dt, n, k_max), "triangle")


def hhg_square_task(f: float = 20.0, dt: float = 1e-3, n: int = 2200, k_max: int = SQUARE_KMAX) -> TaskInstance:
    return TaskInstance(sine(f, 1.0, dt, n), square_wave(f, dt, n, k_max), "square")


def mso_wave(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.sin(0.2 * t) + np.sin(0.311 * t) + np.sin(0.42 * t)


def mso_task(dt: float = 1e-3, n: int = 2200, horizon: float = 5e-3) -> TaskInstance:
    """Predict the three-oscillator wave ``horizon`` seconds ahead."""
    t = _times(dt, n)
    return TaskInstance(TimeSeries(mso_wave(t), dt), TimeSeries(mso_wave(t + horizon), dt), "mso")


def narma10(u) -> TimeSeries:
    """NARMA-10 response to ``u`` (values in [0, 0.5]).

    ``y[t] = 0.3 y[t-1] + 0.05 y[t-1] sum_{i=1..10} y[t-i] + 1.5 u[t-10] u[t-1] + 0.1``
    for ``t >= 10``, with ``y[0..9] = 0``.
    """
    series = u if isinstance(u, TimeSeries) else TimeSeries(u)
    x = series.samples
    if x.size and (x.min() < 0 or x.max() > 0.5):
        raise ValueError("NARMA-10 input must lie in [0, 0.5]")
    n = len(x)
    y = np.zeros(n)
    for t in range(10, n):
        prev = y[t - 1]
        # fsum: exactly rounded, so the result does not depend on summation order
        y[t] = 0.3 * prev + 0.05 * prev * math.fsum(y[t - 10 : t]) + 1.5 * x[t - 10] * x[t - 1] + 0.1
        if abs(y[t]) > 10:
            raise NarmaDivergenceError(t)
    return TimeSeries(y, series.dt)


def narma10_task(n: int, seed: int, dt: float = 1e-3) -> TaskInstance:
    """Input ``u`` with target aligned so that row ``t`` predicts ``y[t+1]``.

    ``y[t+1]`` depends on inputs up to ``u[t]``, i.e. exactly what the
    reservoir has consumed after step ``t``.
    """
    u = uniform_series(0.0, 0.5, n + 1, seed, dt)
    y = narma10(u).samples
    return TaskInstance(TimeSeries(u.samples[:n], dt), TimeSeries(y[1:], dt), "narma10")


def uniform_series(low: float, high: float, n: int, seed: int, dt: float = 1.0) -> TimeSeries:
    rng = np.random.default_rng(seed)
    return TimeSeries(rng.uniform(low, high, n), dt)


def write_series_csv(series: TimeSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "value"])
        for t, v in zip(series.t, series.samples):
            w.writerow([repr(float(t)), repr(float(v))])


def read_series_csv(path) -> TimeSeries:
    """Read a ``t,value`` CSV; ``dt`` is taken from the first two time stamps."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                continue  # header
    if not rows:
        raise ValueError(f"{path}: no samples")
    t, v = np.array(rows).T
    dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
    if len(t) > 2 and not np.allclose(np.diff(t), dt, rtol=1e-6, atol=0):
        raise ValueError(f"{path}: samples are not uniformly spaced")
    return TimeSeries(v, dt)

