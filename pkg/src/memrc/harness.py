"""Experiment orchestration: INI configs, seeded multi-trial grid sweeps, PSD, CSV reports.

A config file has up to five sections::

    [experiment]   task, architecture, trials, seed, out_dir
    [task]         n, dt, frequency, horizon, low, high, max_delay
    [architecture] input_coeff, spectral_radius, n_nodes, network_size_min,
                   network_size_max, k_degree, substeps, drive_clip,
                   input_offset, n_circuit_nodes, n_readout_pairs,
                   device_params, max_iters, voltage_tolerance
    [sweep]        v, lambda           (comma-separated grids)
    [readout]      ridge, washout, train_fraction

Unknown sections or keys are rejected. Every trial draws its seeds from
:func:`child_seed`, a pure function of (root seed, cell, trial), so results
do not depend on thread count or scheduling.
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy
import scipy.signal

from . import __version__
from .circuit import SolveSettings, SolverError
from .device import DeviceParams, default_params, load_params
from .learn import TrainSpec, fit_evaluate, memory_capacity, mse, nrmse
from .reservoir import ScrConfig, build_scr, build_sigmoid_scr, build_single_network_reservoir
from .tasks import (
    NarmaDivergenceError,
    TimeSeries,
    hhg_sine_task,
    hhg_square_task,
    hhg_triangle_task,
    mso_task,
    narma10_task,
    uniform_series,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "CellResult",
    "TASKS",
    "ARCHITECTURES",
    "child_seed",
    "load_config",
    "parse_config",
    "run_experiment",
    "write_report",
    "psd",
    "write_psd",
    "compare_architectures",
    "resolve_threads",
]

TASKS = ("hhg", "hhg_sine", "hhg_triangle", "hhg_square", "mso", "narma10", "memory_capacity")
ARCHITECTURES = ("scr", "single-network", "sigmoid-scr")
TAINT_FRACTION = 1e-3
MAX_REGENERATIONS = 20
_MASK = (1 << 64) - 1


class ConfigError(ValueError):
    pass


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def child_seed(root: int, *indices: int) -> int:
    """Fold indices into ``root`` with splitmix64; order-sensitive, 63-bit result."""
    h = _splitmix64(root & _MASK)
    for i in indices:
        h = _splitmix64(h ^ (i & _MASK))
    return h >> 1


# -- configuration ------------------------------------------------------------

_SCHEMA = {
    "experiment": {"task": str, "architecture": str, "trials": int, "seed": int, "out_dir": str},
    "task": {"n": int, "dt": float, "frequency": float, "horizon": float, "low": float, "high": float,
             "max_delay": int},
    "architecture": {"input_coeff": float, "spectral_radius": float, "n_nodes": int, "network_size_min": int,
                     "network_size_max": int, "k_degree": int, "substeps": int, "drive_clip": float,
                     "input_offset": float, "n_circuit_nodes": int, "n_readout_pairs": int,
                     "device_params": str, "max_iters": int, "voltage_tolerance": float},
    "sweep": {"v": "grid", "lambda": "grid"},
    "readout": {"ridge": float, "washout": int, "train_fraction": float},
}


@dataclass
class ExperimentConfig:
    task: str = "narma10"
    architecture: str = "scr"
    trials: int = 10
    seed: int = 0
    out_dir: str = "out"
    # task
    n: int = 2200
    dt: float = 1e-3
    frequency: float = 20.0
    horizon: float = 5e-3
    low: float | None = None
    high: float | None = None
    max_delay: int = 10
    # architecture
    input_coeff: float = 1.0
    spectral_radius: float = 1.0
    n_nodes: int = 20
    network_size_min: int = 20
    network_size_max: int = 32
    k_degree: int = 4
    substeps: int = 10
    drive_clip: float = 16.0
    input_offset: float = 0.0
    n_circuit_nodes: int = 60
    n_readout_pairs: int = 16
    device_params: str | None = None
    max_iters: int = 50
    voltage_tolerance: float = 1e-6
    # sweep
    v: tuple[float, ...] | None = None
    lambda_: tuple[float, ...] | None = None
    # readout
    ridge: float = 1e-8
    washout: int | None = None
    train_fraction: float = 0.7
    # resolved at load time
    params: DeviceParams = field(default_factory=default_params, repr=False)
    source_text: str = field(default="", repr=False)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {', '.join(TASKS)}")
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"unknown architecture {self.architecture!r}; expected one of {', '.join(ARCHITECTURES)}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.v is None:
            self.v = (self.input_coeff,)
        if self.lambda_ is None:
            self.lambda_ = (self.spectral_radius,)
        self.v, self.lambda_ = tuple(self.v), tuple(self.lambda_)
        if not self.v or not self.lambda_:
            raise ConfigError("sweep grids must be non-empty")
        if any(x < 0 for x in self.v + self.lambda_):
            raise ConfigError("sweep values must be >= 0")
        if self.washout is None:
            # capacity budget: 200 washout, then 1400 train / 600 test of 2200
            self.washout = 200 if self.task == "memory_capacity" else 100
        if self.n <= self.washout + 10:
            raise ConfigError("n must exceed washout by more than 10 samples")
        if self.low is None:
            self.low = -0.8 if self.task == "memory_capacity" else 0.0
        if self.high is None:
            self.high = 0.8 if self.task == "memory_capacity" else 0.5
        try:
            self.readout_spec()
            ScrConfig(n_nodes=self.n_nodes, network_size_range=(self.network_size_min, self.network_size_max),
                      k_degree=self.k_degree, dt=self.dt, substeps=self.substeps, drive_clip=self.drive_clip)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def cells(self) -> list[tuple[float, float]]:
        return [(v, lam) for v in self.v for lam in self.lambda_]

    def readout_spec(self) -> TrainSpec:
        return TrainSpec(self.ridge, self.washout, self.train_fraction)

    def solve_settings(self) -> SolveSettings:
        return SolveSettings(max_fixed_point_iters=self.max_iters, voltage_tolerance=self.voltage_tolerance)

    def config_hash(self) -> str:
        return hashlib.sha256(self.source_text.encode()).hexdigest()[:16]

    def single_cell(self) -> "ExperimentConfig":
        """Copy whose grids collapse to the scalar ``input_coeff`` and ``spectral_radius``."""
        return dataclasses.replace(self, v=(self.input_coeff,), lambda_=(self.spectral_radius,))


def _grid(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    kw = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            kind = _SCHEMA[section].get(key)
            if kind is None:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                value = _grid(raw) if kind == "grid" else kind(raw.strip())
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r} in [{section}]: {raw!r}") from exc
            kw["lambda_" if key == "lambda" else key] = value
    if "device_params" in kw:
        path = Path(kw["device_params"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        try:
            kw["params"] = load_params(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"device_params: {exc}") from exc
    try:
        return ExperimentConfig(**kw, source_text=text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, path.parent)


# -- trials ---------------------------------------------------------------------

_STREAM_RESERVOIR, _STREAM_DATA = 0, 1


def _build(cfg: ExperimentConfig, v: float, lam: float, seed: int):
    if cfg.architecture == "sigmoid-scr":
        return build_sigmoid_scr(cfg.n_nodes, v, lam, seed)
    if cfg.architecture == "single-network":
        return build_single_network_reservoir(
            cfg.n_circuit_nodes, cfg.n_readout_pairs, cfg.k_degree, cfg.dt, cfg.substeps, seed,
            input_coeff=v, drive_clip=cfg.drive_clip, input_offset=cfg.input_offset,
            params=cfg.params, solver=cfg.solve_settings())
    return build_scr(ScrConfig(
        n_nodes=cfg.n_nodes, input_coeff=v, spectral_radius=lam,
        network_size_range=(cfg.network_size_min, cfg.network_size_max), k_degree=cfg.k_degree,
        dt=cfg.dt, substeps=cfg.substeps, seed=seed, drive_clip=cfg.drive_clip,
        input_offset=cfg.input_offset, params=cfg.params, solver=cfg.solve_settings()))


def _task_data(cfg: ExperimentConfig, cell: int, trial: int):
    """Input array, {metric: target} and regeneration count for one trial."""
    if cfg.task == "narma10":
        for attempt in range(MAX_REGENERATIONS + 1):
            try:
                t = narma10_task(cfg.n, child_seed(cfg.seed, cell, trial, _STREAM_DATA, attempt), cfg.dt)
                return t.input.samples, {"nrmse": t.target.samples}, attempt
            except NarmaDivergenceError:
                continue
        raise RuntimeError(f"NARMA-10 diverged on {MAX_REGENERATIONS + 1} consecutive inputs")
    if cfg.task == "memory_capacity":
        u = uniform_series(cfg.low, cfg.high, cfg.n, child_seed(cfg.seed, cell, trial, _STREAM_DATA), cfg.dt)
        return u.samples, {}, 0
    if cfg.task == "mso":
        t = mso_task(cfg.dt, cfg.n, cfg.horizon)
        return t.input.samples, {"nrmse": t.target.samples}, 0
    makers = {"sine": hhg_sine_task, "triangle": hhg_triangle_task, "square": hhg_square_task}
    names = list(makers) if cfg.task == "hhg" else [cfg.task.split("_", 1)[1]]
    targets = {n: makers[n](cfg.frequency, cfg.dt, cfg.n).target.samples for n in names}
    return hhg_sine_task(cfg.frequency, cfg.dt, cfg.n).input.samples, targets, 0


def metric_names(cfg: ExperimentConfig) -> list[str]:
    if cfg.task == "memory_capacity":
        return ["capacity"]
    if cfg.task in ("narma10", "mso"):
        return ["nrmse", "mse"]
    if cfg.task == "hhg":
        return ["sine", "triangle", "square", "combined"]
    return ["mse"]


def run_trial(cfg: ExperimentConfig, cell: int, trial: int) -> dict:
    """Build, drive, train and score one trial; returns a flat record."""
    v, lam = cfg.cells[cell]
    seed = child_seed(cfg.seed, cell, trial, _STREAM_RESERVOIR)
    u, targets, regenerations = _task_data(cfg, cell, trial)
    reservoir = _build(cfg, v, lam, seed)
    states = reservoir.run(u)
    spec = cfg.readout_spec()
    metrics = {}
    if cfg.task == "memory_capacity":
        metrics["capacity"] = memory_capacity(states, u, spec, cfg.max_delay).total
    elif cfg.task in ("narma10", "mso"):
        y = targets["nrmse"]
        metrics["nrmse"] = fit_evaluate(states, y, spec, nrmse)[0]
        metrics["mse"] = fit_evaluate(states, y, spec, mse)[0]
    else:
        for name, y in targets.items():
            metrics[name if cfg.task == "hhg" else "mse"] = fit_evaluate(states, y, spec, mse)[0]
        if cfg.task == "hhg":
            metrics["combined"] = math.fsum(metrics[k] for k in ("sine", "triangle", "square"))
    health = reservoir.health()
    return {"cell": cell, "trial": trial, "v": v, "lambda": lam, "seed": seed, **metrics,
            "solves": health["solves"], "unconverged": health["unconverged"],
            "clip_events": health["clip_events"], "regenerations": regenerations}


# -- reports ------------------------------------------------------------------

@dataclass
class CellResult:
    v: float
    lambda_: float
    mean: dict
    std: dict
    tainted: bool
    unconverged_fraction: float
    clip_events: int


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    metrics: list[str]
    rows: list[dict]
    cells: list[CellResult]

    @property
    def provenance(self) -> dict:
        return {"config_sha256": self.config.config_hash(), "seed": self.config.seed,
                "memrc": __version__, "numpy": np.__version__, "scipy": scipy.__version__}

    def best_cell(self, metric: str | None = None) -> CellResult:
        metric = metric or self.metrics[0]
        key = (lambda c: -c.mean[metric]) if metric == "capacity" else (lambda c: c.mean[metric])
        return min(self.cells, key=key)

    def table(self, metric: str | None = None) -> np.ndarray:
        """Cell means as a |v| x |lambda| array."""
        metric = metric or self.metrics[0]
        cfg = self.config
        return np.array([c.mean[metric] for c in self.cells]).reshape(len(cfg.v), len(cfg.lambda_))


def _mean(xs):
    return math.fsum(xs) / len(xs)


def _std(xs):
    if len(xs) < 2:
        return 0.0
    m = _mean(xs)
    return math.sqrt(math.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1))


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("MEMRC_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    return threads


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    """All (cell, trial) pairs, run concurrently up to ``threads``, aggregated in index order."""
    jobs = [(c, t) for c in range(len(config.cells)) for t in range(config.trials)]
    n = resolve_threads(threads)
    if n == 1:
        rows = [run_trial(config, c, t) for c, t in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(lambda job: run_trial(config, *job), jobs))
    names = metric_names(config)
    cells = []
    for c, (v, lam) in enumerate(config.cells):
        mine = [r for r in rows if r["cell"] == c]
        solves = sum(r["solves"] for r in mine)
        unconv = sum(r["unconverged"] for r in mine)
        frac = unconv / solves if solves else 0.0
        cells.append(CellResult(
            v, lam,
            {m: _mean([r[m] for r in mine]) for m in names},
            {m: _std([r[m] for r in mine]) for m in names},
            frac > TAINT_FRACTION, frac, sum(r["clip_events"] for r in mine)))
    return ExperimentReport(config, names, rows, cells)


def _provenance_line(prov: dict) -> str:
    return "# " + " ".join(f"{k}={v}" for k, v in prov.items()) + "\n"


def _csv_text(header, rows, prov) -> str:
    buf = io.StringIO()
    buf.write(_provenance_line(prov))
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_report(report: ExperimentReport, out_dir) -> tuple[Path, Path]:
    """Write ``metrics.csv`` (one row per trial) and ``heatmap.csv`` (one row per cell and metric)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prov = report.provenance
    cols = ["cell", "trial", "v", "lambda", "seed", *report.metrics, "solves", "unconverged",
            "clip_events", "regenerations"]
    metrics_path, heat_path = out / "metrics.csv", out / "heatmap.csv"
    metrics_path.write_text(_csv_text(cols, [[_fmt(r[c]) for c in cols] for r in report.rows], prov), newline="")
    heat_rows = [[_fmt(c.v), _fmt(c.lambda_), m, _fmt(c.mean[m]), _fmt(c.std[m]), int(c.tainted),
                  _fmt(c.unconverged_fraction), c.clip_events]
                 for c in report.cells for m in report.metrics]
    heat_path.write_text(_csv_text(["v", "lambda", "metric", "mean", "stdev", "tainted", "unconverged_fraction",
                                    "clip_events"], heat_rows, prov), newline="")
    return metrics_path, heat_path


# -- spectra ------------------------------------------------------------------

def psd(series: TimeSeries, nperseg: int = 256) -> np.ndarray:
    """Welch PSD (Hann, 50 % overlap) as rows ``(freq_hz, power)``.

    Series shorter than one segment get a single Hann periodogram.
    """
    x = np.asarray(series.samples, dtype=float)
    if len(x) < 64:
        raise ValueError("psd needs at least 64 samples")
    fs = 1.0 / series.dt
    if len(x) < nperseg:
        f, p = scipy.signal.periodogram(x, fs=fs, window="hann")
    else:
        f, p = scipy.signal.welch(x, fs=fs, window="hann", nperseg=nperseg, noverlap=nperseg // 2)
    return np.column_stack([f, p])


def write_psd(table: np.ndarray, path, prov: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_csv_text(["freq_hz", "power"], [[_fmt(f), _fmt(p)] for f, p in table], prov), newline="")
    return path


# -- architecture comparison ------------------------------------------------------

def compare_architectures(task: str, readout_signal_counts: Sequence[int], config: ExperimentConfig,
                          threads: int | None = None) -> list[dict]:
    """Single network with k readout pairs against an SCR with k nodes, per k.

    Every k and both architectures share the root seed, so the single
    network is the same device graph with nested readout pairs and the
    k-node SCR extends the smaller ones. For every task
    metric the best ``v`` of ``config.v`` is taken on trial means; the
    combined score is the sum of those per-task bests. ``best_v_combined``
    is the alternative where one ``v`` serves all tasks.
    """
    if task != "hhg":
        raise ConfigError("compare_architectures supports the combined 'hhg' task")
    lam = config.lambda_[0]
    rows = []
    for k in readout_signal_counts:
        for arch in ("single-network", "scr"):
            cfg = dataclasses.replace(config, task="hhg", architecture=arch, lambda_=(lam,),
                                      n_nodes=k, n_readout_pairs=k)
            per_v = run_experiment(cfg, threads)
            by_task = {}
            for name in ("sine", "triangle", "square"):
                best = min(per_v.cells, key=lambda c: c.mean[name])
                by_task[name] = (best.mean[name], best.std[name], best.v)
            best_all = per_v.best_cell("combined")
            rows.append({
                "k": k, "architecture": arch,
                "combined": math.fsum(m for m, _, _ in by_task.values()),
                **{f"{n}_mse": m for n, (m, _, _) in by_task.items()},
                **{f"{n}_std": s for n, (_, s, _) in by_task.items()},
                **{f"{n}_v": v for n, (_, _, v) in by_task.items()},
                "best_v_combined": best_all.mean["combined"], "best_v": best_all.v,
                "trials": [r["combined"] for r in per_v.rows],
            })
    return rows
