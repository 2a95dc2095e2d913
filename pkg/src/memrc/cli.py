"""Command-line entry point: ``memrc {run,sweep,psd,device-calibrate,validate}``.

Exit status is 0 on success, 1 for configuration errors and 2 for runtime failures.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import sys
from pathlib import Path

import numpy as np

from .circuit import SolverError
from .device import integrate_state, load_params, current
from .harness import ConfigError, load_config, psd, resolve_threads, run_experiment, write_psd, write_report
from .tasks import read_series_csv

CALIBRATION_AMPLITUDES = (0.25, 0.5, 0.75, 1.0, 1.1, 1.2, 1.3, 1.5, 2.0)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="memrc", description="Hierarchical memristive reservoir experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def overrides(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--out-dir")
        sp.add_argument("--threads", type=int, help="worker threads (default: $MEMRC_THREADS or 1)")

    for name, text in (("run", "one cell at the config's input_coeff and spectral_radius"),
                       ("sweep", "every (v, lambda) cell of the [sweep] grids")):
        sp = sub.add_parser(name, help=f"run {text}")
        sp.add_argument("config")
        overrides(sp)
    sp = sub.add_parser("validate", help="parse and check a config file")
    sp.add_argument("config")
    sp = sub.add_parser("psd", help="Welch power spectrum of a t,value CSV")
    sp.add_argument("csv_in")
    sp.add_argument("csv_out")
    sp = sub.add_parser("device-calibrate", help="sine amplitude sweep of one device")
    sp.add_argument("params_file")
    sp.add_argument("--frequency", type=float, default=10.0)
    sp.add_argument("--out-dir", default=".")
    return p


def _experiment(args, sweep: bool) -> int:
    cfg = load_config(args.config)
    changes = {k: v for k, v in (("seed", args.seed), ("trials", args.trials), ("out_dir", args.out_dir))
               if v is not None}
    if changes:
        try:
            cfg = dataclasses.replace(cfg, **changes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if not sweep:
        cfg = cfg.single_cell()
    threads = resolve_threads(args.threads)
    report = run_experiment(cfg, threads)
    metrics_path, heat_path = write_report(report, cfg.out_dir)
    best = report.best_cell()
    m = report.metrics[0]
    print(f"{cfg.task}/{cfg.architecture}: {len(report.cells)} cells x {cfg.trials} trials")
    print(f"best {m} = {best.mean[m]:.6g} (sd {best.std[m]:.3g}) at v={best.v:g} lambda={best.lambda_:g}")
    tainted = sum(c.tainted for c in report.cells)
    if tainted:
        print(f"warning: {tainted} cell(s) tainted by unconverged solves", file=sys.stderr)
    print(f"wrote {metrics_path} and {heat_path}")
    return 0


def _psd(args) -> int:
    series = read_series_csv(args.csv_in)
    digest = hashlib.sha256(Path(args.csv_in).read_bytes()).hexdigest()[:16]
    out = write_psd(psd(series), args.csv_out, {"input_sha256": digest, "seed": "none"})
    print(f"wrote {out}")
    return 0


def _calibrate(args) -> int:
    params = load_params(args.params_file)
    f = args.frequency
    dt = min(1e-5, 1 / (f * 2000))
    t = np.arange(0, 3 / f, dt)
    last = t >= 2 / f
    rows, summary = [], []
    for amp in CALIBRATION_AMPLITUDES:
        v = amp * np.sin(2 * np.pi * f * t)
        w = integrate_state(params, 0.0, v, dt)
        # current flows at the state held during each sample
        i = current(params, np.concatenate([[0.0], w[:-1]]), v)
        summary.append((amp, w[last].max() - w[last].min()))
        stride = max(1, int(last.sum() // 500))
        idx = np.flatnonzero(last)[::stride]
        rows += [(amp, t[j], v[j], i[j], w[j]) for j in idx]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = hashlib.sha256(Path(args.params_file).read_bytes()).hexdigest()[:16]
    path = out / "device_calibration.csv"
    with path.open("w", newline="") as fh:
        fh.write(f"# params_sha256={digest} seed=none frequency_hz={f!r}\n")
        fh.write("amplitude_v,t_s,voltage_v,current_a,state_w\r\n")
        for r in rows:
            fh.write(",".join(repr(float(x)) for x in r) + "\r\n")
    print("amplitude_v  state_excursion")
    for amp, exc in summary:
        print(f"{amp:11.3g}  {exc:.4g}")
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            print(f"ok: task={cfg.task} architecture={cfg.architecture} cells={len(cfg.cells)} trials={cfg.trials}")
            return 0
        if args.command in ("run", "sweep"):
            return _experiment(args, args.command == "sweep")
        if args.command == "psd":
            return _psd(args)
        return _calibrate(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, RuntimeError, OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
