"""Single memristive device: static I-V response and internal-state dynamics.

The current through a device with internal state ``w`` at bias ``v`` is a
convex combination of a rectifying OFF branch and a symmetric ON branch::

    I = (1 - w) * sigma * (1 - exp(-beta * v)) + w * gamma * sinh(delta * v)

and the state obeys::

    dw/dt = lambda_rate * sinh(eta * v) - w / tau

All functions accept scalars or numpy arrays (broadcasting), so the circuit
solver can evaluate every device of many networks in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "DeviceParams",
    "DeviceState",
    "current",
    "state_derivative",
    "step_device",
    "small_signal_conductance",
    "integrate_state",
    "load_params",
    "dump_params",
    "default_params",
]

PARAM_NAMES = ("sigma", "beta", "gamma", "delta", "lambda_rate", "eta", "tau")


@dataclass(frozen=True)
class DeviceParams:
    """Constants of the device model, SI units."""

    sigma: float
    beta: float
    gamma: float
    delta: float
    lambda_rate: float
    eta: float
    tau: float

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not math.isfinite(val) or val <= 0:
                raise ValueError(f"device parameter {f.name} must be finite and > 0, got {val!r}")


@dataclass(frozen=True)
class DeviceState:
    w: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"device state w must lie in [0, 1], got {self.w!r}")


def _check_finite(**arrays):
    for name, a in arrays.items():
        if not np.all(np.isfinite(a)):
            raise ValueError(f"{name} must be finite")


def current(params: DeviceParams, w, v):
    """Device current in amperes."""
    _check_finite(w=w, v=v)
    off = params.sigma * -np.expm1(-params.beta * np.asarray(v, dtype=float))
    on = params.gamma * np.sinh(params.delta * np.asarray(v, dtype=float))
    out = (1.0 - w) * off + w * on
    return float(out) if np.ndim(out) == 0 else out


def state_derivative(params: DeviceParams, w, v):
    """Rate of change of the internal state, 1/s."""
    _check_finite(w=w, v=v)
    out = params.lambda_rate * np.sinh(params.eta * np.asarray(v, dtype=float)) - np.asarray(w) / params.tau
    return float(out) if np.ndim(out) == 0 else out


def small_signal_conductance(params: DeviceParams, w):
    """dI/dv at zero bias; linear in ``w`` between sigma*beta and gamma*delta."""
    out = (1.0 - np.asarray(w, dtype=float)) * params.sigma * params.beta + np.asarray(w) * params.gamma * params.delta
    return float(out) if np.ndim(out) == 0 else out


def _euler(params, w, v, dt):
    # Unchecked hot path shared with the circuit module.
    rate = params.lambda_rate * np.sinh(params.eta * v) - w / params.tau
    return np.clip(w + dt * rate, 0.0, 1.0)


def step_device(params: DeviceParams, state: DeviceState, v: float, dt: float) -> DeviceState:
    """One explicit-Euler step of the state equation followed by clamping to [0, 1]."""
    if not dt >= 0:
        raise ValueError(f"dt must be >= 0, got {dt!r}")
    _check_finite(v=v, dt=dt)
    if dt == 0:
        return state
    return DeviceState(float(_euler(params, state.w, float(v), dt)))


def integrate_state(params: DeviceParams, w0, voltages, dt: float):
    """Euler-integrate the state under a sampled voltage waveform.

    Returns the state trajectory, one entry per voltage sample (state after
    that sample has been applied for ``dt``).
    """
    if dt < 0:
        raise ValueError("dt must be >= 0")
    voltages = np.asarray(voltages, dtype=float)
    _check_finite(voltages=voltages)
    w = np.asarray(w0, dtype=float).copy()
    out = np.empty(voltages.shape + w.shape)
    for i, v in enumerate(voltages):
        w = _euler(params, w, v, dt)
        out[i] = w
    return out


def load_params(path) -> DeviceParams:
    """Read a ``name = value`` parameter file. ``#`` starts a comment."""
    values = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'name = value'")
        name, value = (s.strip() for s in line.split("=", 1))
        if name not in PARAM_NAMES:
            raise ValueError(f"{path}:{lineno}: unknown device parameter {name!r}")
        if name in values:
            raise ValueError(f"{path}:{lineno}: duplicate device parameter {name!r}")
        values[name] = float(value)
    missing = [n for n in PARAM_NAMES if n not in values]
    if missing:
        raise ValueError(f"{path}: missing device parameters {missing}")
    return DeviceParams(**values)


def dump_params(params: DeviceParams, path) -> None:
    lines = [f"{name} = {getattr(params, name)!r}" for name in PARAM_NAMES]
    Path(path).write_text("\n".join(lines) + "\n")


def default_params() -> DeviceParams:
    """The shipped parameter set (see ``data/default_device.params``)."""
    with resources.as_file(resources.files("memrc") / "data" / "default_device.params") as p:
        return load_params(p)
