"""Reservoirs built from memristive networks.

``ScrReservoir`` is a simple cycle reservoir whose N nodes are distinct random
memristive networks. Node ``i`` is driven by the single voltage

    a_i(t) = lambda * x_{i-1}(t) + s_i * v * u(t)

and its state ``x_i(t+1)`` is the differential voltage between the two readout
nodes of its network. ``SingleNetworkReservoir`` reads many differentials from
one larger network; ``SigmoidScr`` is the same ring with ``tanh`` nodes.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuit import (
    MemristiveNetwork,
    NetworkBatch,
    SolveSettings,
    format_topology,
    generate_topology,
    parse_topology,
)
from .device import DeviceParams, default_params
from .tasks import TimeSeries

__all__ = [
    "ScrConfig",
    "ScrReservoir",
    "SingleNetworkReservoir",
    "SigmoidScr",
    "build_scr",
    "build_single_network_reservoir",
    "build_sigmoid_scr",
    "scr_step",
    "sigmoid_scr_step",
    "run_reservoir",
    "dump_reservoir",
    "load_reservoir",
]


@dataclass
class ScrConfig:
    n_nodes: int = 20
    input_coeff: float = 1.0
    spectral_radius: float = 1.0
    network_size_range: tuple[int, int] = (20, 32)
    k_degree: int = 4
    dt: float = 1e-3
    substeps: int = 10
    seed: int = 0
    drive_clip: float = 16.0
    input_offset: float = 0.0
    params: DeviceParams = field(default_factory=default_params)
    solver: SolveSettings = field(default_factory=SolveSettings)

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("n_nodes must be >= 2")
        if self.input_coeff < 0 or self.spectral_radius < 0:
            raise ValueError("input_coeff and spectral_radius must be >= 0")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        lo, hi = self.network_size_range
        if not 3 <= lo <= hi:
            raise ValueError("network_size_range must satisfy 3 <= min <= max")
        if not self.dt > 0 or not self.drive_clip > 0:
            raise ValueError("dt and drive_clip must be > 0")


class _MemristiveBase:
    """Shared stepping machinery: hold a drive for ``substeps`` device updates."""

    batch: NetworkBatch
    dt: float
    substeps: int
    drive_clip: float

    def _drive_networks(self, drive):
        clipped = np.clip(drive, -self.drive_clip, self.drive_clip)
        self.clip_events += int(np.count_nonzero(clipped != drive))
        h = self.dt / self.substeps
        for _ in range(self.substeps):
            out = self.batch.step(clipped, h)
        self.steps += 1
        return out

    def health(self) -> dict:
        return {
            "steps": self.steps,
            "solves": self.batch.n_solves,
            "unconverged": self.batch.n_unconverged,
            "clip_events": self.clip_events,
        }

    @property
    def networks(self) -> list[MemristiveNetwork]:
        return self.batch.networks

    def run(self, u) -> np.ndarray:
        u = np.asarray(getattr(u, "samples", u), dtype=float)
        if u.size == 0:
            raise ValueError("empty input")
        out = np.empty((len(u), self.n_features))
        for t, ut in enumerate(u):
            out[t] = self.step(ut)
        return out


class ScrReservoir(_MemristiveBase):
    def __init__(self, networks, input_signs, ring_weight: float, input_coeff: float, *,
                 dt=1e-3, substeps=10, drive_clip=16.0, input_offset=0.0, solver=SolveSettings()):
        if any(len(n.topology.readout_pairs) != 1 for n in networks):
            raise ValueError("each SCR node network needs exactly one readout pair")
        self.input_signs = np.asarray(input_signs, dtype=float)
        if self.input_signs.shape != (len(networks),) or not np.all(np.abs(self.input_signs) == 1):
            raise ValueError("need one +/-1 input sign per node")
        self.batch = NetworkBatch(networks, solver)
        self.ring_weight = float(ring_weight)
        self.input_coeff = float(input_coeff)
        self.dt, self.substeps, self.drive_clip = dt, substeps, drive_clip
        self.input_offset = input_offset
        self.state = np.zeros(len(networks))
        self.steps = 0
        self.clip_events = 0

    @property
    def n_features(self) -> int:
        return len(self.state)

    def drive(self, u: float) -> np.ndarray:
        # np.roll(x, 1)[i] == x[i-1]: node i listens to its ring predecessor
        return self.ring_weight * np.roll(self.state, 1) + self.input_signs * (self.input_coeff * u + self.input_offset)

    def step(self, u: float) -> np.ndarray:
        self.state = self._drive_networks(self.drive(u)).copy()
        return self.state


class SingleNetworkReservoir(_MemristiveBase):
    """One network, input applied directly as ``v * u``, state = all readout differentials."""

    def __init__(self, network: MemristiveNetwork, input_coeff: float, *,
                 dt=1e-3, substeps=10, drive_clip=16.0, input_offset=0.0, solver=SolveSettings()):
        self.batch = NetworkBatch([network], solver)
        self.input_coeff = float(input_coeff)
        self.dt, self.substeps, self.drive_clip = dt, substeps, drive_clip
        self.input_offset = input_offset
        self.state = np.zeros(len(network.topology.readout_pairs))
        self.steps = 0
        self.clip_events = 0

    @property
    def n_features(self) -> int:
        return len(self.state)

    def step(self, u: float) -> np.ndarray:
        self.state = self._drive_networks(np.array([self.input_coeff * u + self.input_offset])).copy()
        return self.state


class SigmoidScr:
    def __init__(self, input_signs, ring_weight: float, input_coeff: float):
        self.input_signs = np.asarray(input_signs, dtype=float)
        if not np.all(np.abs(self.input_signs) == 1):
            raise ValueError("input signs must be +/-1")
        self.ring_weight = float(ring_weight)
        self.input_coeff = float(input_coeff)
        self.state = np.zeros(len(self.input_signs))

    @property
    def n_features(self) -> int:
        return len(self.state)

    def step(self, u: float) -> np.ndarray:
        self.state = np.tanh(self.ring_weight * np.roll(self.state, 1) + self.input_signs * self.input_coeff * u)
        return self.state

    def run(self, u) -> np.ndarray:
        u = np.asarray(getattr(u, "samples", u), dtype=float)
        if u.size == 0:
            raise ValueError("empty input")
        out = np.empty((len(u), self.n_features))
        for t, ut in enumerate(u):
            out[t] = self.step(ut)
        return out

    def health(self) -> dict:
        return {"steps": 0, "solves": 0, "unconverged": 0, "clip_events": 0}


def _signs(rng, n):
    return rng.choice(np.array([-1.0, 1.0]), size=n)


def build_scr(config: ScrConfig) -> ScrReservoir:
    """N networks with independent derived seeds, sizes uniform over ``network_size_range``.

    Node ``i`` draws its size, topology seed and input sign from the stream
    ``(seed, i)``, so growing ``n_nodes`` keeps the existing nodes.
    """
    lo, hi = config.network_size_range
    nets, signs = [], []
    for i in range(config.n_nodes):
        # one stream per node: an N-node build is a prefix of any larger build
        rng = np.random.default_rng([config.seed, i])
        size = int(rng.integers(lo, hi + 1))
        topo = generate_topology(size, config.k_degree, 1, int(rng.integers(0, 2**63)))
        nets.append(MemristiveNetwork(topo, config.params))
        signs.append(_signs(rng, 1)[0])
    return ScrReservoir(nets, signs, config.spectral_radius, config.input_coeff, dt=config.dt,
                        substeps=config.substeps, drive_clip=config.drive_clip,
                        input_offset=config.input_offset, solver=config.solver)


def build_single_network_reservoir(n_circuit_nodes: int, n_readout_pairs: int, k_degree: int = 4,
                                   dt: float = 1e-3, substeps: int = 10, seed: int = 0, *,
                                   input_coeff: float = 1.0, drive_clip: float = 16.0,
                                   input_offset: float = 0.0, params: DeviceParams | None = None,
                                   solver: SolveSettings = SolveSettings()) -> SingleNetworkReservoir:
    if n_readout_pairs < 1:
        raise ValueError("n_readout_pairs must be >= 1")
    topo = generate_topology(n_circuit_nodes, k_degree, n_readout_pairs, seed)
    net = MemristiveNetwork(topo, params or default_params())
    return SingleNetworkReservoir(net, input_coeff, dt=dt, substeps=substeps, drive_clip=drive_clip,
                                  input_offset=input_offset, solver=solver)


def build_sigmoid_scr(n_nodes: int, input_coeff: float, spectral_radius: float, seed: int = 0) -> SigmoidScr:
    rng = np.random.default_rng(seed)
    return SigmoidScr(_signs(rng, n_nodes), spectral_radius, input_coeff)


def scr_step(reservoir: ScrReservoir, u: float) -> np.ndarray:
    return reservoir.step(u)


def sigmoid_scr_step(reservoir: SigmoidScr, u: float) -> np.ndarray:
    return reservoir.step(u)


def run_reservoir(reservoir, input) -> np.ndarray:
    """State matrix, row ``t`` = state after consuming sample ``t``. Mutates the reservoir."""
    if isinstance(input, TimeSeries) and isinstance(reservoir, _MemristiveBase) and not np.isclose(input.dt, reservoir.dt):
        raise ValueError(f"input dt {input.dt} differs from reservoir dt {reservoir.dt}")
    return reservoir.run(input)


# -- snapshot ---------------------------------------------------------------

def dump_reservoir(reservoir: ScrReservoir, path) -> None:
    """Write topologies, device states, signs and the ring state as text."""
    p = reservoir.batch.params
    lines = [
        f"scr nodes={len(reservoir.state)} ring_weight={reservoir.ring_weight!r} "
        f"input_coeff={reservoir.input_coeff!r} dt={reservoir.dt!r} substeps={reservoir.substeps} "
        f"drive_clip={reservoir.drive_clip!r} input_offset={reservoir.input_offset!r}",
        "params " + " ".join(f"{f.name}={getattr(p, f.name)!r}" for f in dataclasses.fields(p)),
    ]
    for net, s in zip(reservoir.networks, reservoir.input_signs):
        lines.append(f"network sign={int(s)}")
        lines.append(format_topology(net.topology).rstrip("\n"))
        lines.append("w " + " ".join(repr(float(x)) for x in net.w))
        lines.append("v " + " ".join(repr(float(x)) for x in net.last_voltages))
        lines.append("end")
    lines.append("state " + " ".join(repr(float(x)) for x in reservoir.state))
    Path(path).write_text("\n".join(lines) + "\n")


def _kv(tokens):
    return dict(t.split("=", 1) for t in tokens)


def load_reservoir(path, solver: SolveSettings = SolveSettings()) -> ScrReservoir:
    lines = Path(path).read_text().splitlines()
    head = _kv(lines[0].split()[1:])
    params = DeviceParams(**{k: float(v) for k, v in _kv(lines[1].split()[1:]).items()})
    nets, signs, state = [], [], None
    i = 2
    while i < len(lines):
        line = lines[i]
        if line.startswith("network"):
            signs.append(float(_kv(line.split()[1:])["sign"]))
            block = []
            i += 1
            while not lines[i].startswith("w "):
                block.append(lines[i])
                i += 1
            w = np.array([float(x) for x in lines[i].split()[1:]])
            v = np.array([float(x) for x in lines[i + 1].split()[1:]])
            nets.append(MemristiveNetwork(parse_topology(block), params, w, v))
            i += 3
        elif line.startswith("state"):
            state = np.array([float(x) for x in line.split()[1:]])
            i += 1
        else:
            i += 1
    res = ScrReservoir(nets, signs, float(head["ring_weight"]), float(head["input_coeff"]),
                       dt=float(head["dt"]), substeps=int(head["substeps"]),
                       drive_clip=float(head["drive_clip"]), input_offset=float(head["input_offset"]),
                       solver=solver)
    res.state = state
    return res
