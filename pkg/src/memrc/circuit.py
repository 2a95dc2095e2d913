"""Random memristive networks and their quasi-static circuit solution.

A network is a random graph whose edges are memristive devices. Each timestep
the network is treated as a stationary (nonlinear) resistive circuit driven by
a single ideal voltage source between ``input_node`` and ``ground_node``. The
operating point is found by secant-conductance fixed-point iteration: every
device is replaced by ``G = I(v) / v`` at its previous branch voltage, the
linear nodal system is solved, and the loop repeats until the node voltages
stop moving. Device states are then advanced with the converged branch
voltages.

All numerical work happens in :class:`NetworkBatch`, which stacks several
networks (padded to a common size) so that one batched dense solve handles a
whole reservoir per iteration.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .device import DeviceParams, DeviceState, _euler, current, small_signal_conductance

__all__ = [
    "GenerationError",
    "SolverError",
    "NetworkTopology",
    "MemristiveNetwork",
    "SolveSettings",
    "SolveResult",
    "NetworkBatch",
    "generate_topology",
    "solve_dc",
    "step_network",
    "network_impedance_signature",
    "is_degenerate",
    "kcl_residual",
    "source_current",
    "dump_topology",
    "load_topology",
    "format_topology",
    "parse_topology",
]

log = logging.getLogger(__name__)

# Below this branch voltage the secant conductance I/v is replaced by dI/dv(0).
SECANT_EPS = 1e-9
MAX_GENERATION_ATTEMPTS = 1000


class GenerationError(RuntimeError):
    pass


class SolverError(RuntimeError):
    pass


@dataclass
class NetworkTopology:
    """Device graph plus terminal assignment.

    ``edges[i] = (a, b)`` is device ``i``; its current flows from ``a`` to
    ``b`` for positive ``v_a - v_b``.
    """

    node_count: int
    edges: np.ndarray
    input_node: int
    ground_node: int
    readout_pairs: np.ndarray
    allow_multi_edges: bool = False

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.readout_pairs = np.asarray(self.readout_pairs, dtype=np.int64).reshape(-1, 2)
        n = self.node_count
        if n < 2:
            raise ValueError("a network needs at least two nodes")
        for name, arr in (("edges", self.edges), ("readout_pairs", self.readout_pairs)):
            if arr.size and (arr.min() < 0 or arr.max() >= n):
                raise ValueError(f"{name} reference nodes outside [0, {n})")
        if np.any(self.edges[:, 0] == self.edges[:, 1]):
            raise ValueError("self-loop edge")
        if np.any(self.readout_pairs[:, 0] == self.readout_pairs[:, 1]):
            raise ValueError("readout pair must join two distinct nodes")
        if not (0 <= self.input_node < n and 0 <= self.ground_node < n):
            raise ValueError("input/ground node out of range")
        if self.input_node == self.ground_node:
            raise ValueError("input node and ground node must differ")
        if not self.allow_multi_edges:
            key = np.sort(self.edges, axis=1)
            if len(np.unique(key, axis=0)) != len(key):
                raise ValueError("duplicate edge (set allow_multi_edges to permit)")

    @property
    def n_devices(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.node_count)

    def components(self) -> np.ndarray:
        n = self.node_count
        adj = coo_matrix((np.ones(len(self.edges)), (self.edges[:, 0], self.edges[:, 1])), shape=(n, n))
        return connected_components(adj, directed=False)[1]

    def is_connected(self) -> bool:
        return len(np.unique(self.components())) == 1


def _random_multidegree_graph(degrees, rng):
    # Sequential stub matching: pick a stub, pair it with a uniformly random
    # admissible stub (no self-loop, no repeated pair). None on dead end.
    stubs = np.repeat(np.arange(len(degrees)), degrees).tolist()
    rng.shuffle(stubs)
    seen = set()
    edges = []
    while stubs:
        a = stubs.pop()
        ok = [i for i, b in enumerate(stubs) if b != a and (min(a, b), max(a, b)) not in seen]
        if not ok:
            return None
        b = stubs.pop(ok[int(rng.integers(len(ok)))])
        seen.add((min(a, b), max(a, b)))
        edges.append((a, b))
    return edges


def generate_topology(n_nodes: int, k_degree: int, n_readout_pairs: int, rng_seed: int) -> NetworkTopology:
    """Random connected network where every node joins ``k_degree`` devices.

    When ``n_nodes * k_degree`` is odd one random node carries an extra device
    so the edge count is ``ceil(n_nodes * k_degree / 2)``.
    """
    if n_nodes < 3:
        raise ValueError("n_nodes must be >= 3")
    if not 1 <= k_degree < n_nodes:
        raise ValueError("k_degree must satisfy 1 <= k_degree < n_nodes")
    if n_readout_pairs < 1:
        raise ValueError("n_readout_pairs must be >= 1")
    rng = np.random.default_rng(rng_seed)
    for _ in range(MAX_GENERATION_ATTEMPTS):
        degrees = np.full(n_nodes, k_degree)
        if (n_nodes * k_degree) % 2:
            degrees[rng.integers(n_nodes)] += 1
        edges = _random_multidegree_graph(degrees, rng)
        if edges is None:
            continue
        if not NetworkTopology(n_nodes, edges, 0, 1, np.empty((0, 2))).is_connected():
            continue
        input_node, ground_node = (int(x) for x in rng.choice(n_nodes, size=2, replace=False))
        pairs = _choose_readout_pairs(n_nodes, input_node, ground_node, n_readout_pairs, rng)
        return NetworkTopology(n_nodes, edges, input_node, ground_node, pairs)
    raise GenerationError(
        f"no connected {k_degree}-regular graph on {n_nodes} nodes within {MAX_GENERATION_ATTEMPTS} attempts"
    )


def _choose_readout_pairs(n_nodes, input_node, ground_node, n_pairs, rng):
    candidates = [i for i in range(n_nodes) if i not in (input_node, ground_node)]
    if len(candidates) * (len(candidates) - 1) // 2 < n_pairs:
        candidates = sorted(candidates + [input_node])
    combos = list(itertools.combinations(candidates, 2))
    if len(combos) < n_pairs:
        raise ValueError(f"cannot place {n_pairs} distinct readout pairs on {n_nodes} nodes")
    # prefixes of one permutation, so fewer pairs are a subset of more pairs
    picked = rng.permutation(len(combos))[:n_pairs]
    # random orientation: the differential sign is part of the node's transfer function
    flip = rng.random(n_pairs) < 0.5
    return [(q, p) if f else (p, q) for (p, q), f in zip((combos[i] for i in picked), flip)]


@dataclass(frozen=True)
class SolveSettings:
    """Operating-point solver controls.

    ``method`` is ``"newton"`` (default) or ``"secant"`` (the G = I/v
    fixed-point loop, which stalls at large drives on the exponential
    branch). ``min_conductance`` floors every device conductance and is also
    a leak from every free node to ground.
    """

    max_fixed_point_iters: int = 50
    voltage_tolerance: float = 1e-6
    min_conductance: float = 1e-12
    method: str = "newton"

    def __post_init__(self):
        if self.method not in ("newton", "secant"):
            raise ValueError(f"unknown solver method {self.method!r}")
        if self.max_fixed_point_iters < 1:
            raise ValueError("max_fixed_point_iters must be >= 1")
        if not self.voltage_tolerance > 0:
            raise ValueError("voltage_tolerance must be > 0")
        if not self.min_conductance > 0:
            raise ValueError("min_conductance must be > 0")


@dataclass
class MemristiveNetwork:
    """A topology with per-device states and the cached operating point.

    ``linear=True`` freezes every device at its small-signal conductance,
    turning the network into a plain resistor network.
    """

    topology: NetworkTopology
    params: DeviceParams
    w: np.ndarray = None
    last_voltages: np.ndarray = None
    linear: bool = False

    def __post_init__(self):
        m = self.topology.n_devices
        self.w = np.zeros(m) if self.w is None else np.asarray(self.w, dtype=float)
        if self.w.shape != (m,):
            raise ValueError("need exactly one state per device")
        if np.any((self.w < 0) | (self.w > 1)):
            raise ValueError("device states must lie in [0, 1]")
        n = self.topology.node_count
        if self.last_voltages is None:
            self.last_voltages = np.zeros(n)
        self.last_voltages = np.asarray(self.last_voltages, dtype=float)
        if self.last_voltages.shape != (n,):
            raise ValueError("last_voltages must have one entry per node")

    @property
    def device_states(self) -> list[DeviceState]:
        return [DeviceState(float(x)) for x in self.w]

    def branch_voltages(self, voltages=None) -> np.ndarray:
        v = self.last_voltages if voltages is None else voltages
        e = self.topology.edges
        return v[e[:, 0]] - v[e[:, 1]]

    def readouts(self, voltages=None) -> np.ndarray:
        v = self.last_voltages if voltages is None else voltages
        rp = self.topology.readout_pairs
        return v[rp[:, 0]] - v[rp[:, 1]]


class SolveResult(NamedTuple):
    voltages: np.ndarray
    converged: bool
    iterations: int


class NetworkBatch:
    """Several networks solved and stepped together.

    The batch takes over the storage of each network's ``w`` and
    ``last_voltages``: afterwards those attributes are views into the batch
    arrays, so stepping the batch updates the networks in place. All networks
    must share one ``DeviceParams`` and one ``linear`` flag.
    """

    def __init__(self, networks: Sequence[MemristiveNetwork], settings: SolveSettings = SolveSettings()):
        if not networks:
            raise ValueError("empty batch")
        self.networks = list(networks)
        self.settings = settings
        self.params = networks[0].params
        self.linear = networks[0].linear
        if any(net.params != self.params or net.linear != self.linear for net in networks):
            raise ValueError("all networks in a batch must share params and linear flag")

        topos = [net.topology for net in networks]
        B = len(topos)
        nmax = max(t.node_count for t in topos)
        m = nmax - 1
        self.B, self.nmax, self.m = B, nmax, m

        n_dev = np.array([t.n_devices for t in topos])
        self.dev_offsets = np.concatenate([[0], np.cumsum(n_dev)])
        self.w = np.concatenate([net.w for net in networks]).astype(float)
        self.V = np.zeros((B, nmax))
        for k, net in enumerate(networks):
            self.V[k, : topos[k].node_count] = net.last_voltages
            net.w = self.w[self.dev_offsets[k] : self.dev_offsets[k + 1]]
            net.last_voltages = self.V[k, : topos[k].node_count]
        self.Vflat = self.V.reshape(-1)

        # flat node indices (into V) of each device terminal
        net_of_dev = np.repeat(np.arange(B), n_dev)
        edges = np.concatenate([t.edges for t in topos])
        self.net_of_dev = net_of_dev
        self.ea = net_of_dev * nmax + edges[:, 0]
        self.eb = net_of_dev * nmax + edges[:, 1]

        # reduced index: ground removed, padding rows past node_count - 1
        red = np.full((B, nmax), -1)
        for k, t in enumerate(topos):
            nodes = np.arange(t.node_count)
            r = np.where(nodes < t.ground_node, nodes, nodes - 1)
            r[t.ground_node] = -1
            red[k, : t.node_count] = r
        self.red = red
        self.input_row = np.array([red[k, t.input_node] for k, t in enumerate(topos)])
        ra = red.reshape(-1)[self.ea]
        rb = red.reshape(-1)[self.eb]

        # matrix stamps, skipping ground rows/cols and the substituted source row
        rows, cols, devs, signs = [], [], [], []
        inrow = self.input_row[net_of_dev]
        for r_, c_, s in ((ra, ra, 1.0), (rb, rb, 1.0), (ra, rb, -1.0), (rb, ra, -1.0)):
            keep = (r_ >= 0) & (c_ >= 0) & (r_ != inrow)
            rows.append(r_[keep])
            cols.append(c_[keep])
            devs.append(np.nonzero(keep)[0])
            signs.append(np.full(keep.sum(), s))
        rows, cols = np.concatenate(rows), np.concatenate(cols)
        self.stamp_dev = np.concatenate(devs)
        self.stamp_sign = np.concatenate(signs)
        self.stamp_idx = net_of_dev[self.stamp_dev] * m * m + rows * m + cols

        # node-to-ground leak (gmin) on every free row; identity on source and padding rows
        const = np.zeros((B, m, m))
        diag = np.arange(m)
        for k, t in enumerate(topos):
            free = np.zeros(m, bool)
            free[: t.node_count - 1] = True
            free[self.input_row[k]] = False
            const[k, diag, diag] = np.where(free, settings.min_conductance, 1.0)
        self.const = const.reshape(-1)

        # reduced row -> flat node index in V, for scattering the solution back
        self.scatter_src = []
        self.scatter_dst = []
        for k, t in enumerate(topos):
            for node in range(t.node_count):
                if node != t.ground_node:
                    self.scatter_src.append(k * m + red[k, node])
                    self.scatter_dst.append(k * nmax + node)
        self.scatter_src = np.array(self.scatter_src)
        self.scatter_dst = np.array(self.scatter_dst)

        self.n_readouts = np.array([len(t.readout_pairs) for t in topos])
        rp = np.concatenate([t.readout_pairs for t in topos])
        net_of_ro = np.repeat(np.arange(B), self.n_readouts)
        self.rp = net_of_ro * nmax + rp[:, 0]
        self.rq = net_of_ro * nmax + rp[:, 1]
        self.input_flat = np.array([k * nmax + t.input_node for k, t in enumerate(topos)])
        self.fixed_flat = np.concatenate([self.input_flat, [k * nmax + t.ground_node for k, t in enumerate(topos)]])

        self.n_solves = 0
        self.n_unconverged = 0

    # -- evaluation helpers -------------------------------------------------
    def branch_voltages(self, V=None) -> np.ndarray:
        Vf = self.Vflat if V is None else V.reshape(-1)
        return Vf[self.ea] - Vf[self.eb]

    def readouts(self, V=None) -> np.ndarray:
        Vf = self.Vflat if V is None else V.reshape(-1)
        return Vf[self.rp] - Vf[self.rq]

    def small_signal_conductances(self) -> np.ndarray:
        p, w = self.params, self.w
        return (1.0 - w) * p.sigma * p.beta + w * p.gamma * p.delta

    def conductances(self, vb) -> np.ndarray:
        """Secant conductances I(v)/v; the frozen small-signal value for linear networks."""
        p = self.params
        w = self.w
        g0 = self.small_signal_conductances()
        if self.linear:
            return g0
        big = np.abs(vb) >= SECANT_EPS
        vs = np.where(big, vb, 1.0)
        i = (1.0 - w) * p.sigma * -np.expm1(-p.beta * vs) + w * p.gamma * np.sinh(p.delta * vs)
        g = np.where(big, i / vs, g0)
        return np.maximum(g, self.settings.min_conductance)

    def device_currents(self, V=None) -> np.ndarray:
        vb = self.branch_voltages(V)
        if self.linear:
            return self.conductances(vb) * vb
        p, w = self.params, self.w
        return (1.0 - w) * p.sigma * -np.expm1(-p.beta * vb) + w * p.gamma * np.sinh(p.delta * vb)

    # -- solve / step -------------------------------------------------------
    def _assemble(self, g) -> np.ndarray:
        A = np.bincount(self.stamp_idx, weights=g[self.stamp_dev] * self.stamp_sign, minlength=self.B * self.m * self.m)
        A = A + self.const  # bincount of no stamps is an int array
        return A.reshape(self.B, self.m, self.m)

    def _linsolve(self, A, rhs) -> np.ndarray:
        try:
            x = np.linalg.solve(A, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular nodal system: {exc}") from exc
        if not np.all(np.isfinite(x)):
            raise SolverError("non-finite node voltages")
        out = np.zeros((self.B, self.nmax))
        out.reshape(-1)[self.scatter_dst] = x.reshape(-1)[self.scatter_src]
        return out

    def _residual(self, V) -> np.ndarray:
        """KCL mismatch (current leaving each node, gmin leak included), zero on fixed nodes."""
        Vf = V.reshape(-1)
        vb = Vf[self.ea] - Vf[self.eb]
        p, w = self.params, self.w
        with np.errstate(over="ignore", invalid="ignore"):
            i = (1.0 - w) * p.sigma * -np.expm1(-p.beta * vb) + w * p.gamma * np.sinh(p.delta * vb)
        size = self.B * self.nmax
        net = np.bincount(self.ea, weights=i, minlength=size) - np.bincount(self.eb, weights=i, minlength=size)
        net += self.settings.min_conductance * Vf
        net[self.fixed_flat] = 0.0
        return net.reshape(self.B, self.nmax)

    def _jacobian_conductances(self, vb) -> np.ndarray:
        p, w = self.params, self.w
        gd = (1.0 - w) * p.sigma * p.beta * np.exp(-p.beta * vb) + w * p.gamma * p.delta * np.cosh(p.delta * vb)
        return np.maximum(gd, self.settings.min_conductance)

    def solve(self, drive) -> tuple[np.ndarray, np.ndarray]:
        """Operating point for per-network source voltages ``drive``.

        Updates ``V`` in place, starting from the cached voltages. Returns
        ``(converged, iterations)`` arrays.
        """
        drive = np.broadcast_to(np.asarray(drive, dtype=float), (self.B,))
        if not np.all(np.isfinite(drive)):
            raise ValueError("drive voltages must be finite")
        st = self.settings
        if self.linear:
            rhs = np.zeros((self.B, self.m))
            rhs[np.arange(self.B), self.input_row] = drive
            self.V[...] = self._linsolve(self._assemble(self.conductances(None)), rhs)
            converged, iterations = np.ones(self.B, bool), np.ones(self.B, int)
        elif st.method == "secant":
            converged, iterations = self._solve_secant(drive)
        else:
            converged, iterations = self._solve_newton(drive)
        self.n_solves += self.B
        bad = int((~converged).sum())
        if bad:
            self.n_unconverged += bad
            log.debug("%d of %d network solves did not converge", bad, self.B)
        return converged, iterations

    def _solve_secant(self, drive):
        st = self.settings
        rhs = np.zeros((self.B, self.m))
        rhs[np.arange(self.B), self.input_row] = drive
        converged = np.zeros(self.B, bool)
        iterations = np.full(self.B, st.max_fixed_point_iters)
        V = self.V
        for it in range(1, st.max_fixed_point_iters + 1):
            newV = self._linsolve(self._assemble(self.conductances(self.branch_voltages())), rhs)
            delta = np.abs(newV - V).max(axis=1)
            V[...] = newV
            done = (delta < st.voltage_tolerance) & ~converged
            iterations[done] = it
            converged |= done
            if converged.all():
                break
        return converged, iterations

    def _energy(self, V) -> np.ndarray:
        """Co-content of each network: sum of the integrals of I dv over its devices plus the leak term.

        Its gradient with respect to the free node voltages is the KCL
        residual, and it is strictly convex because every device is monotone.
        """
        Vf = V.reshape(-1)
        vb = Vf[self.ea] - Vf[self.eb]
        p, w = self.params, self.w
        with np.errstate(over="ignore", invalid="ignore"):
            e = (1.0 - w) * p.sigma * (vb + np.expm1(-p.beta * vb) / p.beta)
            e += w * p.gamma * 2.0 * np.sinh(0.5 * p.delta * vb) ** 2 / p.delta
        out = np.bincount(self.net_of_dev, weights=e, minlength=self.B)
        return out + 0.5 * self.settings.min_conductance * (V * V).sum(axis=1)

    def _solve_newton(self, drive):
        # Damped Newton on the KCL equations, Armijo backtracking on the
        # convex co-content. Full steps are taken near the solution.
        st = self.settings
        V = self.V
        rows = np.arange(self.B)
        # Start from the lower-energy of (a) the previous operating point
        # rescaled to the new drive and (b) the small-signal linear solution.
        # Both respect the maximum principle, so no branch starts far out on
        # the exponential part of the I-V curve.
        prev = self.Vflat[self.input_flat]
        ratio = np.divide(drive, prev, out=np.zeros(self.B), where=np.abs(prev) > SECANT_EPS)
        scaled = V * ratio[:, None]
        if not np.array_equal(drive, prev):
            rhs = np.zeros((self.B, self.m))
            rhs[rows, self.input_row] = drive
            lin = self._linsolve(self._assemble(self.small_signal_conductances()), rhs)
            use_scaled = (self._energy(scaled) <= self._energy(lin)) & (np.abs(prev) > SECANT_EPS)
            V[...] = np.where(use_scaled[:, None], scaled, lin)
        self.Vflat[self.input_flat] = drive
        converged = np.zeros(self.B, bool)
        iterations = np.full(self.B, st.max_fixed_point_iters)
        r = self._residual(V)
        E = self._energy(V)
        for it in range(1, st.max_fixed_point_iters + 1):
            H = self._assemble(self._jacobian_conductances(self.branch_voltages()))
            rhs = np.zeros((self.B, self.m))
            rhs.reshape(-1)[self.scatter_src] = -r.reshape(-1)[self.scatter_dst]
            rhs[rows, self.input_row] = 0.0
            step = self._linsolve(H, rhs)
            step[converged] = 0.0
            size = np.abs(step).max(axis=1)
            slope = (r * step).sum(axis=1)  # directional derivative of the energy, <= 0
            t = np.ones(self.B)
            pending = ~converged
            for _ in range(60):
                trial = V + t[:, None] * step
                E_t = self._energy(trial)
                ok = E_t <= E + 1e-4 * t * slope + 1e-13 * np.abs(E)
                ok |= t * size < st.voltage_tolerance
                ok &= np.isfinite(E_t)
                acc = pending & ok
                if acc.any():
                    V[acc] = trial[acc]
                    E[acc] = E_t[acc]
                pending &= ~ok
                if not pending.any():
                    break
                t[pending] *= 0.5
            r = self._residual(V)
            done = (t * size < st.voltage_tolerance) & ~converged
            iterations[done] = it
            converged |= done
            if converged.all():
                break
        return converged, iterations

    def step(self, drive, dt: float) -> np.ndarray:
        """Solve, advance every device by ``dt`` and return all readouts."""
        if not dt > 0:
            raise ValueError("dt must be > 0")
        self.solve(drive)
        vb = self.branch_voltages()
        if not self.linear:
            self.w[...] = _euler(self.params, self.w, vb, dt)
        return self.readouts()

    def source_currents(self) -> np.ndarray:
        """Current delivered by each network's source at the cached operating point."""
        i = self.device_currents()
        out = np.zeros(self.B)
        at_a = self.ea == self.input_flat[self.net_of_dev]
        at_b = self.eb == self.input_flat[self.net_of_dev]
        np.add.at(out, self.net_of_dev[at_a], i[at_a])
        np.add.at(out, self.net_of_dev[at_b], -i[at_b])
        return out


def _single(network, settings):
    return NetworkBatch([network], settings)


def solve_dc(network: MemristiveNetwork, input_voltage: float, settings: SolveSettings = SolveSettings()) -> SolveResult:
    """Operating point of ``network`` with the source at ``input_voltage``.

    The result is also cached in ``network.last_voltages``. An unconverged
    solve returns the last iterate with ``converged=False``.
    """
    batch = _single(network, settings)
    conv, its = batch.solve(input_voltage)
    return SolveResult(network.last_voltages.copy(), bool(conv[0]), int(its[0]))


def step_network(network: MemristiveNetwork, input_voltage: float, dt: float,
                 settings: SolveSettings = SolveSettings()) -> np.ndarray:
    """Solve, update every device state over ``dt``, return the readout differentials."""
    return _single(network, settings).step(input_voltage, dt)


def source_current(network: MemristiveNetwork, voltages=None) -> float:
    t = network.topology
    v = network.last_voltages if voltages is None else voltages
    if network.linear:
        i = small_signal_conductance(network.params, network.w) * network.branch_voltages(v)
    else:
        i = current(network.params, network.w, network.branch_voltages(v))
    return float(i[t.edges[:, 0] == t.input_node].sum() - i[t.edges[:, 1] == t.input_node].sum())


def network_impedance_signature(network: MemristiveNetwork, probe_voltage: float,
                                settings: SolveSettings = SolveSettings()) -> float:
    """Total source current at ``probe_voltage``; device states are not advanced."""
    if probe_voltage == 0:
        raise ValueError("probe_voltage must be nonzero")
    solve_dc(network, probe_voltage, settings)
    return source_current(network)


def is_degenerate(network: MemristiveNetwork, probe_voltages=(-2.0, -1.0, -0.5, 0.5, 1.0, 2.0),
                  settings: SolveSettings = SolveSettings(), atol: float = 1e-12) -> bool:
    """True when every readout stays at zero across the probe sweep."""
    for v in probe_voltages:
        solve_dc(network, v, settings)
        if np.any(np.abs(network.readouts()) > atol):
            return False
    return True


def kcl_residual(network: MemristiveNetwork, voltages=None) -> np.ndarray:
    """Net current leaving each node, zeroed at the source and ground nodes.

    Uses the full device equation (or the frozen conductance for linear
    networks), not the linearised conductances of the last iteration.
    """
    t = network.topology
    v = network.last_voltages if voltages is None else voltages
    vb = network.branch_voltages(v)
    if network.linear:
        i = small_signal_conductance(network.params, network.w) * vb
    else:
        i = current(network.params, network.w, vb)
    net = np.zeros(t.node_count)
    np.add.at(net, t.edges[:, 0], i)
    np.add.at(net, t.edges[:, 1], -i)
    net[[t.input_node, t.ground_node]] = 0.0
    return net


# -- text format ----------------------------------------------------------

def format_topology(topo: NetworkTopology) -> str:
    lines = [f"nodes={topo.node_count} input={topo.input_node} ground={topo.ground_node}"]
    lines += [f"edge {i} {a} {b}" for i, (a, b) in enumerate(topo.edges)]
    lines += [f"readout {p} {q}" for p, q in topo.readout_pairs]
    return "\n".join(lines) + "\n"


def parse_topology(lines) -> NetworkTopology:
    """Inverse of :func:`format_topology`. Accepts a string or an iterable of lines."""
    if isinstance(lines, str):
        lines = lines.splitlines()
    header = None
    edges = {}
    pairs = []
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if tok[0].startswith("nodes="):
            kv = dict(t.split("=", 1) for t in tok)
            header = (int(kv["nodes"]), int(kv["input"]), int(kv["ground"]))
        elif tok[0] == "edge" and len(tok) == 4:
            dev, a, b = map(int, tok[1:])
            if dev in edges:
                raise ValueError(f"duplicate device id {dev}")
            edges[dev] = (a, b)
        elif tok[0] == "readout" and len(tok) == 3:
            pairs.append((int(tok[1]), int(tok[2])))
        else:
            raise ValueError(f"unrecognised topology line: {raw!r}")
    if header is None:
        raise ValueError("missing 'nodes=' header")
    if sorted(edges) != list(range(len(edges))):
        raise ValueError("device ids must be 0..n-1")
    n, inp, gnd = header
    return NetworkTopology(n, [edges[i] for i in range(len(edges))], inp, gnd, pairs)


def dump_topology(topo: NetworkTopology, path) -> None:
    Path(path).write_text(format_topology(topo))


def load_topology(path) -> NetworkTopology:
    return parse_topology(Path(path).read_text())
