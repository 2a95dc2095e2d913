from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from memrc.circuit import (
    GenerationError,
    MemristiveNetwork,
    NetworkBatch,
    NetworkTopology,
    SolveSettings,
    format_topology,
    generate_topology,
    is_degenerate,
    kcl_residual,
    load_topology,
    dump_topology,
    network_impedance_signature,
    parse_topology,
    solve_dc,
    source_current,
    step_network,
)
from memrc.device import current, default_params, small_signal_conductance

P = default_params()


def bfs_connected(n, edges):
    adj = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    todo = deque([0])
    while todo:
        for nb in adj[todo.popleft()]:
            if nb not in seen:
                seen.add(nb)
                todo.append(nb)
    return len(seen) == n


def dense_oracle(net, vin, gmin):
    # Eliminate both fixed nodes and solve for the free ones directly.
    t = net.topology
    n = t.node_count
    g = small_signal_conductance(net.params, net.w)
    L = np.zeros((n, n))
    for (a, b), gi in zip(t.edges, g):
        L[a, a] += gi
        L[b, b] += gi
        L[a, b] -= gi
        L[b, a] -= gi
    L += gmin * np.eye(n)
    fixed = [t.input_node, t.ground_node]
    free = [i for i in range(n) if i not in fixed]
    v = np.zeros(n)
    v[t.input_node] = vin
    v[free] = np.linalg.solve(L[np.ix_(free, free)], -L[np.ix_(free, [t.input_node])][:, 0] * vin)
    return v


def series_pair():
    # input 0 -> node 1 -> ground 2, same orientation
    return NetworkTopology(3, [(0, 1), (1, 2)], 0, 2, [(0, 1)])


# -- topology -------------------------------------------------------------

def test_triangle():
    t = generate_topology(3, 2, 1, 7)
    assert t.n_devices == 3
    assert list(t.degrees()) == [2, 2, 2]


def test_generation_deterministic():
    a, b = generate_topology(20, 5, 3, 11), generate_topology(20, 5, 3, 11)
    assert np.array_equal(a.edges, b.edges)
    assert np.array_equal(a.readout_pairs, b.readout_pairs)
    assert (a.input_node, a.ground_node) == (b.input_node, b.ground_node)


@pytest.mark.parametrize("seed", range(10))
def test_generated_graph_regular_and_connected(seed):
    t = generate_topology(20, 5, 2, seed)
    assert t.n_devices == 50
    assert np.all(t.degrees() == 5)
    assert bfs_connected(20, t.edges)
    assert len({tuple(sorted(e)) for e in t.edges.tolist()}) == 50
    assert t.input_node != t.ground_node


def test_odd_degree_sum_gets_ceil_edges():
    t = generate_topology(7, 3, 1, 0)
    assert t.n_devices == 11
    assert sorted(t.degrees().tolist()) == [3] * 6 + [4]


def test_readout_pairs_distinct_and_exclude_ground():
    t = generate_topology(60, 4, 16, 3)
    pairs = {tuple(sorted(p)) for p in t.readout_pairs.tolist()}
    assert len(pairs) == 16
    assert t.ground_node not in t.readout_pairs


@pytest.mark.parametrize("args", [(2, 1, 1), (5, 5, 1), (5, 0, 1), (5, 2, 0)])
def test_invalid_sizes(args):
    with pytest.raises(ValueError):
        generate_topology(*args, 0)


def test_generation_failure_when_never_connected():
    # 1-regular graphs on 6 nodes are perfect matchings: never connected
    with pytest.raises(GenerationError):
        generate_topology(6, 1, 1, 0)


def test_topology_validation():
    with pytest.raises(ValueError):
        NetworkTopology(3, [(0, 0)], 0, 1, [(1, 2)])
    with pytest.raises(ValueError):
        NetworkTopology(3, [(0, 1), (1, 0)], 0, 1, [(1, 2)])
    with pytest.raises(ValueError):
        NetworkTopology(3, [(0, 1)], 1, 1, [(1, 2)])
    NetworkTopology(3, [(0, 1), (1, 0)], 0, 1, [(1, 2)], allow_multi_edges=True)


def test_topology_text_round_trip(tmp_path):
    t = generate_topology(25, 4, 5, 9)
    path = tmp_path / "net.txt"
    dump_topology(t, path)
    back = load_topology(path)
    assert format_topology(back) == format_topology(t)
    assert path.read_text().splitlines()[0] == f"nodes=25 input={t.input_node} ground={t.ground_node}"


def test_topology_parse_errors():
    with pytest.raises(ValueError):
        parse_topology("edge 0 0 1\n")
    with pytest.raises(ValueError):
        parse_topology("nodes=3 input=0 ground=2\nedge 0 0 1\nwire 1 2\n")


# -- solving ----------------------------------------------------------------

def test_series_pair_midpoint():
    net = MemristiveNetwork(series_pair(), P)
    res = solve_dc(net, 1.0)
    assert res.converged
    # scalar KCL root at the middle node, including the leak to ground
    g = SolveSettings().min_conductance
    oracle = brentq(lambda x: current(P, 0.0, 1.0 - x) - current(P, 0.0, x) - g * x, 0.0, 1.0, xtol=1e-15)
    assert abs(oracle - 0.5) < 1e-7
    assert res.voltages[1] == pytest.approx(oracle, abs=1e-9)
    assert res.voltages[2] == 0.0


@pytest.mark.parametrize("v", [-3.0, 0.2, 7.5])
def test_single_device_source_constraint(v):
    net = MemristiveNetwork(NetworkTopology(2, [(0, 1)], 0, 1, [(0, 1)]), P)
    res = solve_dc(net, v)
    assert res.voltages[0] == v and res.voltages[1] == 0.0
    assert np.array_equal(net.last_voltages, res.voltages)


@pytest.mark.parametrize("seed", range(5))
def test_linear_network_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    t = generate_topology(20, 4, 2, seed)
    net = MemristiveNetwork(t, P, w=rng.uniform(0, 1, t.n_devices), linear=True)
    settings = SolveSettings()
    res = solve_dc(net, 1.7, settings)
    assert res.iterations == 1
    np.testing.assert_allclose(res.voltages, dense_oracle(net, 1.7, settings.min_conductance), atol=1e-10, rtol=0)


def test_frozen_w0_network_matches_oracle():
    t = generate_topology(20, 4, 2, 42)
    net = MemristiveNetwork(t, P, linear=True)
    res = solve_dc(net, 1.0)
    np.testing.assert_allclose(res.voltages, dense_oracle(net, 1.0, 1e-12), atol=1e-10, rtol=0)


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("vin", [-12.0, -1.5, 0.3, 2.0, 16.0])
def test_kcl_and_voltage_bounds(seed, vin):
    rng = np.random.default_rng(seed)
    t = generate_topology(int(rng.integers(15, 35)), 4, 3, seed)
    net = MemristiveNetwork(t, P, w=rng.uniform(0, 1, t.n_devices))
    res = solve_dc(net, vin)
    assert res.converged
    i_src = abs(source_current(net))
    assert np.abs(kcl_residual(net)).max() < 1e-6 * i_src
    lo, hi = min(0.0, vin), max(0.0, vin)
    assert np.all(res.voltages >= lo - 1e-9) and np.all(res.voltages <= hi + 1e-9)
    assert np.all(np.abs(net.readouts()) <= abs(vin) + 1e-9)


def test_secant_and_newton_agree_at_low_drive():
    t = generate_topology(25, 4, 2, 5)
    w = np.random.default_rng(5).uniform(0, 1, t.n_devices)
    a = solve_dc(MemristiveNetwork(t, P, w=w.copy()), 0.8, SolveSettings(method="newton", voltage_tolerance=1e-10))
    b = solve_dc(MemristiveNetwork(t, P, w=w.copy()), 0.8, SolveSettings(method="secant", voltage_tolerance=1e-10))
    assert a.converged and b.converged
    np.testing.assert_allclose(a.voltages, b.voltages, atol=1e-8)


def test_unconverged_solve_is_flagged_not_fatal():
    t = generate_topology(25, 4, 2, 5)
    net = MemristiveNetwork(t, P, w=np.full(t.n_devices, 0.7))
    res = solve_dc(net, 15.0, SolveSettings(max_fixed_point_iters=1))
    assert not res.converged
    assert np.all(np.isfinite(res.voltages))


def test_solver_settings_validation():
    for kw in ({"voltage_tolerance": 0}, {"min_conductance": 0}, {"max_fixed_point_iters": 0}, {"method": "lu"}):
        with pytest.raises(ValueError):
            SolveSettings(**kw)


def test_batch_matches_individual_solves():
    rng = np.random.default_rng(1)
    tops = [generate_topology(int(n), 4, 1, i) for i, n in enumerate(rng.integers(10, 30, 6))]
    ws = [rng.uniform(0, 1, t.n_devices) for t in tops]
    drive = rng.uniform(-5, 5, 6)
    batch = NetworkBatch([MemristiveNetwork(t, P, w=w.copy()) for t, w in zip(tops, ws)],
                         SolveSettings(voltage_tolerance=1e-11))
    batch.solve(drive)
    for k, (t, w) in enumerate(zip(tops, ws)):
        single = solve_dc(MemristiveNetwork(t, P, w=w.copy()), drive[k], SolveSettings(voltage_tolerance=1e-11))
        np.testing.assert_allclose(batch.networks[k].last_voltages, single.voltages, atol=1e-9)


def test_batch_views_write_through():
    nets = [MemristiveNetwork(generate_topology(12, 4, 1, i), P) for i in range(3)]
    batch = NetworkBatch(nets)
    batch.step([2.0, -2.0, 3.0], 1e-3)
    for k, net in enumerate(nets):
        assert np.shares_memory(net.w, batch.w)
        assert np.array_equal(net.last_voltages, batch.V[k, : net.topology.node_count])


# -- stepping ---------------------------------------------------------------

def test_zero_input_step():
    t = generate_topology(20, 4, 3, 2)
    w0 = np.random.default_rng(2).uniform(0, 1, t.n_devices)
    net = MemristiveNetwork(t, P, w=w0.copy())
    dt = 1e-3
    out = step_network(net, 0.0, dt)
    assert np.all(out == 0)
    assert np.all(net.last_voltages == 0)
    np.testing.assert_allclose(net.w, w0 * (1 - dt / P.tau))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(-16, 16))
def test_readout_passivity(seed, vin):
    t = generate_topology(15, 4, 4, seed)
    net = MemristiveNetwork(t, P, w=np.random.default_rng(seed).uniform(0, 1, t.n_devices))
    out = step_network(net, vin, 1e-3)
    assert np.all(np.abs(out) <= abs(vin) + 1e-9)


def test_supra_threshold_step_switches_more():
    t = generate_topology(20, 4, 1, 4)

    def max_change(v):
        net = MemristiveNetwork(t, P)
        step_network(net, v, 1e-3)
        return net.w.max()

    big, small = max_change(6.0), max_change(0.6)
    assert big > 10 * small
    # device-level reference: the same branch voltage on a lone device
    assert small <= 1e-3 * P.lambda_rate * np.sinh(P.eta * 0.6) + 1e-15


def test_step_rejects_nonpositive_dt():
    net = MemristiveNetwork(series_pair(), P)
    with pytest.raises(ValueError):
        step_network(net, 1.0, 0.0)


def test_stepping_is_deterministic():
    def trace():
        net = MemristiveNetwork(generate_topology(20, 4, 3, 8), P)
        return np.array([step_network(net, 3 * np.sin(0.3 * k), 1e-3) for k in range(40)])

    assert np.array_equal(trace(), trace())


# -- diagnostics ------------------------------------------------------------

def test_impedance_signature_single_device():
    net = MemristiveNetwork(NetworkTopology(2, [(0, 1)], 0, 1, [(0, 1)]), P)
    v = 1e-4
    assert network_impedance_signature(net, v) == pytest.approx(P.sigma * P.beta * v, rel=1e-3)
    with pytest.raises(ValueError):
        network_impedance_signature(net, 0.0)


def test_impedance_signature_parallel():
    one = MemristiveNetwork(NetworkTopology(2, [(0, 1)], 0, 1, [(0, 1)]), P)
    two = MemristiveNetwork(NetworkTopology(2, [(0, 1), (0, 1)], 0, 1, [(0, 1)], allow_multi_edges=True), P)
    for v in (0.3, -1.2):
        assert network_impedance_signature(two, v) == pytest.approx(2 * network_impedance_signature(one, v), rel=1e-12)


def test_disconnected_readout_is_degenerate():
    # devices 0-1-2 carry the source; readout sits on the isolated pair 3-4
    t = NetworkTopology(5, [(0, 1), (1, 2), (3, 4)], 0, 2, [(3, 4)])
    assert not t.is_connected()
    assert is_degenerate(MemristiveNetwork(t, P))
    assert not is_degenerate(MemristiveNetwork(generate_topology(15, 4, 1, 0), P))


def test_readout_pairs_are_nested_across_counts():
    small = generate_topology(30, 4, 4, 11)
    large = generate_topology(30, 4, 16, 11)
    assert np.array_equal(small.edges, large.edges)
    assert np.array_equal(small.readout_pairs, large.readout_pairs[:4])
