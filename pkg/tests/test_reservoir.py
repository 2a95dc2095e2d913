import numpy as np
import pytest

from memrc.circuit import MemristiveNetwork
from memrc.reservoir import (
    ScrConfig,
    ScrReservoir,
    SingleNetworkReservoir,
    build_scr,
    build_sigmoid_scr,
    build_single_network_reservoir,
    dump_reservoir,
    load_reservoir,
    run_reservoir,
    scr_step,
    sigmoid_scr_step,
)
from memrc.tasks import TimeSeries

SMALL = dict(network_size_range=(8, 12), substeps=2)


def probe(n=60, seed=0):
    return np.random.default_rng(seed).uniform(-1, 1, n)


def fresh_copy(res: ScrReservoir, order=None):
    order = range(len(res.networks)) if order is None else order
    nets = [MemristiveNetwork(res.networks[i].topology, res.batch.params) for i in order]
    return ScrReservoir(nets, res.input_signs[list(order)], res.ring_weight, res.input_coeff,
                        dt=res.dt, substeps=res.substeps)


def test_config_validation():
    for bad in (dict(n_nodes=1), dict(input_coeff=-1), dict(spectral_radius=-0.1), dict(substeps=0)):
        with pytest.raises(ValueError):
            ScrConfig(**bad)


def test_build_is_deterministic():
    a, b = build_scr(ScrConfig(n_nodes=16, seed=5)), build_scr(ScrConfig(n_nodes=16, seed=5))
    assert len(a.networks) == 16 and len(a.input_signs) == 16
    assert a.ring_weight == 1.0
    assert np.array_equal(a.input_signs, b.input_signs)
    for na, nb in zip(a.networks, b.networks):
        assert np.array_equal(na.topology.edges, nb.topology.edges)
    assert set(a.input_signs) <= {-1.0, 1.0}


def test_mean_device_count_near_52():
    counts = [np.mean([n.topology.n_devices for n in build_scr(ScrConfig(n_nodes=20, seed=s)).networks])
              for s in range(50)]
    assert abs(np.mean(counts) - 52) < 0.15 * 52


def test_zero_drive_keeps_zero_state():
    res = build_scr(ScrConfig(n_nodes=5, input_coeff=0.0, spectral_radius=0.0, **SMALL))
    assert np.all(run_reservoir(res, probe(20)) == 0)


def test_zero_input_gives_zero_matrix():
    res = build_scr(ScrConfig(n_nodes=5, input_coeff=2.0, **SMALL))
    assert np.all(run_reservoir(res, np.zeros(20)) == 0)


def test_permuting_nodes_permutes_state():
    res = build_scr(ScrConfig(n_nodes=6, input_coeff=3.0, spectral_radius=0.0, seed=2, **SMALL))
    order = [3, 0, 5, 1, 4, 2]
    a = run_reservoir(fresh_copy(res), probe(30))
    b = run_reservoir(fresh_copy(res, order), probe(30))
    np.testing.assert_array_equal(a[:, order], b)


def test_first_step_passivity():
    for seed in range(5):
        res = build_scr(ScrConfig(n_nodes=8, input_coeff=4.0, seed=seed, **SMALL))
        x = scr_step(res, 0.7)
        assert np.all(np.abs(x) <= 4.0 * 0.7 + 1e-12)


def test_passivity_chain():
    res = build_scr(ScrConfig(n_nodes=8, input_coeff=3.0, spectral_radius=1.5, seed=1, **SMALL))
    prev = res.state.copy()
    for u in probe(80, 1):
        x = scr_step(res, u)
        assert np.all(np.abs(x) <= 1.5 * np.abs(prev).max() + 3.0 * abs(u) + 1e-12)
        prev = x.copy()


def test_synchronous_update_reads_old_state():
    res = build_scr(ScrConfig(n_nodes=4, input_coeff=1.0, spectral_radius=2.0, seed=3, **SMALL))
    run_reservoir(res, probe(10))
    old = res.state.copy()
    expected = 2.0 * old[[3, 0, 1, 2]] + res.input_signs * 0.4
    np.testing.assert_allclose(res.drive(0.4), expected)


def test_runs_are_deterministic_and_stateful():
    cfg = ScrConfig(n_nodes=5, input_coeff=3.0, seed=4, **SMALL)
    u = probe(50)
    first = run_reservoir(build_scr(cfg), u)
    assert np.array_equal(first, run_reservoir(build_scr(cfg), u))
    res = build_scr(cfg)
    run_reservoir(res, u)
    assert not np.array_equal(first, run_reservoir(res, u))


def test_zero_ring_weight_decouples_nodes():
    res = build_scr(ScrConfig(n_nodes=4, input_coeff=5.0, spectral_radius=0.0, seed=6, **SMALL))
    u = probe(40, 6)
    X = run_reservoir(fresh_copy(res), u)
    for i, net in enumerate(res.networks):
        single = SingleNetworkReservoir(MemristiveNetwork(net.topology, res.batch.params), 5.0,
                                        dt=res.dt, substeps=res.substeps)
        np.testing.assert_allclose(single.run(res.input_signs[i] * u)[:, 0], X[:, i], atol=1e-12)


def test_nodes_are_heterogeneous():
    res = build_scr(ScrConfig(n_nodes=6, input_coeff=6.0, spectral_radius=0.0, seed=7, **SMALL))
    X = run_reservoir(res, probe(80, 7)) * res.input_signs
    corr = np.corrcoef(X.T)
    assert corr[np.triu_indices(6, 1)].min() < 0.999


def test_dt_mismatch_rejected():
    res = build_scr(ScrConfig(n_nodes=3, **SMALL))
    with pytest.raises(ValueError):
        run_reservoir(res, TimeSeries(probe(5), dt=0.01))


def test_snapshot_round_trip(tmp_path):
    res = build_scr(ScrConfig(n_nodes=4, input_coeff=4.0, seed=8, **SMALL))
    run_reservoir(res, probe(20))
    dump_reservoir(res, tmp_path / "snap.txt")
    back = load_reservoir(tmp_path / "snap.txt")
    assert np.array_equal(back.state, res.state)
    u = probe(20, 9)
    np.testing.assert_array_equal(run_reservoir(res, u), run_reservoir(back, u))


def test_single_network_baseline():
    res = build_single_network_reservoir(60, 16, 4, substeps=2, seed=1, input_coeff=4.0)
    assert res.networks[0].topology.n_devices == 120
    X = run_reservoir(res, probe(30))
    assert X.shape == (30, 16)
    pairs = [tuple(p) for p in res.networks[0].topology.readout_pairs]
    assert len(set(pairs)) == len(pairs)
    one = build_single_network_reservoir(20, 1, substeps=2, input_coeff=2.0)
    assert run_reservoir(one, probe(10)).shape == (10, 1)
    with pytest.raises(ValueError):
        build_single_network_reservoir(20, 0)


def test_sigmoid_scr():
    res = build_sigmoid_scr(10, 0.5, 0.9, seed=1)
    assert np.all(sigmoid_scr_step(res, 0.0) == 0)
    X = res.run(np.random.default_rng(0).uniform(-5, 5, 200))
    assert np.all(np.abs(X) <= 1)
    tiny = build_sigmoid_scr(10, 1e-3, 0.5, seed=2)
    x0 = tiny.run(np.full(5, 1e-3))[-1].copy()
    x1 = sigmoid_scr_step(tiny, 2e-3)
    np.testing.assert_allclose(x1, 0.5 * np.roll(x0, 1) + tiny.input_signs * 1e-3 * 2e-3, atol=1e-6)
