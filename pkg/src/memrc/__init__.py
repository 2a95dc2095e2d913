"""Hierarchical memristive reservoir computing: devices, networks, reservoirs, readouts, tasks."""
__version__ = "0.1.0"

from .device import (DeviceParams, DeviceState, current, default_params, integrate_state, load_params,
                     state_derivative, step_device)
from .circuit import MemristiveNetwork, NetworkTopology, SolveSettings, generate_topology, solve_dc, step_network
from .reservoir import ScrConfig, build_scr, build_sigmoid_scr, build_single_network_reservoir, run_reservoir
from .learn import TrainSpec, fit_evaluate, memory_capacity, mse, nrmse, predict, train_readout
