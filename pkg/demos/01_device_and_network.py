# %% [markdown]
# # One device, then one network
# A memristor's current depends on its internal state w, and w drifts with
# the voltage across it. Driving one device with a slow sine traces a
# pinched hysteresis loop.

# %%
import numpy as np
import matplotlib.pyplot as plt

from memrc import default_params, integrate_state, current, generate_topology, MemristiveNetwork, solve_dc

params = default_params()
dt = 1e-5
t = np.arange(0, 0.3, dt)
v = 1.4 * np.sin(2 * np.pi * 10 * t)
w = integrate_state(params, 0.0, v, dt)
i = current(params, np.concatenate([[0.0], w[:-1]]), v)

fig, (a, b) = plt.subplots(1, 2, figsize=(9, 3.5))
a.plot(v, i * 1e3)
a.set(xlabel="voltage (V)", ylabel="current (mA)", title="I-V loop at 10 Hz")
b.plot(t, w)
b.set(xlabel="time (s)", ylabel="state w", title="state")
fig.tight_layout()

# %% [markdown]
# A random degree-4 network of such devices is solved as a DC circuit at
# every step. The readout is the voltage difference between two nodes.

# %%
net = MemristiveNetwork(generate_topology(26, 4, 1, rng_seed=3), params)
for vin in (0.5, 2.0, 8.0):
    res = solve_dc(net, vin)
    print(f"input {vin:4.1f} V -> readout {net.readouts()[0]:+.4f} V "
          f"({res.iterations} iterations, converged={res.converged})")

plt.show()
