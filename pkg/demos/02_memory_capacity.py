# %% [markdown]
# # Memory capacity of a memristive simple cycle reservoir
# Twenty small memristive networks sit on a ring. Each one is driven by its
# neighbour's readout scaled by lambda plus the input scaled by v. Memory
# capacity sums how well linear readouts recover the input 1..10 steps back.
# This sweep is a coarse, fast version of `configs/mc_sweep.ini`.

# %%
import numpy as np
import matplotlib.pyplot as plt

from memrc import ScrConfig, build_scr, memory_capacity, TrainSpec
from memrc.tasks import uniform_series

u = uniform_series(-0.8, 0.8, 1200, seed=0).samples
vs, lams = (0.5, 2.0, 6.0), (0.5, 1.5, 2.5)
C = np.zeros((len(vs), len(lams)))
for a, v in enumerate(vs):
    for b, lam in enumerate(lams):
        res = build_scr(ScrConfig(n_nodes=20, input_coeff=v, spectral_radius=lam, substeps=2, seed=1,
                                  network_size_range=(23, 29)))
        C[a, b] = memory_capacity(res.run(u), u, TrainSpec(1e-8, 200)).total
        print(f"v={v:3.1f} lambda={lam:3.1f}  C={C[a, b]:.2f}")

# %% [markdown]
# Low drive keeps the devices near their linear regime, which preserves
# information; strong drive switches them and washes the past out.

# %%
plt.imshow(C, origin="lower", aspect="auto", extent=(lams[0], lams[-1], vs[0], vs[-1]))
plt.colorbar(label="memory capacity")
plt.xlabel("lambda")
plt.ylabel("v (V)")
plt.show()
