# %% [markdown]
# # Harmonic generation: ring of networks against one big network
# A 20 Hz sine drives the reservoir; linear readouts are trained to emit a
# 40 Hz sine, a triangle and a square wave. Both systems hand 16 signals to
# the readout. The full comparison over eight drive levels and ten trials
# is `tests/test_acceptance.py::test_criterion_3_hhg_scr_beats_single_network`.

# %%
import matplotlib.pyplot as plt

from memrc import ScrConfig, TrainSpec, build_scr, build_single_network_reservoir, fit_evaluate, predict
from memrc.learn import mse
from memrc.tasks import hhg_sine_task, hhg_square_task, hhg_triangle_task

tasks = {"sine": hhg_sine_task(n=1000), "triangle": hhg_triangle_task(n=1000), "square": hhg_square_task(n=1000)}
u = tasks["sine"].input.samples
spec = TrainSpec(1e-8, 100)
systems = {
    "SCR, 16 nodes": build_scr(ScrConfig(n_nodes=16, input_coeff=2.0, spectral_radius=1.0, substeps=5, seed=0,
                                         network_size_range=(23, 29))),
    "single network, 16 pairs": build_single_network_reservoir(60, 16, 4, 1e-3, 5, 0, input_coeff=2.0),
}
fig, axes = plt.subplots(len(systems), 3, figsize=(11, 5), sharex=True)
for row, (label, res) in zip(axes, systems.items()):
    X = res.run(u)
    for ax, (name, task) in zip(row, tasks.items()):
        err, w = fit_evaluate(X, task.target.samples, spec, mse)
        ax.plot(task.target.samples[-100:], "k", lw=1)
        ax.plot(predict(w, X)[-100:], "C1", lw=1)
        ax.set_title(f"{label}: {name}, MSE {err:.4f}", fontsize=8)
        print(f"{label:26s} {name:8s} MSE {err:.5f}")
fig.tight_layout()
plt.show()
