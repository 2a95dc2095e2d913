# %% [markdown]
# # NARMA-10 and superimposed oscillators
# NARMA-10 asks the readout for a tenth-order nonlinear system driven by
# random input. A tanh ring is the classical baseline. The memristive ring
# runs at low drive, where the devices stay almost linear.

# %%
from memrc import ScrConfig, TrainSpec, build_scr, build_sigmoid_scr, fit_evaluate
from memrc.learn import nrmse
from memrc.tasks import mso_task, narma10_task

spec = TrainSpec(1e-8, 100)
task = narma10_task(2200, seed=4)
u, y = task.input.samples, task.target.samples
for n in (20, 50, 100):
    sig = fit_evaluate(build_sigmoid_scr(n, 0.01, 0.75, seed=0).run(u), y, spec, nrmse)[0]
    mem = build_scr(ScrConfig(n_nodes=n, input_coeff=0.5, spectral_radius=1.7, substeps=2, seed=0,
                              network_size_range=(23, 29)))
    print(f"N={n:3d}  tanh ring NRMSE {sig:.4f}   memristive ring NRMSE {fit_evaluate(mem.run(u), y, spec, nrmse)[0]:.4f}")

# %% [markdown]
# The oscillator task predicts a sum of two incommensurate sines 5 ms ahead.

# %%
mso = mso_task()
res = build_scr(ScrConfig(n_nodes=20, input_coeff=1.0, spectral_radius=0.1, substeps=2, seed=0,
                          network_size_range=(23, 29)))
print("MSO NRMSE", fit_evaluate(res.run(mso.input.samples), mso.target.samples, spec, nrmse)[0])
