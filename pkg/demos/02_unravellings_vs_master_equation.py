# %% [markdown]
# # Two unravellings, one master equation
#
# Qubit decay with `R = sigma_-` started in the excited state. The homodyne
# filter (real innovations) and quantum state diffusion (complex noise) give
# very different individual trajectories, yet both ensemble means follow
# `<sigma_z>(t) = 2 exp(-t) - 1`, which the density-matrix integrator
# reproduces to high accuracy.

# %%
import numpy as np

from qsdequiv import (ModelSpec, complex_from_real, ensemble_real_increments, lindblad_propagate,
                      run_belavkin, run_gisin)
from qsdequiv.lindblad import expectation_series, pure_density
from qsdequiv.linalg import EXCITED, SIGMA_MINUS, SIGMA_Z

model = ModelSpec.from_operators([SIGMA_MINUS])
dt, T, N = 1e-3, 5.0, 1000
steps = int(T / dt)

# %%
rhos = lindblad_propagate(model, pure_density(EXCITED), np.arange(6.0))
oracle = expectation_series(rhos, SIGMA_Z).real
print("oracle <sigma_z> at t=0..5:", np.round(oracle, 6))
print("closed form            :", np.round(2 * np.exp(-np.arange(6.0)) - 1, 6))

# %%
obs = {"z": SIGMA_Z}
filt = run_belavkin(model, EXCITED, ensemble_real_increments(1, steps, dt, 7, range(N)),
                    observables=obs, keep_states=False)
qsd = run_gisin(model, EXCITED,
                complex_from_real(ensemble_real_increments(2, steps, dt, 8, range(N))).conj(),
                observables=obs, keep_states=False)

# %%
for t in (1.0, 2.0, 5.0):
    i = int(round(t / dt))
    row = [f"t={t:g}  exact {2 * np.exp(-t) - 1:+.4f}"]
    for name, rec in (("filter", filt), ("diffusion", qsd)):
        z = rec.expectations["z"].real[i]
        row.append(f"{name} {z.mean():+.4f} +- {z.std(ddof=1) / np.sqrt(N):.4f}")
    print("   ".join(row))
