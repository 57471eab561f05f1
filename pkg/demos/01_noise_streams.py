# %% [markdown]
# # Noise streams
#
# Every trajectory draws its Gaussian increments from its own child stream,
# keyed by `(base_seed, trajectory_index)`. Real channels feed the filtering
# equation; pairs of real channels make one complex channel for state
# diffusion; the canonical map `dxi* = sum_k z_k dI_k` links the two.

# %%
import numpy as np

from qsdequiv.canonical import canonical_coefficients
from qsdequiv.noise import canonical_noise_map, complex_from_real, real_increments

dt, M = 1e-3, 100_000

# %% [markdown]
# Same seed pair, same path. A different trajectory index gives an unrelated path.

# %%
a = real_increments(2, 5, dt, (42, 0)).increments
b = real_increments(2, 5, dt, (42, 0)).increments
c = real_increments(2, 5, dt, (42, 1)).increments
print("identical:", np.array_equal(a, b), " different index differs:", not np.array_equal(a, c))

# %% [markdown]
# Second moments against the Ito table: `dI_j dI_k = delta_jk dt`,
# `dxi* dxi = dt`, `dxi dxi = 0`.

# %%
dI = real_increments(2, M, dt, (1, 0))
print("<dI_j dI_k>/dt =\n", np.round(dI.increments.T @ dI.increments / (M * dt), 3))

xi = complex_from_real(real_increments(2, M, dt, (1, 1))).increments[:, 0]
print(f"complex:   <|dxi|^2>/dt = {np.mean(abs(xi) ** 2) / dt:.4f}   <dxi^2>/dt = {np.mean(xi ** 2) / dt:.4f}")

for n in (2, 3, 5):
    z = canonical_coefficients(n)
    xs = canonical_noise_map(z, real_increments(n, M, dt, (1, n))).increments[:, 0]
    print(f"canonical n={n}: <|dxi*|^2>/dt = {np.mean(abs(xs) ** 2) / dt:.4f}   "
          f"<dxi*^2>/dt = {np.mean(xs ** 2) / dt:.4f}")
