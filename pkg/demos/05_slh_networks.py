# %% [markdown]
# # SLH networks
#
# Components are `(S, L, H)` triples. Feeding the output of `G1` into `G2`
# is the series product. A Weyl box displaces the field, and elements of
# the Euclidean group (rotation, displacement, energy shift) change the
# couplings without changing the master equation.

# %%
import numpy as np

from qsdequiv.linalg import SIGMA_MINUS, SIGMA_Z, gks_lindblad_apply
from qsdequiv.slh import EuclideanElement, SLHTriple, euclidean_apply, series_product, weyl_box

G = SLHTriple.from_operators([SIGMA_MINUS / np.sqrt(2), 1j * SIGMA_MINUS / np.sqrt(2)], 0.5 * SIGMA_Z)

# %% [markdown]
# A Weyl box after the system adds `beta_k` to each coupling and shifts the
# Hamiltonian by `sum_k Im(beta_k* L_k)`.

# %%
beta = np.array([0.3j, -0.2j])
S, L, H = series_product(weyl_box(beta, 2), G).at(0.0)
print("L_1 =\n", np.round(L[0], 3))
print("H   =\n", np.round(H, 3))

# %% [markdown]
# Rotating the channels and displacing them leaves the generator alone.

# %%
U = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)
E = EuclideanElement(U, np.array([0.4 + 0.1j, -0.3j]), epsilon=0.7)
G2 = euclidean_apply(E, G)
rng = np.random.default_rng(1)
X = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
diff = gks_lindblad_apply(G2.model(), X) - gks_lindblad_apply(G.model(), X)
print(f"generator change after the group element: {np.abs(diff).max():.1e}")

# %% [markdown]
# Time-dependent displacements compose lazily and are evaluated on demand.

# %%
moving = series_product(weyl_box(lambda t: np.array([np.exp(1j * t), 0]), 2), G)
print("L_1(t=1) diagonal:", np.round(np.diag(moving.at(1.0)[1][0]), 3))
