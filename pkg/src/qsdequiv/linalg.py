"""Dense operators, state vectors and models shared by every integrator.

Operators and states are plain complex ``numpy`` arrays. State arrays may
carry leading batch axes, ``(..., d)``, so one call advances a whole
ensemble of trajectories.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

HERMITIAN_TOL = 1e-10
NORM_TOL = 1e-10

OperatorLike = Union[np.ndarray, Callable[[float], np.ndarray]]

# qubit basis: index 0 = |e>, index 1 = |g>
EXCITED = np.array([1.0, 0.0], dtype=complex)
GROUND = np.array([0.0, 1.0], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |e> -> |g>
SIGMA_PLUS = SIGMA_MINUS.T.copy()


def destroy(n):
    """Annihilation operator truncated to ``n`` Fock levels."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def basis(n, i):
    v = np.zeros(n, dtype=complex)
    v[i] = 1.0
    return v


def dag(op):
    return np.conj(np.swapaxes(op, -1, -2))


def commutator(a, b):
    return a @ b - b @ a


def op_imag(x):
    """Operator imaginary part ``(X - X*)/2i``; hermitian for any ``X``."""
    return (x - dag(x)) / 2j


def as_operator(x, dim=None):
    op = np.asarray(x, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"operator must be a square matrix, got shape {op.shape}")
    if dim is not None and op.shape[0] != dim:
        raise ValueError(f"operator has dim {op.shape[0]}, expected {dim}")
    return op


def is_hermitian(op, tol=HERMITIAN_TOL):
    op = np.asarray(op)
    return bool(np.max(np.abs(op - dag(op)), initial=0.0) <= tol)


def is_unitary(u, tol=1e-12):
    u = np.asarray(u, dtype=complex)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and bool(
        np.max(np.abs(dag(u) @ u - np.eye(u.shape[0])), initial=0.0) <= tol
    )


def _check_dims(op, psi):
    if op.shape[-1] != psi.shape[-1]:
        raise ValueError(
            f"dimension mismatch: operator acts on dim {op.shape[-1]}, "
            f"state has dim {psi.shape[-1]}"
        )


def apply(op, psi):
    """Matrix-vector product ``op @ psi`` for a state or a batch of states."""
    op = np.asarray(op)
    psi = np.asarray(psi)
    _check_dims(op, psi)
    return psi @ op.T


def expectation(psi, op):
    """``<psi|op psi>``; batched over leading axes of ``psi``."""
    op = np.asarray(op)
    psi = np.asarray(psi)
    _check_dims(op, psi)
    return np.einsum("...i,...i->...", psi.conj(), psi @ op.T)


def norm(psi):
    return np.sqrt(np.einsum("...i,...i->...", psi.conj(), psi).real)


def normalize(psi):
    psi = np.asarray(psi, dtype=complex)
    n = norm(psi)
    if np.any(n == 0):
        raise ValueError("cannot normalize a zero vector")
    return psi / n[..., None]


def as_state(psi, dim=None):
    """Validate a normalized state vector (or batch of them)."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim < 1:
        raise ValueError("state must be at least one-dimensional")
    if dim is not None and psi.shape[-1] != dim:
        raise ValueError(f"state has dim {psi.shape[-1]}, expected {dim}")
    if np.any(np.abs(norm(psi) - 1.0) > NORM_TOL):
        raise ValueError("state vector is not normalized")
    return psi


def _freeze(x):
    if callable(x):
        return x
    arr = as_operator(x)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModelSpec:
    """Coupling operators plus Hamiltonian, each constant or a function of time.

    ``couplings`` are the ``L_k`` of a filtering model or the ``R_k`` of a
    state-diffusion model; the integrator decides which.
    """

    couplings: tuple
    hamiltonian: OperatorLike

    def __post_init__(self):
        couplings = tuple(_freeze(c) for c in self.couplings)
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "hamiltonian", _freeze(self.hamiltonian))
        H = self.hamiltonian_at(0.0)
        d = H.shape[0]
        for k, L in enumerate(self.couplings_at(0.0)):
            if L.shape != (d, d):
                raise ValueError(f"coupling {k} has shape {L.shape}, hamiltonian is {d}x{d}")
        if not is_hermitian(H):
            raise ValueError("hamiltonian is not hermitian")

    @classmethod
    def from_operators(cls, couplings: Sequence, hamiltonian=None, dim=None):
        couplings = list(couplings)
        if hamiltonian is None:
            if dim is None:
                first = couplings[0]
                dim = (first(0.0) if callable(first) else np.asarray(first)).shape[0]
            hamiltonian = np.zeros((dim, dim), dtype=complex)
        return cls(tuple(couplings), hamiltonian)

    @property
    def n_channels(self):
        return len(self.couplings)

    @property
    def dim(self):
        return self.hamiltonian_at(0.0).shape[0]

    @property
    def is_time_dependent(self):
        return callable(self.hamiltonian) or any(callable(c) for c in self.couplings)

    def hamiltonian_at(self, t):
        H = self.hamiltonian
        return as_operator(H(t)) if callable(H) else H

    def couplings_at(self, t):
        """Stacked coupling operators, shape ``(n_channels, d, d)``."""
        if not self.couplings:
            d = self.hamiltonian_at(t).shape[0]
            return np.zeros((0, d, d), dtype=complex)
        return np.stack([as_operator(c(t)) if callable(c) else c for c in self.couplings])

    def check_hermitian(self, times):
        for t in times:
            if not is_hermitian(self.hamiltonian_at(t)):
                raise ValueError(f"hamiltonian is not hermitian at t={t}")


def gks_lindblad_apply(model: ModelSpec, X, t=0.0):
    """Heisenberg-picture Lindblad generator acting on ``X`` at time ``t``.

    ``1/2 sum_k ([L_k*, X] L_k + L_k* [X, L_k]) - i [X, H]``
    """
    X = as_operator(X, model.dim)
    H = model.hamiltonian_at(t)
    out = -1j * commutator(X, H)
    for L in model.couplings_at(t):
        Ld = dag(L)
        out = out + 0.5 * (commutator(Ld, X) @ L + Ld @ commutator(X, L))
    return out
