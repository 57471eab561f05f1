"""Gisin-Percival quantum state diffusion driven by complex Wiener noise.

Same explicit Euler-Maruyama plus renormalization scheme as the filtering
equation. The integrator consumes conjugate increments ``dxi*`` and
refuses complex paths not flagged as such.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import ModelSpec, as_operator, is_unitary, normalize, op_imag
from .noise import NoisePath
from .records import _Recorder, renormalize


@dataclass(frozen=True)
class GisinState:
    psi: np.ndarray
    c_values: np.ndarray  # c_k = <psi|R_k psi>
    t: float = 0.0


def collapse_means(Rs, psi):
    """``c_k = <psi|R_k psi>`` for stacked ``Rs``."""
    return np.einsum("...i,...ki->...k", psi.conj(), np.einsum("kij,...j->...ki", Rs, psi))


def _increment(Rs, H, psi, dxi_star, dt):
    Rpsi = np.einsum("kij,...j->...ki", Rs, psi)
    c = np.einsum("...i,...ki->...k", psi.conj(), Rpsi)
    K = np.einsum("kji,kjl->il", Rs.conj(), Rs)
    drift = (
        -1j * (psi @ H.T)
        - 0.5 * (psi @ K.T)
        + np.einsum("...k,...ki->...i", c.conj(), Rpsi)
        - 0.5 * np.sum(np.abs(c) ** 2, axis=-1)[..., None] * psi
    )
    noise = np.einsum("...k,...ki->...i", dxi_star, Rpsi - c[..., None] * psi[..., None, :])
    return drift * dt + noise, c


def _check(model, psi, dxi_star):
    if psi.shape[-1] != model.dim:
        raise ValueError(f"state has dim {psi.shape[-1]}, model has dim {model.dim}")
    if np.shape(dxi_star)[-1] != model.n_channels:
        raise ValueError(f"noise has {np.shape(dxi_star)[-1]} channels, "
                         f"model has {model.n_channels}")


def gisin_increment(model: ModelSpec, psi, dxi_star, dt, t=0.0):
    """Unnormalized state change ``dM psi``; ``model.couplings`` are the ``R_k``."""
    psi = np.asarray(psi, dtype=complex)
    dxi_star = np.asarray(dxi_star, dtype=complex)
    _check(model, psi, dxi_star)
    delta, _ = _increment(model.couplings_at(t), model.hamiltonian_at(t), psi, dxi_star, dt)
    return delta


def initial_gisin_state(model: ModelSpec, psi0, t0=0.0, batch_shape=()):
    psi = normalize(np.broadcast_to(np.asarray(psi0, dtype=complex), batch_shape + (model.dim,)))
    return GisinState(psi, collapse_means(model.couplings_at(t0), psi), t0)


def gisin_step(model: ModelSpec, state: GisinState, dxi_star, dt, step=None):
    dxi_star = np.asarray(dxi_star, dtype=complex)
    _check(model, state.psi, dxi_star)
    delta, _ = _increment(model.couplings_at(state.t), model.hamiltonian_at(state.t),
                          state.psi, dxi_star, dt)
    psi = renormalize(state.psi + delta, step)
    t = state.t + dt
    return GisinState(psi, collapse_means(model.couplings_at(t), psi), t)


def require_conjugate_stream(path: NoisePath):
    if not path.is_complex or not path.conjugate:
        raise ValueError("state diffusion must be driven by a conjugate (dxi*) complex stream; "
                         "use NoisePath.conj() on a dxi stream")


def run_gisin(model: ModelSpec, psi0, path: NoisePath, t0=0.0, observables=None,
              keep_states=True):
    """Integrate over a ``dxi*`` path. Records the series ``c``."""
    require_conjugate_stream(path)
    times = path.times(t0)
    state = initial_gisin_state(model, psi0, t0, path.batch_shape)
    rec = _Recorder(path.n_steps, keep_states, observables)
    rec.add(state.psi, c=state.c_values)
    for m in range(path.n_steps):
        state = gisin_step(model, state, path.increments[m], path.dt, step=m)
        rec.add(state.psi, c=state.c_values)
    return rec.finish(times, path.increments)


@dataclass(frozen=True)
class NoiseTransform:
    """How the ``dxi*`` stream and global phase change under a coupling transform.

    ``stream_matrix`` multiplies each conjugate increment vector. For
    translations, ``beta`` and ``epsilon`` give the induced phase rate
    ``sum_k Im(beta_k* c_k) + epsilon``.
    """

    kind: str
    stream_matrix: np.ndarray
    beta: Optional[np.ndarray] = None
    epsilon: float = 0.0

    def apply(self, path: NoisePath):
        require_conjugate_stream(path)
        inc = path.increments @ self.stream_matrix.T
        return NoisePath(inc, path.dt, path.base_seed, path.trajectory_index, True)

    def phase_rate(self, c_values):
        if self.beta is None:
            return np.zeros(np.shape(c_values)[:-1])
        return np.sum(np.imag(self.beta.conj() * c_values), axis=-1) + self.epsilon


def euclidean_transform_gp(model: ModelSpec, U=None, beta=None, epsilon=0.0):
    """Transformed state-diffusion model and the matching noise descriptor.

    Rotation: ``R'_k = sum_j u_kj R_j`` with conjugate stream ``dxi'* = conj(U) dxi*``.
    Translation: ``R'_k = R_k + beta_k``,
    ``H' = H + sum_k Im(beta_k* R_k) + epsilon``; the stream is unchanged and
    the state acquires the phase rate reported by ``NoiseTransform.phase_rate``.
    """
    if (U is None) == (beta is None):
        raise ValueError("give exactly one of U (rotation) or beta (translation)")
    if model.is_time_dependent:
        raise ValueError("covariance transforms are implemented for constant models")
    Rs = model.couplings_at(0.0)
    H = model.hamiltonian_at(0.0)
    n, d = Rs.shape[0], model.dim
    if U is not None:
        U = np.asarray(U, dtype=complex)
        if U.shape != (n, n) or not is_unitary(U):
            raise ValueError("U must be an n x n unitary matrix")
        Rs_new = np.einsum("kj,jab->kab", U, Rs)
        return ModelSpec(tuple(Rs_new), H), NoiseTransform("rotation", U.conj())
    beta = np.asarray(beta, dtype=complex).reshape(n)
    I = np.eye(d)
    Rs_new = Rs + beta[:, None, None] * I
    H_new = H + sum(op_imag(np.conj(b) * R) for b, R in zip(beta, Rs)) + float(epsilon) * I
    return (ModelSpec(tuple(Rs_new), as_operator(H_new)),
            NoiseTransform("translation", np.eye(n, dtype=complex), beta, float(epsilon)))
