"""Belavkin-Schrödinger (homodyne filtering) equation and its linear form.

The scheme is explicit Euler-Maruyama followed by renormalization, with
``lambda_k`` evaluated on the pre-step state (Ito convention).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import ModelSpec, as_operator, normalize
from .noise import NoisePath
from .records import _Recorder, renormalize

DEFAULT_DT = 1e-3


@dataclass(frozen=True)
class BelavkinState:
    psi: np.ndarray
    lambdas: np.ndarray  # <psi|(L_k + L_k*) psi> at time t
    y: np.ndarray  # accumulated measurement record Y_k
    innovations: np.ndarray  # accumulated innovations I_k
    t: float = 0.0


def quadratures(Ls, psi):
    """``lambda_k = <psi|(L_k + L_k*) psi>`` for stacked ``Ls``."""
    Lpsi = np.einsum("kij,...j->...ki", Ls, psi)
    return 2.0 * np.einsum("...i,...ki->...k", psi.conj(), Lpsi).real


def _increment(Ls, H, psi, dI, dt):
    Lpsi = np.einsum("kij,...j->...ki", Ls, psi)
    lam = 2.0 * np.einsum("...i,...ki->...k", psi.conj(), Lpsi).real
    K = np.einsum("kji,kjl->il", Ls.conj(), Ls)
    drift = (
        -1j * (psi @ H.T)
        - 0.5 * (psi @ K.T)
        + 0.5 * np.einsum("...k,...ki->...i", lam, Lpsi)
        - 0.125 * np.sum(lam ** 2, axis=-1)[..., None] * psi
    )
    noise = np.einsum("...k,...ki->...i", dI, Lpsi - 0.5 * lam[..., None] * psi[..., None, :])
    return drift * dt + noise, lam


def _check(model, psi, dI):
    if psi.shape[-1] != model.dim:
        raise ValueError(f"state has dim {psi.shape[-1]}, model has dim {model.dim}")
    if np.shape(dI)[-1] != model.n_channels:
        raise ValueError(f"noise has {np.shape(dI)[-1]} channels, model has {model.n_channels}")


def belavkin_increment(model: ModelSpec, psi, dI, dt, t=0.0):
    """Unnormalized state change ``dF psi`` for one step of size ``dt``."""
    psi = np.asarray(psi, dtype=complex)
    dI = np.asarray(dI, dtype=float)
    _check(model, psi, dI)
    delta, _ = _increment(model.couplings_at(t), model.hamiltonian_at(t), psi, dI, dt)
    return delta


def initial_belavkin_state(model: ModelSpec, psi0, t0=0.0, batch_shape=()):
    psi = normalize(np.broadcast_to(np.asarray(psi0, dtype=complex), batch_shape + (model.dim,)))
    zeros = np.zeros(batch_shape + (model.n_channels,))
    return BelavkinState(psi, quadratures(model.couplings_at(t0), psi), zeros, zeros.copy(), t0)


def belavkin_step(model: ModelSpec, state: BelavkinState, dI, dt, step=None):
    dI = np.asarray(dI, dtype=float)
    _check(model, state.psi, dI)
    delta, lam = _increment(model.couplings_at(state.t), model.hamiltonian_at(state.t),
                            state.psi, dI, dt)
    psi = renormalize(state.psi + delta, step)
    t = state.t + dt
    return BelavkinState(
        psi=psi,
        lambdas=quadratures(model.couplings_at(t), psi),
        y=state.y + dI + lam * dt,
        innovations=state.innovations + dI,
        t=t,
    )


def zakai_step(model: ModelSpec, chi, dY, dt, t=0.0):
    """Linear (unnormalized) filter step driven by measurement increments ``dY``."""
    chi = np.asarray(chi, dtype=complex)
    dY = np.asarray(dY, dtype=float)
    _check(model, chi, dY)
    Ls = model.couplings_at(t)
    H = model.hamiltonian_at(t)
    K = np.einsum("kji,kjl->il", Ls.conj(), Ls)
    Lchi = np.einsum("kij,...j->...ki", Ls, chi)
    return chi - (chi @ (0.5 * K + 1j * H).T) * dt + np.einsum("...k,...ki->...i", dY, Lchi)


def detuned_coupling(gamma, phi, omega, a, hamiltonian=None):
    """Single channel ``L(t) = sqrt(gamma) exp(-i phi) exp(i omega t) a``."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    a = as_operator(a)
    base = np.sqrt(gamma) * np.exp(-1j * phi) * a
    if hamiltonian is None:
        hamiltonian = np.zeros_like(a)
    if omega == 0:
        return ModelSpec((base,), hamiltonian)
    return ModelSpec((lambda t: base * np.exp(1j * omega * t),), hamiltonian)


def run_belavkin(model: ModelSpec, psi0, path: NoisePath, t0=0.0, observables=None,
                 keep_states=True):
    """Integrate over ``path.n_steps`` steps; batch axes of ``path`` become ensemble axes.

    Series recorded per time: ``lambda``, ``y`` and ``innovations``.
    """
    if path.is_complex:
        raise ValueError("the filtering equation is driven by real innovations")
    times = path.times(t0)
    state = initial_belavkin_state(model, psi0, t0, path.batch_shape)
    rec = _Recorder(path.n_steps, keep_states, observables)
    rec.add(state.psi, **{"lambda": state.lambdas, "y": state.y, "innovations": state.innovations})
    for m in range(path.n_steps):
        state = belavkin_step(model, state, path.increments[m], path.dt, step=m)
        rec.add(state.psi, **{"lambda": state.lambdas, "y": state.y,
                              "innovations": state.innovations})
    return rec.finish(times, path.increments)


def run_zakai(model: ModelSpec, chi0, dY, dt, t0=0.0):
    """Unnormalized linear-filter states for measurement increments ``dY`` ``(n_steps, ..., n)``."""
    dY = np.asarray(dY, dtype=float)
    chi = np.broadcast_to(np.asarray(chi0, dtype=complex), dY.shape[1:-1] + (model.dim,))
    out = [chi]
    for m in range(dY.shape[0]):
        chi = zakai_step(model, chi, dY[m], dt, t0 + m * dt)
        out.append(chi)
    return np.stack(out)
