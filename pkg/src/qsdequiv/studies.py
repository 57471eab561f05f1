"""Refinement studies and the detuned-heterodyne comparison.

Refinement studies generate one fine Brownian path per trajectory and sum
its increments to get the coarser paths, so every step size sees the same
noise realization.
"""
from __future__ import annotations

import numpy as np

from .belavkin import detuned_coupling, run_belavkin
from .canonical import canonical_coefficients, coupled_pair_run
from .feedback import closed_loop_run
from .filters import proposition2_check
from .gisin import run_gisin
from .linalg import ModelSpec, as_operator
from .noise import NoisePath, coarsen


def fit_order(dts, errors):
    """Least-squares slope of ``log(error)`` against ``log(dt)``."""
    slope, _ = np.polyfit(np.log(np.asarray(dts, float)), np.log(np.asarray(errors, float)), 1)
    return float(slope)


def refinement_study(run, fine_path: NoisePath, factors=(4, 2, 1)):
    """Evaluate ``run(path)`` (returning per-trajectory errors) on coarsened copies.

    Returns ``(dts, mean_errors, order)``; the order is fitted to the
    ensemble-mean errors.
    """
    dts, errs = [], []
    for f in factors:
        p = coarsen(fine_path, f)
        dts.append(p.dt)
        errs.append(float(np.mean(run(p))))
    return np.array(dts), np.array(errs), fit_order(dts, errs)


def canonical_residual_study(R, H, psi0, fine_path, factors=(4, 2, 1), z=None):
    z = canonical_coefficients(2) if z is None else z
    return refinement_study(
        lambda p: coupled_pair_run(R, H, z, p, psi0, keep_states=False).max_residual,
        fine_path, factors)


def feedback_residual_study(R, H, psi0, fine_path, factors=(4, 2, 1)):
    return refinement_study(
        lambda p: closed_loop_run(R, H, p, psi0, keep_states=False)[1].max_residual,
        fine_path, factors)


def proposition2_study(R, H, X, psi0, fine_path, factors=(4, 2, 1)):
    return refinement_study(lambda p: proposition2_check(R, H, X, p, psi0), fine_path, factors)


def phase_aligned_distance(psi, phi):
    """``min_theta ||psi - e^{i theta} phi|| = sqrt(2 (1 - |<psi|phi>|))`` for unit vectors."""
    overlap = np.abs(np.einsum("...i,...i->...", np.conj(psi), phi))
    return np.sqrt(2.0 * np.maximum(1.0 - overlap, 0.0))


def detuned_gp_distance(R, H, omega, real_path: NoisePath, psi0, phi=0.0):
    """Max phase-aligned distance between the detuned filter and ``(R, H)`` state diffusion.

    The filter uses ``L(t) = exp(-i phi) exp(i omega t) R`` driven by ``dI``;
    the diffusion is driven by ``dxi* = exp(-i phi) exp(i omega t) dI``.
    """
    if real_path.is_complex or real_path.n_channels != 1:
        raise ValueError("need a real single-channel path")
    R = as_operator(R)
    H = as_operator(H, R.shape[0])
    model = detuned_coupling(1.0, phi, omega, R, H)
    brec = run_belavkin(model, psi0, real_path)
    t_left = real_path.times()[:-1]
    phase = np.exp(-1j * phi) * np.exp(1j * omega * t_left)
    shape = (real_path.n_steps,) + (1,) * (real_path.increments.ndim - 1)
    xi_star = phase.reshape(shape) * real_path.increments
    gpath = NoisePath(xi_star, real_path.dt, real_path.base_seed, real_path.trajectory_index, True)
    grec = run_gisin(ModelSpec((R,), H), psi0, gpath)
    return np.max(phase_aligned_distance(brec.states, grec.states), axis=0)
