"""Closed-loop filtering with Weyl-box feedback that reproduces state diffusion.

The two-channel canonical system ``L = (R/sqrt2, iR/sqrt2)`` is followed by
Weyl boxes displacing each output by ``alpha_k(t)``, which gives couplings
``L_k + alpha_k`` and Hamiltonian ``H + sum_k Im(alpha_k* L_k)``. With
``alpha`` computed from the current filter state the filter increment
equals the state-diffusion increment for ``(R, H)`` exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belavkin import quadratures
from .canonical import canonical_coefficients
from .gisin import gisin_step, initial_gisin_state
from .linalg import ModelSpec, as_operator, dag, expectation, norm, normalize
from .noise import NoisePath, canonical_noise_map
from .records import _Recorder, check_grid, renormalize

IMAG_TOL = 1e-12
_Z = canonical_coefficients(2)


def canonical_pair(R):
    R = as_operator(R)
    return np.stack([zk * R for zk in _Z.z])


def feedback_alpha(psi, R):
    """Feedback displacements ``alpha_1 = -<R - R*>/(2 sqrt2)``, ``alpha_2 = -i <R + R*>/(2 sqrt2)``.

    Both are purely imaginary for any state; a real part means ``R*`` was
    not the adjoint of ``R``.
    """
    R = as_operator(R)
    psi = np.asarray(psi, dtype=complex)
    s = 2.0 * np.sqrt(2.0)
    a1 = -expectation(psi, R - dag(R)) / s
    a2 = -1j * expectation(psi, R + dag(R)) / s
    alphas = np.stack([a1, a2], axis=-1)
    if np.max(np.abs(alphas.real), initial=0.0) > IMAG_TOL:
        raise ValueError("feedback displacement has a real part")
    return alphas


def _modulated(Ls, H, psi, alphas, dI, dt):
    Lpsi = np.einsum("kij,...j->...ki", Ls, psi)
    Ldpsi = np.einsum("kji,...j->...ki", Ls.conj(), psi)
    LdLpsi = np.einsum("kji,...kj->...i", Ls.conj(), Lpsi)
    # real part of alpha is zero, so lambda is not shifted
    lam = 2.0 * np.einsum("...i,...ki->...k", psi.conj(), Lpsi).real
    a = alphas[..., None]
    p = psi[..., None, :]
    shifted = Lpsi + a * p
    dH_psi = np.sum(a.conj() * Lpsi - a * Ldpsi, axis=-2) / 2j
    quad = LdLpsi + np.sum(a * Ldpsi + a.conj() * Lpsi + np.abs(a) ** 2 * p, axis=-2)
    drift = (
        -1j * (psi @ H.T)
        - 1j * dH_psi
        - 0.5 * quad
        + 0.5 * np.einsum("...k,...ki->...i", lam, shifted)
        - 0.125 * np.sum(lam ** 2, axis=-1)[..., None] * psi
    )
    noise = np.einsum("...k,...ki->...i", dI, shifted - 0.5 * lam[..., None] * p)
    return drift * dt + noise, lam


def modulated_increment(R, H, psi, alphas, dI, dt):
    """Filter increment for the canonical pair behind Weyl boxes with displacement ``alphas``."""
    R = as_operator(R)
    H = as_operator(H, R.shape[0])
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[-1] != R.shape[0]:
        raise ValueError(f"state has dim {psi.shape[-1]}, operators have dim {R.shape[0]}")
    delta, _ = _modulated(canonical_pair(R), H, psi, np.asarray(alphas, dtype=complex),
                          np.asarray(dI, dtype=float), dt)
    return delta


def feedback_identities(psi, R):
    """Quantities entering the exactness argument, evaluated on ``psi``.

    Keys: ``alpha_lambda_L`` (the operator ``sum_k (alpha_k* - lambda_k/2) L_k``),
    ``c_star_R``, ``sum_abs_alpha_sq``, ``quarter_sum_lambda_sq``,
    ``half_abs_c_sq``, ``sum_lambda_alpha``.
    """
    R = as_operator(R)
    psi = np.asarray(psi, dtype=complex)
    Ls = canonical_pair(R)
    alphas = feedback_alpha(psi, R)
    lam = quadratures(Ls, psi)
    c = expectation(psi, R)
    return {
        "alpha_lambda_L": np.einsum("...k,kij->...ij", alphas.conj() - 0.5 * lam, Ls),
        "c_star_R": np.conj(c)[..., None, None] * R,
        "sum_abs_alpha_sq": np.sum(np.abs(alphas) ** 2, axis=-1),
        "quarter_sum_lambda_sq": 0.25 * np.sum(lam ** 2, axis=-1),
        "half_abs_c_sq": 0.5 * np.abs(c) ** 2,
        "sum_lambda_alpha": np.sum(lam * alphas, axis=-1),
    }


@dataclass
class FeedbackReport:
    residual: np.ndarray  # ||psi_fb - psi_gp|| per time
    max_residual: np.ndarray


def closed_loop_run(R, H, real_path: NoisePath, psi0, t_grid=None, observables=None,
                    keep_states=True):
    """Run the feedback loop and a state-diffusion reference on one path.

    The reference is driven by ``dxi* = (dI_1 + i dI_2)/sqrt2``. No phase
    alignment is applied to the residual. Series recorded: ``alpha``,
    ``lambda``, ``y``.
    """
    if real_path.is_complex or real_path.n_channels != 2:
        raise ValueError("closed loop needs a real two-channel path")
    t_grid = real_path.times() if t_grid is None else check_grid(t_grid, real_path.n_steps, real_path.dt)
    R = as_operator(R)
    H = as_operator(H, R.shape[0])
    Ls = canonical_pair(R)
    gmodel = ModelSpec((R,), H)
    xi = canonical_noise_map(_Z.z, real_path).increments
    batch = real_path.batch_shape
    psi = normalize(np.broadcast_to(np.asarray(psi0, dtype=complex), batch + (R.shape[0],)))
    gstate = initial_gisin_state(gmodel, psi0, float(t_grid[0]), batch)
    y = np.zeros(batch + (2,))
    rec = _Recorder(real_path.n_steps, keep_states, observables)
    residual = [norm(psi - gstate.psi)]
    alphas = feedback_alpha(psi, R)
    rec.add(psi, alpha=alphas, **{"lambda": quadratures(Ls, psi), "y": y})
    for m in range(real_path.n_steps):
        dI = real_path.increments[m]
        delta, lam = _modulated(Ls, H, psi, alphas, dI, real_path.dt)
        psi = renormalize(psi + delta, m)
        y = y + dI + lam * real_path.dt
        gstate = gisin_step(gmodel, gstate, xi[m], real_path.dt, step=m)
        alphas = feedback_alpha(psi, R)
        rec.add(psi, alpha=alphas, **{"lambda": quadratures(Ls, psi), "y": y})
        residual.append(norm(psi - gstate.psi))
    record = rec.finish(t_grid, real_path.increments)
    residual = np.stack(residual)
    return record, FeedbackReport(residual, np.max(residual, axis=0))
