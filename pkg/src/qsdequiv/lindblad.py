"""Fixed-step RK4 integration of the Lindblad master equation.

Used as the deterministic reference for ensemble averages of both
stochastic unravellings.
"""
from __future__ import annotations

import numpy as np

from .linalg import ModelSpec, as_operator, dag

TRACE_TOL = 1e-10
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = -1e-8
STEP_BOUND = 0.05  # max (substep * generator norm)


class InvariantViolation(RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


def check_density_matrix(rho, step=None):
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - dag(rho)))
    if herm > HERMITIAN_TOL:
        raise InvariantViolation(f"density matrix not hermitian (err {herm:.3g})", step)
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvariantViolation(f"trace {tr.real:.15g} != 1", step)
    lo = np.linalg.eigvalsh(0.5 * (rho + dag(rho)))[0]
    if lo < POSITIVITY_TOL:
        raise InvariantViolation(f"negative eigenvalue {lo:.3g}", step)
    return rho


def pure_density(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def lindblad_rhs(model: ModelSpec, rho, t=0.0):
    """``-i[H, rho] + sum_k (L rho L* - 1/2 {L* L, rho})``."""
    rho = as_operator(rho)
    if rho.shape[0] != model.dim:
        raise ValueError(f"rho has dim {rho.shape[0]}, model has dim {model.dim}")
    H = model.hamiltonian_at(t)
    out = -1j * (H @ rho - rho @ H)
    for L in model.couplings_at(t):
        Ld = dag(L)
        LdL = Ld @ L
        out = out + L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def generator_norm_bound(model: ModelSpec, t=0.0):
    """Upper bound on the superoperator norm: ``2||H|| + 2 sum ||L_k||^2``."""
    H = model.hamiltonian_at(t)
    Ls = model.couplings_at(t)
    bound = 2 * np.linalg.norm(H, 2)
    for L in Ls:
        bound += 2 * np.linalg.norm(L, 2) ** 2
    return bound


def lindblad_propagate(model: ModelSpec, rho0, t_grid, check=True):
    """Density matrices on a uniform ``t_grid``, shape ``(len(t_grid), d, d)``.

    Each grid interval is split into equal RK4 substeps so that
    ``substep * ||generator|| <= 0.05``. For time-dependent models the bound
    is taken as the max over the grid points.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    rho = np.array(as_operator(rho0), dtype=complex)
    if rho.shape[0] != model.dim:
        raise ValueError(f"rho0 has dim {rho.shape[0]}, model has dim {model.dim}")
    if check:
        check_density_matrix(rho, 0)
    out = np.empty((len(t_grid),) + rho.shape, dtype=complex)
    out[0] = rho
    if len(t_grid) < 2:
        return out
    dt = t_grid[1] - t_grid[0]
    if not dt > 0 or not np.allclose(np.diff(t_grid), dt, rtol=1e-9, atol=0):
        raise ValueError("t_grid must be uniform and increasing")
    if model.is_time_dependent:
        gnorm = max(generator_norm_bound(model, t) for t in t_grid)
    else:
        gnorm = generator_norm_bound(model)
    n_sub = max(1, int(np.ceil(dt * gnorm / STEP_BOUND)))
    h = dt / n_sub
    f = lambda r, s: lindblad_rhs(model, r, s)
    for m in range(1, len(t_grid)):
        t = t_grid[m - 1]
        for j in range(n_sub):
            s = t + j * h
            k1 = f(rho, s)
            k2 = f(rho + 0.5 * h * k1, s + 0.5 * h)
            k3 = f(rho + 0.5 * h * k2, s + 0.5 * h)
            k4 = f(rho + h * k3, s + h)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if check:
            check_density_matrix(rho, m)
        out[m] = rho
    return out


def expectation_series(rhos, X):
    """``Tr[X rho(t)]`` along a propagated series."""
    return np.einsum("ij,tji->t", np.asarray(X), rhos)
