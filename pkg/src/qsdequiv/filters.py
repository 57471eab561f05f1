"""Expectation-level filters built from recorded trajectories."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .canonical import CanonicalCoefficients, canonical_coefficients, coupled_pair_run
from .linalg import ModelSpec, as_operator, dag, expectation, gks_lindblad_apply, is_hermitian
from .records import TrajectoryRecord

REAL_TOL = 1e-10


@dataclass
class FilterSeries:
    observable: np.ndarray
    times: np.ndarray
    values: np.ndarray


def _series(record: TrajectoryRecord, X):
    if record.states is None:
        raise ValueError("filter series need a record with states")
    X = as_operator(X, record.states.shape[-1])
    values = expectation(record.states, X)
    if is_hermitian(X):
        if np.max(np.abs(values.imag), initial=0.0) > REAL_TOL:
            raise ValueError("hermitian observable produced complex expectations")
        values = values.real
    return FilterSeries(X, record.times, values)


def belavkin_filter_series(record: TrajectoryRecord, X):
    """``pi_t(X) = <psi_t|X psi_t>`` along a filtering trajectory."""
    return _series(record, X)


def gisin_filter_series(record: TrajectoryRecord, X):
    """``<psi_gp|X psi_gp>`` along a state-diffusion trajectory."""
    return _series(record, X)


def belavkin_filter_residuals(model: ModelSpec, record: TrajectoryRecord, X):
    """Per-step ``d pi(X)`` minus its SDE right-hand side.

    Right-hand side: ``pi(Lind X) dt + sum_k [pi(X L_k + L_k* X) - lambda_k pi(X)] dI_k``.
    The residual of each step is O(dt).
    """
    X = as_operator(X, model.dim)
    psi = record.states
    dI = record.increments
    dt = record.dt
    out = np.empty(dI.shape[:-1], dtype=complex)
    for m in range(dI.shape[0]):
        t = record.times[m]
        p = psi[m]
        Ls = model.couplings_at(t)
        piX = expectation(p, X)
        lam = np.stack([2 * expectation(p, L).real for L in Ls], axis=-1)
        coef = np.stack([expectation(p, X @ L + dag(L) @ X) for L in Ls], axis=-1) - lam * piX[..., None]
        rhs = expectation(p, gks_lindblad_apply(model, X, t)) * dt + np.sum(coef * dI[m], axis=-1)
        out[m] = expectation(psi[m + 1], X) - piX - rhs
    return out


def gisin_filter_residuals(model: ModelSpec, record: TrajectoryRecord, X):
    """Per-step ``d pi_gp(X)`` minus the right-hand side with ``dxi*`` and ``dxi`` terms."""
    X = as_operator(X, model.dim)
    psi = record.states
    dxs = record.increments
    dt = record.dt
    out = np.empty(dxs.shape[:-1], dtype=complex)
    for m in range(dxs.shape[0]):
        t = record.times[m]
        p = psi[m]
        Rs = model.couplings_at(t)
        piX = expectation(p, X)
        c = np.stack([expectation(p, R) for R in Rs], axis=-1)
        a = np.stack([expectation(p, X @ R) for R in Rs], axis=-1) - c * piX[..., None]
        b = np.stack([expectation(p, dag(R) @ X) for R in Rs], axis=-1) - np.conj(c) * piX[..., None]
        rhs = (expectation(p, gks_lindblad_apply(model, X, t)) * dt
               + np.sum(a * dxs[m] + b * np.conj(dxs[m]), axis=-1))
        out[m] = expectation(psi[m + 1], X) - piX - rhs
    return out


def proposition2_check(R, H, X, path, psi0, t_grid=None, z: CanonicalCoefficients = None):
    """``max_t |pi_t(X) - pi_gp_t(X)|`` on a coupled canonical run (per trajectory)."""
    z = canonical_coefficients(2) if z is None else z
    run = coupled_pair_run(R, H, z, path, psi0, t_grid, observables={"X": as_operator(X)},
                           keep_states=False)
    diff = run.belavkin.expectations["X"] - run.gisin.expectations["X"]
    return np.max(np.abs(diff), axis=0)


def phase_immunity_gap(psi, theta, X):
    """``|<psi|X psi> - <e^{i theta} psi|X e^{i theta} psi>|``."""
    psi = np.asarray(psi, dtype=complex)
    rotated = np.exp(1j * np.asarray(theta))[..., None] * psi
    return np.abs(expectation(psi, X) - expectation(rotated, X))
