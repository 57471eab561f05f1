import numpy as np
import pytest

from qsdequiv.belavkin import run_belavkin
from qsdequiv.filters import (belavkin_filter_residuals, belavkin_filter_series,
                              gisin_filter_residuals, gisin_filter_series, phase_immunity_gap,
                              proposition2_check)
from qsdequiv.gisin import run_gisin
from qsdequiv.linalg import EXCITED, GROUND, SIGMA_MINUS, SIGMA_X, SIGMA_Z, ModelSpec
from qsdequiv.noise import complex_from_real, ensemble_real_increments
from qsdequiv.studies import fit_order

from _helpers import random_hermitian, random_state

DECAY = ModelSpec.from_operators([SIGMA_MINUS])
DRIVEN = ModelSpec.from_operators([SIGMA_MINUS], 0.5 * SIGMA_Z + SIGMA_X)


def _paths(n_steps, dt, channels=1, n=4, seed=0):
    return ensemble_real_increments(channels, n_steps, dt, seed, range(n))


def test_identity_series():
    rec = run_belavkin(DRIVEN, EXCITED, _paths(200, 1e-3))
    np.testing.assert_allclose(belavkin_filter_series(rec, np.eye(2)).values, 1.0, atol=1e-12)
    grec = run_gisin(DRIVEN, EXCITED, complex_from_real(_paths(200, 1e-3, 2)).conj())
    np.testing.assert_allclose(gisin_filter_series(grec, np.eye(2)).values, 1.0, atol=1e-12)


def test_energy_conserved_closed_system():
    rng = np.random.default_rng(0)
    H = random_hermitian(rng, 3)
    m = ModelSpec.from_operators([np.zeros((3, 3))], H)
    rec = run_belavkin(m, random_state(rng, 3), _paths(1000, 1e-3))
    v = belavkin_filter_series(rec, H).values
    # Euler drift on a closed system conserves energy to O(dt) per unit time
    assert np.max(np.abs(v - v[0])) < 1e-3


def test_dim_mismatch():
    rec = run_belavkin(DRIVEN, EXCITED, _paths(10, 1e-3))
    with pytest.raises(ValueError):
        belavkin_filter_series(rec, np.eye(3))


def test_belavkin_residuals_order_dt():
    errs, dts = [], []
    for dt in (4e-3, 2e-3, 1e-3):
        rec = run_belavkin(DECAY, (EXCITED + GROUND) / np.sqrt(2), _paths(int(1 / dt), dt))
        errs.append(np.mean(np.abs(belavkin_filter_residuals(DECAY, rec, SIGMA_Z))))
        dts.append(dt)
    assert fit_order(dts, errs) > 0.8


def test_gisin_residuals_order_dt():
    errs, dts = [], []
    for dt in (4e-3, 2e-3, 1e-3):
        p = complex_from_real(_paths(int(1 / dt), dt, 2)).conj()
        rec = run_gisin(DRIVEN, (EXCITED + GROUND) / np.sqrt(2), p)
        errs.append(np.mean(np.abs(gisin_filter_residuals(DRIVEN, rec, SIGMA_Z))))
        dts.append(dt)
    assert fit_order(dts, errs) > 0.8


def test_eigenstate_start_is_drift_only():
    # from |g> with R = sigma_-, the noise coefficient of <sigma_z> vanishes
    p = complex_from_real(_paths(1, 1e-3, 2)).conj()
    rec = run_gisin(DECAY, GROUND, p)
    v = gisin_filter_series(rec, SIGMA_Z).values
    np.testing.assert_allclose(v[1], v[0], atol=1e-15)


def test_prop2_trivial_cases():
    path = _paths(300, 1e-3, 2)
    assert np.max(proposition2_check(SIGMA_MINUS, SIGMA_X, np.eye(2), path, EXCITED)) <= 1e-12
    assert np.max(proposition2_check(np.zeros((2, 2)), SIGMA_X, SIGMA_Z, path, EXCITED)) <= 1e-12


def test_phase_immunity():
    rng = np.random.default_rng(1)
    psi = random_state(rng, 3, (50,))
    theta = rng.uniform(-10, 10, size=50)
    X = random_hermitian(rng, 3)
    assert np.max(phase_immunity_gap(psi, theta, X)) <= 1e-14
