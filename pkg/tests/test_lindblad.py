import numpy as np
import pytest

from qsdequiv.lindblad import (InvariantViolation, check_density_matrix, expectation_series,
                               lindblad_propagate, lindblad_rhs, pure_density)
from qsdequiv.linalg import (EXCITED, GROUND, SIGMA_MINUS, SIGMA_Z, ModelSpec,
                             gks_lindblad_apply, op_imag)

from _helpers import random_hermitian, random_operator, random_state, random_unitary


def test_maximally_mixed_trivial_model():
    m = ModelSpec.from_operators([np.zeros((3, 3))])
    np.testing.assert_allclose(lindblad_rhs(m, np.eye(3) / 3), 0, atol=1e-15)


def test_decay_rhs():
    gamma = 0.8
    m = ModelSpec.from_operators([np.sqrt(gamma) * SIGMA_MINUS])
    out = lindblad_rhs(m, pure_density(EXCITED))
    np.testing.assert_allclose(out, gamma * (pure_density(GROUND) - pure_density(EXCITED)), atol=1e-15)


@pytest.mark.parametrize("seed", range(10))
def test_rhs_duality_and_trace(seed):
    rng = np.random.default_rng(seed)
    d = 3
    m = ModelSpec.from_operators([random_operator(rng, d) for _ in range(2)], random_hermitian(rng, d))
    A = random_operator(rng, d)
    rho = A @ A.conj().T
    rho /= np.trace(rho)
    X = random_operator(rng, d)
    lhs = np.trace(X @ lindblad_rhs(m, rho))
    rhs = np.trace(gks_lindblad_apply(m, X) @ rho)
    assert abs(lhs - rhs) < 1e-10
    assert abs(np.trace(lindblad_rhs(m, rho))) < 1e-12


def test_zero_time():
    m = ModelSpec.from_operators([SIGMA_MINUS])
    out = lindblad_propagate(m, pure_density(EXCITED), [0.0])
    np.testing.assert_array_equal(out[0], pure_density(EXCITED))


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
def test_decay_closed_form(gamma):
    m = ModelSpec.from_operators([np.sqrt(gamma) * SIGMA_MINUS])
    t = np.linspace(0, 2 / gamma, 201)
    z = expectation_series(lindblad_propagate(m, pure_density(EXCITED), t), SIGMA_Z).real
    for target in (1 / gamma, 2 / gamma):
        i = int(np.argmin(abs(t - target)))
        assert abs(z[i] - (2 * np.exp(-gamma * t[i]) - 1)) < 1e-6


def test_unitary_phase():
    delta = 1.3
    m = ModelSpec.from_operators([np.zeros((2, 2))], 0.5 * delta * SIGMA_Z)
    psi = (EXCITED + GROUND) / np.sqrt(2)
    t = np.linspace(0, 3, 31)
    rhos = lindblad_propagate(m, pure_density(psi), t)
    # rho_eg(t) = rho_eg(0) exp(-i delta t)
    np.testing.assert_allclose(rhos[:, 0, 1], 0.5 * np.exp(-1j * delta * t), atol=1e-8)


def test_invariants_along_propagation():
    rng = np.random.default_rng(0)
    m = ModelSpec.from_operators([random_operator(rng, 4) for _ in range(2)], random_hermitian(rng, 4))
    rhos = lindblad_propagate(m, pure_density(random_state(rng, 4)), np.linspace(0, 1, 11))
    for r in rhos:
        check_density_matrix(r)


def test_euclidean_transformed_models_agree():
    rng = np.random.default_rng(5)
    d, n = 3, 2
    Ls = [random_operator(rng, d) * 0.5 for _ in range(n)]
    H = random_hermitian(rng, d)
    U = random_unitary(rng, n)
    beta = rng.normal(size=n) + 1j * rng.normal(size=n)
    rot = [sum(U[k, j] * Ls[j] for j in range(n)) + beta[k] * np.eye(d) for k in range(n)]
    H2 = H + sum(op_imag(np.conj(beta[k]) * (rot[k] - beta[k] * np.eye(d))) for k in range(n))
    rho0 = pure_density(random_state(rng, d))
    t = np.linspace(0, 1, 11)
    a = lindblad_propagate(ModelSpec.from_operators(Ls, H), rho0, t)
    b = lindblad_propagate(ModelSpec.from_operators(rot, H2), rho0, t)
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_time_dependent_coupling_phase_is_irrelevant():
    m_t = ModelSpec((lambda t: np.exp(5j * t) * SIGMA_MINUS,), np.zeros((2, 2)))
    m_c = ModelSpec((SIGMA_MINUS,), np.zeros((2, 2)))
    t = np.linspace(0, 1, 11)
    np.testing.assert_allclose(lindblad_propagate(m_t, pure_density(EXCITED), t),
                               lindblad_propagate(m_c, pure_density(EXCITED), t), atol=1e-12)


def test_invalid_input_rejected():
    bad = np.array([[0.5, 0.0], [0.0, 0.6]])
    with pytest.raises(InvariantViolation):
        check_density_matrix(bad)
    with pytest.raises(InvariantViolation, match="negative"):
        check_density_matrix(np.diag([1.2, -0.2]))
    with pytest.raises(ValueError):
        lindblad_propagate(ModelSpec.from_operators([SIGMA_MINUS]), np.eye(3) / 3, [0, 1])
