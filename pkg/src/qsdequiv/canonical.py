"""Canonical filtering models that reproduce state diffusion up to a random phase.

With ``L_k = z_k R``, ``sum |z_k|^2 = 1``, ``sum z_k^2 = 0`` and the noise
identification ``dxi* = sum_k z_k dI_k``, the filtered state equals
``exp(i Theta) * psi_gp`` where ``dTheta = sum_k Im(z_k c) dI_k``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belavkin import initial_belavkin_state, belavkin_step
from .gisin import initial_gisin_state, gisin_step
from .linalg import ModelSpec, as_operator, norm
from .noise import COEFF_TOL, NoisePath, canonical_noise_map, check_canonical_coefficients
from .records import TrajectoryRecord, _Recorder, check_grid

PHASE_FORM_TOL = 1e-12


@dataclass(frozen=True)
class CanonicalCoefficients:
    n: int
    z: np.ndarray
    phi: float = 0.0

    def __post_init__(self):
        z = check_canonical_coefficients(self.z, COEFF_TOL)
        if z.size != self.n or self.n < 2:
            raise ValueError("need n >= 2 coefficients")
        z = z.copy()
        z.setflags(write=False)
        object.__setattr__(self, "z", z)


@dataclass
class PhaseProcess:
    theta: np.ndarray
    quadratic_variation: np.ndarray


def canonical_coefficients(n, phi=0.0, sign=+1):
    """``n = 2``: ``exp(i phi) (1, +-i) / sqrt 2``; ``n >= 3``: ``exp(i phi) exp(i pi (k-1)/n) / sqrt n``."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if n == 2:
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        z = np.exp(1j * phi) * np.array([1.0, sign * 1j]) / np.sqrt(2.0)
    else:
        z = np.exp(1j * phi) * np.exp(1j * np.pi * np.arange(n) / n) / np.sqrt(n)
    return CanonicalCoefficients(n, z, float(phi))


def build_canonical_model(R, H, z: CanonicalCoefficients):
    R = as_operator(R)
    H = as_operator(H, R.shape[0])
    return ModelSpec(tuple(zk * R for zk in z.z), H)


def phase_increment(c, dxi_star, z, dI):
    """Phase step from both ``(c dxi* - c* dxi)/2i`` and ``sum_k Im(z_k c) dI_k``.

    The two must agree; a mismatch means the complex stream was not built
    from ``dI`` with these ``z``.
    """
    z = z.z if isinstance(z, CanonicalCoefficients) else np.asarray(z, dtype=complex)
    c = np.asarray(c, dtype=complex)
    dxi_star = np.asarray(dxi_star, dtype=complex)
    dI = np.asarray(dI, dtype=float)
    from_complex = ((c * dxi_star - np.conj(c) * np.conj(dxi_star)) / 2j).real
    from_real = np.sum(np.imag(z * c[..., None]) * dI, axis=-1)
    scale = 1.0 + np.abs(c) * np.sum(np.abs(dI), axis=-1)
    if np.any(np.abs(from_complex - from_real) > PHASE_FORM_TOL * scale):
        raise ValueError("phase increment forms disagree: noise streams are not coupled by z")
    return from_real


@dataclass
class CoupledRun:
    """A filtering trajectory and a state-diffusion trajectory on one noise path."""

    belavkin: TrajectoryRecord
    gisin: TrajectoryRecord
    phase: PhaseProcess
    times: np.ndarray
    theta: np.ndarray  # (n_times, ...)
    quadratic_variation: np.ndarray
    residual: np.ndarray  # ||psi - exp(i theta) psi_gp||
    infidelity: np.ndarray  # 1 - |<psi|psi_gp>|
    dtheta: np.ndarray  # (n_steps, ...)
    dxi_star: np.ndarray  # (n_steps, ...)
    c: np.ndarray  # (n_times, ...), evaluated on the GP state

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    @property
    def max_residual(self):
        return np.max(self.residual, axis=0)


def coupled_pair_run(R, H, z: CanonicalCoefficients, real_path: NoisePath, psi0, t_grid=None,
                     observables=None, keep_states=True):
    """Drive the canonical filter with ``dI`` and the ``(R, H)`` diffusion with ``sum z_k dI_k``.

    The phase is integrated with ``c`` taken on the pre-step diffusion state.
    """
    if real_path.is_complex or real_path.n_channels != z.n:
        raise ValueError(f"need a real path with {z.n} channels")
    t_grid = real_path.times() if t_grid is None else check_grid(t_grid, real_path.n_steps, real_path.dt)
    t0 = float(t_grid[0])
    R = as_operator(R)
    bmodel = build_canonical_model(R, H, z)
    gmodel = ModelSpec((R,), as_operator(H))
    xi = canonical_noise_map(z.z, real_path).increments[..., 0]
    batch = real_path.batch_shape
    bstate = initial_belavkin_state(bmodel, psi0, t0, batch)
    gstate = initial_gisin_state(gmodel, psi0, t0, batch)
    theta = np.zeros(batch)
    qv = np.zeros(batch)
    brec = _Recorder(real_path.n_steps, keep_states, observables)
    grec = _Recorder(real_path.n_steps, keep_states, observables)
    thetas, qvs, res, infid, dthetas = [theta], [qv], [], [], []

    def compare(psi, psi_gp, th):
        res.append(norm(psi - np.exp(1j * th)[..., None] * psi_gp))
        overlap = np.abs(np.einsum("...i,...i->...", psi.conj(), psi_gp))
        infid.append(1.0 - np.minimum(overlap, 1.0))

    brec.add(bstate.psi, **{"lambda": bstate.lambdas, "y": bstate.y})
    grec.add(gstate.psi, c=gstate.c_values)
    compare(bstate.psi, gstate.psi, theta)
    for m in range(real_path.n_steps):
        dI = real_path.increments[m]
        c = gstate.c_values[..., 0]
        dth = phase_increment(c, xi[m], z, dI)
        bstate = belavkin_step(bmodel, bstate, dI, real_path.dt, step=m)
        gstate = gisin_step(gmodel, gstate, xi[m][..., None], real_path.dt, step=m)
        theta = theta + dth
        qv = qv + dth ** 2
        brec.add(bstate.psi, **{"lambda": bstate.lambdas, "y": bstate.y})
        grec.add(gstate.psi, c=gstate.c_values)
        thetas.append(theta)
        qvs.append(qv)
        dthetas.append(dth)
        compare(bstate.psi, gstate.psi, theta)
    brecord = brec.finish(t_grid, real_path.increments)
    grecord = grec.finish(t_grid, xi[..., None])
    return CoupledRun(
        belavkin=brecord,
        gisin=grecord,
        phase=PhaseProcess(theta, qv),
        times=t_grid,
        theta=np.stack(thetas),
        quadratic_variation=np.stack(qvs),
        residual=np.stack(res),
        infidelity=np.stack(infid),
        dtheta=np.stack(dthetas),
        dxi_star=xi,
        c=grecord.series["c"][..., 0],
    )


def phase_ito_cross_check(run: CoupledRun):
    """Realized phase covariations against their Ito-table predictions.

    Targets use left-point sums of ``c`` on the grid:
    ``dTheta dxi* -> -(1/2i) c* dt``, ``dTheta dxi -> (1/2i) c dt``,
    ``dTheta dTheta -> |c|^2 dt / 2``.
    """
    dt = run.dt
    c = run.c[:-1]
    dth = run.dtheta
    report = {
        "theta_xi_star": np.sum(dth * run.dxi_star, axis=0),
        "theta_xi_star_target": np.sum(-np.conj(c) / 2j, axis=0) * dt,
        "theta_xi": np.sum(dth * np.conj(run.dxi_star), axis=0),
        "theta_xi_target": np.sum(c / 2j, axis=0) * dt,
        "qv": np.sum(dth ** 2, axis=0),
        "qv_target": 0.5 * np.sum(np.abs(c) ** 2, axis=0) * dt,
    }
    for key in ("theta_xi_star", "theta_xi", "qv"):
        target = report[key + "_target"]
        with np.errstate(divide="ignore", invalid="ignore"):
            report[key + "_rel_error"] = np.abs(report[key] - target) / np.abs(target)
    return report
