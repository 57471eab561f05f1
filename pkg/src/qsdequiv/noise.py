"""Seeded real and complex Wiener increments.

Each trajectory draws from its own ``numpy`` generator, a PCG64 stream
seeded by ``SeedSequence(base_seed, spawn_key=(trajectory_index,))``.
Gaussian variates come from ``Generator.standard_normal`` (numpy's
ziggurat sampler) in C order over ``(n_steps, n_channels)``; regression
outputs depend on this choice, so do not change it.

Paths are generated whole, never streamed, so the same increments can
drive two integrators.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

COEFF_TOL = 1e-12


@dataclass(frozen=True)
class NoisePath:
    """Per-step noise increments, shape ``(n_steps, ..., n_channels)``.

    Extra middle axes hold an ensemble of trajectories sharing one grid.
    For complex paths, ``conjugate`` marks a stream of ``dxi*`` rather than
    ``dxi``.
    """

    increments: np.ndarray
    dt: float
    base_seed: Optional[int] = None
    trajectory_index: object = None
    conjugate: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        inc = np.asarray(self.increments)
        if inc.ndim < 2:
            raise ValueError("increments must have shape (n_steps, ..., n_channels)")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        inc = inc.copy()
        inc.setflags(write=False)
        object.__setattr__(self, "increments", inc)

    @property
    def n_steps(self):
        return self.increments.shape[0]

    @property
    def n_channels(self):
        return self.increments.shape[-1]

    @property
    def batch_shape(self):
        return self.increments.shape[1:-1]

    @property
    def is_complex(self):
        return np.iscomplexobj(self.increments)

    def times(self, t0=0.0):
        return t0 + self.dt * np.arange(self.n_steps + 1)

    def conj(self):
        """The complex-conjugate stream, with the conjugation flag flipped."""
        if not self.is_complex:
            raise ValueError("conj() is only defined for complex paths")
        return NoisePath(np.conj(self.increments), self.dt, self.base_seed,
                         self.trajectory_index, not self.conjugate, dict(self.meta))


def trajectory_rng(base_seed, trajectory_index):
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(trajectory_index),))
    return np.random.Generator(np.random.PCG64(ss))


def real_increments(n_channels, n_steps, dt, seed_pair):
    """Independent real Wiener increments ``dI_k ~ N(0, dt)``.

    ``seed_pair`` is ``(base_seed, trajectory_index)``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if n_steps < 1 or n_channels < 1:
        raise ValueError("n_steps and n_channels must be >= 1")
    base_seed, index = seed_pair
    rng = trajectory_rng(base_seed, index)
    inc = np.sqrt(dt) * rng.standard_normal((n_steps, n_channels))
    return NoisePath(inc, dt, int(base_seed), int(index))


def ensemble_real_increments(n_channels, n_steps, dt, base_seed, indices: Sequence[int]):
    """Stack per-trajectory paths into one ``(n_steps, n_traj, n_channels)`` path.

    Trajectory ``i`` of the result is bit-identical to
    ``real_increments(..., (base_seed, indices[i]))``.
    """
    indices = [int(i) for i in indices]
    paths = [real_increments(n_channels, n_steps, dt, (base_seed, i)).increments for i in indices]
    return NoisePath(np.stack(paths, axis=1), dt, int(base_seed), tuple(indices))


def complex_from_real(path: NoisePath):
    """Pair real channels into complex ones: ``dxi_k = (dB_{2k-1} + i dB_{2k}) / sqrt(2)``."""
    if path.is_complex:
        raise ValueError("expected a real path")
    if path.n_channels % 2:
        raise ValueError(f"need an even number of real channels, got {path.n_channels}")
    inc = path.increments
    xi = (inc[..., 0::2] + 1j * inc[..., 1::2]) / np.sqrt(2.0)
    return NoisePath(xi, path.dt, path.base_seed, path.trajectory_index, False)


def check_canonical_coefficients(z, tol=COEFF_TOL):
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1 or z.size < 1:
        raise ValueError("z must be a non-empty vector")
    s1 = np.sum(np.abs(z) ** 2)
    s2 = np.sum(z ** 2)
    if abs(s1 - 1.0) > tol:
        raise ValueError(f"sum |z_k|^2 = {s1:.15g}, must be 1")
    if abs(s2) > tol:
        raise ValueError(f"|sum z_k^2| = {abs(s2):.3g}, must be 0")
    return z


def canonical_noise_map(z, real_path: NoisePath):
    """Conjugate complex stream ``dxi* = sum_k z_k dI_k``.

    ``z`` must satisfy ``sum |z_k|^2 = 1`` and ``sum z_k^2 = 0``; the result
    then has the increment statistics of a standard complex Wiener process.
    A ``CanonicalCoefficients`` instance is accepted in place of the vector.
    """
    z = check_canonical_coefficients(getattr(z, "z", z))
    if real_path.is_complex:
        raise ValueError("expected a real path")
    if real_path.n_channels != z.size:
        raise ValueError(f"path has {real_path.n_channels} channels, z has {z.size}")
    xi_star = real_path.increments @ z
    return NoisePath(xi_star[..., None], real_path.dt, real_path.base_seed,
                     real_path.trajectory_index, True)


def coarsen(path: NoisePath, factor: int):
    """Sum blocks of ``factor`` consecutive increments (same Brownian path, step ``factor*dt``)."""
    factor = int(factor)
    if factor < 1 or path.n_steps % factor:
        raise ValueError(f"cannot coarsen {path.n_steps} steps by {factor}")
    inc = path.increments
    coarse = inc.reshape((path.n_steps // factor, factor) + inc.shape[1:]).sum(axis=1)
    return NoisePath(coarse, path.dt * factor, path.base_seed, path.trajectory_index,
                     path.conjugate, dict(path.meta))


def take_trajectory(path: NoisePath, i):
    """Single-trajectory view of an ensemble path."""
    idx = path.trajectory_index[i] if isinstance(path.trajectory_index, tuple) else path.trajectory_index
    return NoisePath(path.increments[:, i], path.dt, path.base_seed, idx, path.conjugate)
