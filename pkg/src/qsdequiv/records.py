from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import expectation

ZERO_NORM_TOL = 1e-12


class IntegrationError(RuntimeError):
    """A stochastic step produced an unusable state (usually dt too large)."""

    def __init__(self, message, step=None, trajectory=None):
        where = []
        if trajectory is not None:
            where.append(f"trajectory {trajectory}")
        if step is not None:
            where.append(f"step {step}")
        super().__init__(message + (f" ({', '.join(where)})" if where else ""))
        self.reason = message
        self.step = step
        self.trajectory = trajectory


def renormalize(vec, step=None):
    n = np.sqrt(np.einsum("...i,...i->...", vec.conj(), vec).real)
    if np.any(n < ZERO_NORM_TOL):
        bad = np.flatnonzero(np.atleast_1d(n) < ZERO_NORM_TOL)
        raise IntegrationError("state norm collapsed to zero", step,
                               int(bad[0]) if np.ndim(n) else None)
    return vec / n[..., None]


@dataclass
class TrajectoryRecord:
    """Output of one integrator run on a shared time grid.

    ``states`` has shape ``(n_times, ..., d)`` when kept. ``series`` holds
    per-time quantities such as ``lambda``, ``c``, ``theta`` or
    ``residual``, always with time on axis 0.
    """

    times: np.ndarray
    states: Optional[np.ndarray] = None
    expectations: dict = field(default_factory=dict)
    increments: Optional[np.ndarray] = None
    series: dict = field(default_factory=dict)

    @property
    def n_times(self):
        return len(self.times)

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    def expect(self, X):
        if self.states is None:
            raise ValueError("record was produced without states")
        return expectation(self.states, X)


def observe(observables, psi):
    return {name: expectation(psi, X) for name, X in (observables or {}).items()}


def check_grid(t_grid, n_steps, dt):
    t_grid = np.asarray(t_grid, dtype=float)
    if len(t_grid) != n_steps + 1:
        raise ValueError(f"time grid has {len(t_grid)} points, noise path has {n_steps} steps")
    if n_steps and not np.allclose(np.diff(t_grid), dt, rtol=1e-9, atol=1e-15):
        raise ValueError("time grid spacing does not match the noise path dt")
    return t_grid


class _Recorder:
    """Collects per-step snapshots into a TrajectoryRecord."""

    def __init__(self, n_steps, keep_states, observables):
        self.keep_states = keep_states
        self.observables = observables or {}
        self.states = [] if keep_states else None
        self.expect = {k: [] for k in self.observables}
        self.series = {}

    def add(self, psi, **series):
        if self.keep_states:
            self.states.append(psi)
        for k, X in self.observables.items():
            self.expect[k].append(expectation(psi, X))
        for k, v in series.items():
            self.series.setdefault(k, []).append(v)

    def finish(self, times, increments):
        return TrajectoryRecord(
            times=np.asarray(times),
            states=np.stack(self.states) if self.keep_states else None,
            expectations={k: np.stack(v) for k, v in self.expect.items()},
            increments=increments,
            series={k: np.stack(v) for k, v in self.series.items()},
        )
