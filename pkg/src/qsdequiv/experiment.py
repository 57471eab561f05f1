"""Experiment orchestration and delimited-text export.

Trajectories run in fixed chunks of ``batch_size`` (optionally on a process
pool) and ensemble statistics are merged in trajectory-index order, so the
output bytes depend only on the config and seed.
"""
from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .belavkin import run_belavkin
from .canonical import canonical_coefficients, coupled_pair_run
from .config import ExperimentConfig, config_from_dict
from .feedback import closed_loop_run
from .filters import proposition2_check
from .gisin import run_gisin
from .lindblad import expectation_series, lindblad_propagate, pure_density
from .linalg import ModelSpec
from .noise import coarsen, complex_from_real, ensemble_real_increments
from .records import IntegrationError
from .studies import detuned_gp_distance, fit_order

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_TOLERANCE = 4
EXIT_IO = 5


class RunningStats:
    """Mean and variance over the trajectory axis, merged chunk by chunk (Chan et al.)."""

    def __init__(self):
        self.n = 0
        self.mean = None
        self.m2 = None

    def add(self, values):
        values = np.asarray(values, dtype=float)
        nb = values.shape[1]
        mb = values.mean(axis=1)
        m2b = ((values - mb[:, None]) ** 2).sum(axis=1)
        if self.n == 0:
            self.n, self.mean, self.m2 = nb, mb, m2b
            return
        n = self.n + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * nb / n
        self.m2 = self.m2 + m2b + delta ** 2 * self.n * nb / n
        self.n = n

    def sem(self):
        if self.n < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(self.m2 / (self.n - 1) / self.n)


@dataclass
class ExperimentResult:
    status: int
    files: list
    summary: dict = field(default_factory=dict)


def _fmt(x):
    return format(float(x), ".17g")


def write_table(path, header, rows, meta):
    with open(path, "w", newline="\n") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}: {value}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _real_channels(cfg):
    if cfg.mode == "gisin":
        return 2 * len(cfg.collapse)
    if cfg.mode in ("canonical-pair", "feedback", "prop2-check"):
        return int(cfg.canonical.get("n", 2))
    return len(cfg.collapse)


def simulate_chunk(raw, start, stop, keep_states=False):
    try:
        return _simulate_chunk(raw, start, stop, keep_states)
    except IntegrationError as exc:
        traj = None if exc.trajectory is None else start + exc.trajectory
        raise IntegrationError(exc.reason, exc.step, traj) from exc


def _simulate_chunk(raw, start, stop, keep_states):
    """Per-trajectory time series for trajectories ``start..stop-1``.

    Returns ``(columns, states, increments)`` with columns of shape
    ``(n_times, n_batch)``.
    """
    cfg = config_from_dict(raw)
    idx = range(start, stop)
    path = ensemble_real_increments(_real_channels(cfg), cfg.n_steps, cfg.dt, cfg.base_seed, idx)
    H = cfg.hamiltonian
    obs = cfg.observables
    cols = {}
    if cfg.mode == "belavkin":
        rec = run_belavkin(ModelSpec(tuple(cfg.collapse), H), cfg.psi0, path, observables=obs,
                           keep_states=keep_states)
        states, increments = rec.states, path.increments
    elif cfg.mode == "gisin":
        cpath = complex_from_real(path).conj()
        rec = run_gisin(ModelSpec(tuple(cfg.collapse), H), cfg.psi0, cpath, observables=obs,
                        keep_states=keep_states)
        states, increments = rec.states, cpath.increments
    elif cfg.mode == "canonical-pair":
        z = canonical_coefficients(int(cfg.canonical.get("n", 2)),
                                   float(cfg.canonical.get("phi", 0.0)),
                                   int(cfg.canonical.get("sign", 1)))
        run = coupled_pair_run(cfg.collapse[0], H, z, path, cfg.psi0, observables=obs,
                               keep_states=keep_states)
        rec = run.belavkin
        states, increments = rec.states, path.increments
        cols.update(residual=run.residual, theta=run.theta, qv=run.quadratic_variation,
                    infidelity=run.infidelity)
    elif cfg.mode == "feedback":
        rec, report = closed_loop_run(cfg.collapse[0], H, path, cfg.psi0, observables=obs,
                                      keep_states=keep_states)
        states, increments = rec.states, path.increments
        alpha = rec.series["alpha"]
        cols.update(residual=report.residual, alpha1_im=alpha[..., 0].imag,
                    alpha2_im=alpha[..., 1].imag)
    else:
        raise ValueError(f"mode {cfg.mode} is not trajectory-based")
    columns = {name: v.real for name, v in rec.expectations.items()}
    columns.update(cols)
    return columns, states, increments


def _chunk_bounds(cfg):
    return [(s, min(s + cfg.batch_size, cfg.n_traj)) for s in range(0, cfg.n_traj, cfg.batch_size)]


def _iter_chunks(cfg, keep_states):
    bounds = _chunk_bounds(cfg)
    if cfg.workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(simulate_chunk, cfg.raw, a, b, keep_states) for a, b in bounds]
            for (a, b), fut in zip(bounds, futures):
                yield a, b, fut.result()
    else:
        for a, b in bounds:
            yield a, b, simulate_chunk(cfg.raw, a, b, keep_states)


def _meta(cfg, **extra):
    meta = {
        "generator": "qsdequiv",
        "mode": cfg.mode,
        "config_sha256": cfg.digest(),
        "base_seed": cfg.base_seed,
        "dt": _fmt(cfg.dt),
        "t_max": _fmt(cfg.t_max),
        "n_traj": cfg.n_traj,
    }
    meta.update(extra)
    meta["config"] = json.dumps(cfg.identity(), sort_keys=True, separators=(",", ":"))
    return meta


def _run_trajectories(cfg, out, dump_paths, dump_states, per_trajectory):
    times = cfg.dt * np.arange(cfg.n_steps + 1)
    stats = {}
    files = []
    max_residual = 0.0
    for a, b, (columns, states, increments) in _iter_chunks(cfg, dump_states):
        for name, values in columns.items():
            stats.setdefault(name, RunningStats()).add(values)
        if "residual" in columns:
            max_residual = max(max_residual, float(np.max(columns["residual"])))
        for j, i in enumerate(range(a, b)):
            if per_trajectory or dump_states:
                header = ["t"] + list(columns)
                data = [times] + [columns[n][:, j] for n in columns]
                if dump_states:
                    for k in range(states.shape[-1]):
                        header += [f"psi{k}_re", f"psi{k}_im"]
                        data += [states[:, j, k].real, states[:, j, k].imag]
                p = os.path.join(out, f"traj_{i:05d}.csv")
                write_table(p, header, np.column_stack(data), _meta(cfg, trajectory_index=i))
                files.append(p)
            if dump_paths:
                inc = increments[:, j]
                if np.iscomplexobj(inc):
                    header = ["t"] + [f"dxi_star{k}_{part}" for k in range(inc.shape[-1])
                                      for part in ("re", "im")]
                    data = np.column_stack([times[:-1]] + [f(inc[:, k]) for k in range(inc.shape[-1])
                                                           for f in (np.real, np.imag)])
                else:
                    header = ["t"] + [f"dI{k}" for k in range(inc.shape[-1])]
                    data = np.column_stack([times[:-1], inc])
                p = os.path.join(out, f"paths_{i:05d}.csv")
                write_table(p, header, data, _meta(cfg, trajectory_index=i))
                files.append(p)
    header = ["t"]
    data = [times]
    for name, st in stats.items():
        header += [f"{name}_mean", f"{name}_sem"]
        data += [st.mean, st.sem()]
    summary = {"max_residual": max_residual} if "residual" in stats else {}
    return header, np.column_stack(data), files, summary


def run_experiment(cfg: ExperimentConfig, dump_paths=False, dump_states=False):
    """Run the configured mode and write ``summary.csv`` (plus optional per-trajectory files)."""
    out = cfg.output_path
    os.makedirs(out, exist_ok=True)
    per_trajectory = bool(cfg.raw.get("per_trajectory", False))
    summary = {}
    extra_meta = {}
    files = []
    status = EXIT_OK
    if cfg.mode == "lindblad":
        times = cfg.dt * np.arange(cfg.n_steps + 1)
        rhos = lindblad_propagate(ModelSpec(tuple(cfg.collapse), cfg.hamiltonian),
                                  pure_density(cfg.psi0), times)
        header, data = ["t"], [times]
        for name, X in cfg.observables.items():
            header += [f"{name}_mean", f"{name}_sem"]
            data += [expectation_series(rhos, X).real, np.zeros(len(times))]
        rows = np.column_stack(data)
    elif cfg.mode == "detuning-sweep":
        omegas = [float(o) for o in cfg.detuning.get("omegas", [10.0, 30.0, 100.0])]
        phi = float(cfg.detuning.get("phi", 0.0))
        stats = [RunningStats() for _ in omegas]
        for a, b in _chunk_bounds(cfg):
            path = ensemble_real_increments(1, cfg.n_steps, cfg.dt, cfg.base_seed, range(a, b))
            for st, om in zip(stats, omegas):
                d = detuned_gp_distance(cfg.collapse[0], cfg.hamiltonian, om, path, cfg.psi0, phi)
                st.add(d[None, :])
        header = ["omega", "distance_mean", "distance_sem"]
        rows = np.array([[om, st.mean[0], st.sem()[0]] for om, st in zip(omegas, stats)])
        summary["distance"] = rows[:, 1].tolist()
        summary["monotone"] = bool(np.all(np.diff(rows[:, 1]) <= 0))
        extra_meta["monotone_non_increasing"] = summary["monotone"]
    elif cfg.mode == "prop2-check":
        X = next(iter(cfg.observables.values()))
        stats = [RunningStats() for _ in cfg.refinement]
        dts = [cfg.dt * f for f in cfg.refinement]
        for a, b in _chunk_bounds(cfg):
            fine = ensemble_real_increments(2, cfg.n_steps, cfg.dt, cfg.base_seed, range(a, b))
            for st, f in zip(stats, cfg.refinement):
                st.add(proposition2_check(cfg.collapse[0], cfg.hamiltonian, X, coarsen(fine, f),
                                          cfg.psi0)[None, :])
        header = ["dt", "max_dev_mean", "max_dev_sem"]
        rows = np.array([[d, st.mean[0], st.sem()[0]] for d, st in zip(dts, stats)])
        order = fit_order(dts, rows[:, 1]) if len(dts) > 1 else float("nan")
        summary.update(order=order, max_dev=rows[:, 1].tolist())
        extra_meta["observable"] = next(iter(cfg.observables))
        extra_meta["fitted_order"] = _fmt(order)
        if cfg.tolerance is not None and rows[np.argmin(dts), 1] > cfg.tolerance:
            status = EXIT_TOLERANCE
    else:
        header, rows, files, summary = _run_trajectories(cfg, out, dump_paths, dump_states,
                                                         per_trajectory)
        if cfg.tolerance is not None and summary.get("max_residual", 0.0) > cfg.tolerance:
            log.warning("max residual %.3g exceeds tolerance %.3g",
                        summary["max_residual"], cfg.tolerance)
            status = EXIT_TOLERANCE
    path = os.path.join(out, "summary.csv")
    write_table(path, header, rows, _meta(cfg, **extra_meta))
    return ExperimentResult(status, [path] + files, summary)


def run_experiment_safe(cfg, **kwargs):
    """``run_experiment`` with failures mapped to exit statuses."""
    try:
        return run_experiment(cfg, **kwargs)
    except (IntegrationError, RuntimeError, FloatingPointError) as exc:
        log.error("runtime failure: %s", exc)
        return ExperimentResult(EXIT_RUNTIME, [], {"error": str(exc)})
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return ExperimentResult(EXIT_IO, [], {"error": str(exc)})
