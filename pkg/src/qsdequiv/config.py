"""YAML experiment configuration.

Matrices are lists of rows. Entries are numbers or strings accepted by
``complex()``, e.g. ``"0.5-1j"``. A minimal file::

    mode: canonical-pair
    model:
      preset: driven-qubit
      params: {gamma: 1.0, delta: 1.0, rabi: 2.0}
    dt: 1.0e-3
    t_max: 5.0
    n_traj: 1
    base_seed: 1234
    observables: [sigma_z, sigma_x]
    output_path: out/pair
    tolerance: 0.1

Inline models replace ``preset`` with ``collapse`` (list of matrices) and
``hamiltonian``, or with a ``network`` block (see ``slh.build_network``).
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .linalg import (EXCITED, GROUND, SIGMA_MINUS, SIGMA_X, SIGMA_Y, SIGMA_Z, basis, dag,
                     destroy, is_hermitian)
from .slh import build_network

MODES = ("belavkin", "gisin", "canonical-pair", "feedback", "lindblad", "detuning-sweep",
         "prop2-check")
SINGLE_COLLAPSE_MODES = ("canonical-pair", "feedback", "prop2-check", "detuning-sweep")

PRESET_DEFAULTS = {
    "qubit-decay": {"gamma": 1.0},
    "driven-qubit": {"gamma": 1.0, "delta": 1.0, "rabi": 2.0},
    "cavity-truncated": {"levels": 4, "kappa": 1.0, "delta": 0.5, "drive": 0.5},
}


class ConfigError(ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def _matrix(value, field, dim=None):
    try:
        arr = np.array([[complex(x) for x in row]
                        for row in value], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ConfigError(field, f"not a matrix of numbers ({exc})") from None
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ConfigError(field, f"expected a non-empty square matrix, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ConfigError(field, f"dimension {arr.shape[0]} does not match model dimension {dim}")
    return arr


def _vector(value, field):
    try:
        return np.array([complex(x) for x in value], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ConfigError(field, f"not a vector of numbers ({exc})") from None


def matrix_to_yaml(op):
    """Exact, ``complex()``-parseable form of a matrix."""
    return [[float(x.real) if x.imag == 0 else repr(complex(x)) for x in row]
            for row in np.asarray(op, dtype=complex)]


def expand_preset(name, params=None):
    """``(collapse_ops, hamiltonian)`` for a named preset."""
    if name not in PRESET_DEFAULTS:
        raise ConfigError("model.preset", f"unknown preset {name!r}; "
                          f"choose from {sorted(PRESET_DEFAULTS)}")
    p = dict(PRESET_DEFAULTS[name])
    unknown = set(params or {}) - set(p)
    if unknown:
        raise ConfigError("model.params", f"unknown parameter(s) {sorted(unknown)} for {name}")
    p.update(params or {})
    if name in ("qubit-decay", "driven-qubit"):
        R = np.sqrt(p["gamma"]) * SIGMA_MINUS
        H = np.zeros((2, 2), dtype=complex)
        if name == "driven-qubit":
            H = 0.5 * p["delta"] * SIGMA_Z + 0.5 * p["rabi"] * SIGMA_X
        return [R], H
    n = int(p["levels"])
    if n < 2:
        raise ConfigError("model.params.levels", "need at least 2 levels")
    a = destroy(n)
    H = p["delta"] * dag(a) @ a + p["drive"] * (a + dag(a))
    return [np.sqrt(p["kappa"]) * a], H


def builtin_observables(dim):
    ops = {"identity": np.eye(dim, dtype=complex)}
    if dim == 2:
        ops.update(sigma_x=SIGMA_X, sigma_y=SIGMA_Y, sigma_z=SIGMA_Z)
    a = destroy(dim)
    ops.update(number=dag(a) @ a, x_quadrature=a + dag(a), p_quadrature=-1j * (a - dag(a)))
    return ops


@dataclass
class ExperimentConfig:
    mode: str
    raw: dict  # normalized plain-data form; hashed and serialized
    collapse: list
    hamiltonian: np.ndarray
    psi0: np.ndarray
    dt: float
    t_max: float
    n_traj: int
    base_seed: int
    observables: dict
    output_path: str
    tolerance: Optional[float] = None
    batch_size: int = 256
    workers: int = 1
    canonical: dict = field(default_factory=dict)
    detuning: dict = field(default_factory=dict)
    refinement: list = field(default_factory=lambda: [4, 2, 1])

    @property
    def dim(self):
        return self.hamiltonian.shape[0]

    @property
    def n_steps(self):
        return int(round(self.t_max / self.dt))

    def identity(self):
        """The config minus ``output_path``: where results go does not change them."""
        return {k: v for k, v in self.raw.items() if k != "output_path"}

    def digest(self):
        text = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _positive(raw, key, kind=float):
    if key not in raw:
        raise ConfigError(key, "missing")
    try:
        v = kind(raw[key])
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a {kind.__name__}") from None
    if not v > 0:
        raise ConfigError(key, f"must be positive, got {raw[key]!r}")
    return v


def _state(value, dim):
    if value is None:
        return basis(dim, 0)
    if value == "excited":
        if dim != 2:
            raise ConfigError("psi0", "'excited' is only defined for qubits")
        return EXCITED.copy()
    if value == "ground":
        return GROUND.copy() if dim == 2 else basis(dim, 0)
    if isinstance(value, str) and value.startswith("fock:"):
        k = int(value[5:])
        if not 0 <= k < dim:
            raise ConfigError("psi0", f"fock level {k} outside dimension {dim}")
        return basis(dim, k)
    if isinstance(value, str):
        raise ConfigError("psi0", f"unknown state name {value!r}")
    v = _vector(value, "psi0")
    if v.size != dim:
        raise ConfigError("psi0", f"has {v.size} amplitudes, model dimension is {dim}")
    n = np.linalg.norm(v)
    if n == 0:
        raise ConfigError("psi0", "zero vector")
    return v / n


def _model(raw_model):
    if not isinstance(raw_model, dict):
        raise ConfigError("model", "expected a mapping")
    if "preset" in raw_model:
        collapse, H = expand_preset(raw_model["preset"], raw_model.get("params"))
    elif "network" in raw_model:
        net = raw_model["network"]
        dim = int(raw_model.get("dim", 0)) or None
        if dim is None:
            raise ConfigError("model.dim", "required with a network description")
        try:
            desc = {"components": {}, "series": list(net["series"])}
            for name, spec in net["components"].items():
                f = f"model.network.components.{name}"
                s = {"type": spec.get("type")}
                if "L" in spec:
                    s["L"] = [_matrix(m, f"{f}.L[{i}]", dim) for i, m in enumerate(spec["L"])]
                if "H" in spec:
                    s["H"] = _matrix(spec["H"], f"{f}.H", dim)
                if "S" in spec:
                    s["S"] = _matrix(spec["S"], f"{f}.S")
                if "U" in spec:
                    s["U"] = _matrix(spec["U"], f"{f}.U")
                if "beta" in spec:
                    s["beta"] = _vector(spec["beta"], f"{f}.beta")
                if "epsilon" in spec:
                    s["epsilon"] = float(spec["epsilon"])
                desc["components"][name] = s
            G = build_network(desc, dim)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("model.network", str(exc)) from None
        _, Ls, H = G.at(0.0)
        collapse = list(Ls)
    else:
        if "collapse" not in raw_model:
            raise ConfigError("model", "needs preset, collapse or network")
        if "hamiltonian" not in raw_model:
            raise ConfigError("model.hamiltonian", "missing")
        H = _matrix(raw_model["hamiltonian"], "model.hamiltonian")
        collapse = [_matrix(m, f"model.collapse[{i}]", H.shape[0])
                    for i, m in enumerate(raw_model["collapse"])]
    if not is_hermitian(H):
        raise ConfigError("model.hamiltonian", "not hermitian")
    return collapse, np.asarray(H, dtype=complex)


def _observables(value, dim):
    library = builtin_observables(dim)
    out = {}
    items = value if isinstance(value, list) else [{k: v} for k, v in (value or {}).items()]
    for i, item in enumerate(items):
        f = f"observables[{i}]"
        if isinstance(item, str):
            if item not in library:
                raise ConfigError(f, f"unknown observable {item!r} for dimension {dim}")
            out[item] = library[item]
        elif isinstance(item, dict) and len(item) == 1:
            (name, mat), = item.items()
            X = _matrix(mat, f"{f}.{name}", dim)
            if not is_hermitian(X):
                raise ConfigError(f"{f}.{name}", "observable must be hermitian")
            out[str(name)] = X
        else:
            raise ConfigError(f, "expected a name or a single-entry {name: matrix} mapping")
    return out


def _normalize_raw(raw):
    """Plain-data copy with numeric matrices written exactly; used for hashing."""
    def conv(x):
        if isinstance(x, dict):
            return {str(k): conv(v) for k, v in x.items()}
        if isinstance(x, np.ndarray):
            return conv(x.tolist())
        if isinstance(x, (list, tuple)):
            return [conv(v) for v in x]
        if isinstance(x, complex):
            return float(x.real) if x.imag == 0 else repr(x)
        if isinstance(x, (np.floating, np.integer, np.complexfloating)):
            return conv(x.item())
        return x
    return conv(raw)


def config_from_dict(raw):
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    raw = _normalize_raw(copy.deepcopy(raw))
    mode = raw.get("mode")
    if mode not in MODES:
        raise ConfigError("mode", f"unknown mode {mode!r}; choose from {list(MODES)}")
    if "model" not in raw:
        raise ConfigError("model", "missing")
    collapse, H = _model(raw["model"])
    dim = H.shape[0]
    if mode in SINGLE_COLLAPSE_MODES and len(collapse) != 1:
        raise ConfigError("model.collapse", f"mode {mode} needs exactly one collapse operator")
    dt = _positive(raw, "dt")
    t_max = _positive(raw, "t_max")
    if t_max < dt:
        raise ConfigError("t_max", "must be >= dt")
    n_traj = _positive(raw, "n_traj", int) if "n_traj" in raw else 1
    try:
        base_seed = int(raw.get("base_seed", 0))
    except (TypeError, ValueError):
        raise ConfigError("base_seed", "expected an integer") from None
    tolerance = raw.get("tolerance")
    if tolerance is not None:
        tolerance = _positive(raw, "tolerance")
    observables = _observables(raw.get("observables", ["identity"]), dim)
    if not observables:
        raise ConfigError("observables", "need at least one observable")
    cfg = ExperimentConfig(
        mode=mode, raw=raw, collapse=collapse, hamiltonian=H,
        psi0=_state(raw.get("psi0"), dim), dt=dt, t_max=t_max, n_traj=n_traj,
        base_seed=base_seed, observables=observables,
        output_path=str(raw.get("output_path", "out")), tolerance=tolerance,
        batch_size=_positive(raw, "batch_size", int) if "batch_size" in raw else 256,
        workers=_positive(raw, "workers", int) if "workers" in raw else 1,
        canonical=dict(raw.get("canonical", {})),
        detuning=dict(raw.get("detuning", {})),
        refinement=[int(f) for f in raw.get("refinement", [4, 2, 1])],
    )
    if any(f < 1 for f in cfg.refinement):
        raise ConfigError("refinement", "factors must be positive integers")
    if abs(cfg.n_steps * dt - t_max) > 1e-9 * t_max:
        raise ConfigError("t_max", "must be an integer multiple of dt")
    if mode == "prop2-check" and cfg.n_steps % int(np.lcm.reduce(cfg.refinement)):
        raise ConfigError("refinement", "every factor must divide the number of steps")
    if mode == "detuning-sweep":
        omegas = cfg.detuning.get("omegas", [10.0, 30.0, 100.0])
        if not omegas or any(float(o) <= 0 for o in omegas):
            raise ConfigError("detuning.omegas", "need positive detunings")
        if dt > 2 * np.pi / (50 * max(float(o) for o in omegas)) * (1 + 1e-12):
            raise ConfigError("dt", "must resolve the fastest detuning: dt <= 2 pi / (50 max omega)")
    return cfg


def parse_config(text):
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<root>", f"invalid YAML: {exc}") from None
    return config_from_dict(raw)


def serialize_config(cfg: ExperimentConfig):
    return yaml.safe_dump(cfg.raw, sort_keys=True)


def with_overrides(cfg: ExperimentConfig, **overrides):
    """Re-validate with top-level keys replaced (``None`` values ignored)."""
    raw = copy.deepcopy(cfg.raw)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(raw)
