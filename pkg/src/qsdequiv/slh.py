"""(S, L, H) triples, the series product, Weyl boxes and Euclidean-group elements.

Scattering matrices are stored as operator blocks of shape ``(n, n, d, d)``;
scalar unitaries are embedded as ``U (x) I``. Components may be constant
arrays or callables of time; composition of time-dependent triples is lazy.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .linalg import HERMITIAN_TOL, ModelSpec, as_operator, is_hermitian, is_unitary, op_imag

UNITARY_TOL = 1e-10


def _eval(x, t):
    return x(t) if callable(x) else x


def scalar_scattering(U, dim):
    U = np.asarray(U, dtype=complex)
    return np.einsum("jk,ab->jkab", U, np.eye(dim))


def _block_matrix(S):
    n, _, d, _ = S.shape
    return S.transpose(0, 2, 1, 3).reshape(n * d, n * d)


@dataclass(frozen=True)
class SLHTriple:
    S: Union[np.ndarray, Callable]
    L: tuple
    H: Union[np.ndarray, Callable]

    def __post_init__(self):
        object.__setattr__(self, "L", tuple(self.L))
        S, Ls, H = self.at(0.0)
        n, d = Ls.shape[0], H.shape[0]
        if S.shape != (n, n, d, d):
            raise ValueError(f"scattering has shape {S.shape}, expected {(n, n, d, d)}")
        if not is_unitary(_block_matrix(S), UNITARY_TOL):
            raise ValueError("scattering matrix is not unitary")
        if not is_hermitian(H, HERMITIAN_TOL):
            raise ValueError("hamiltonian is not hermitian")

    @classmethod
    def from_operators(cls, L, H=None, S=None, dim=None):
        """Build a triple; ``S`` may be a scalar ``n x n`` unitary (default identity)."""
        L = list(L)
        if dim is None:
            dim = np.shape(_eval(H, 0.0) if H is not None else _eval(L[0], 0.0))[0]
        n = len(L)
        if H is None:
            H = np.zeros((dim, dim), dtype=complex)
        if S is None:
            S = np.eye(n)
        if not callable(S) and np.ndim(S) == 2:
            S = scalar_scattering(S, dim)
        return cls(S, tuple(L), H)

    @property
    def n_channels(self):
        return len(self.L)

    @property
    def dim(self):
        return np.shape(_eval(self.H, 0.0))[0]

    @property
    def is_time_dependent(self):
        return callable(self.S) or callable(self.H) or any(callable(l) for l in self.L)

    def at(self, t):
        """Constant arrays ``(S, L, H)`` at time ``t``; ``L`` has shape ``(n, d, d)``."""
        H = as_operator(_eval(self.H, t))
        d = H.shape[0]
        Ls = (np.stack([as_operator(_eval(l, t), d) for l in self.L])
              if self.L else np.zeros((0, d, d), dtype=complex))
        S = np.asarray(_eval(self.S, t), dtype=complex)
        return S, Ls, H

    def model(self):
        """The ``(L, H)`` model whose Lindblad generator this triple defines."""
        return ModelSpec(self.L, self.H)


def _series_arrays(g2, g1):
    S2, L2, H2 = g2
    S1, L1, H1 = g1
    S = np.einsum("jlab,lkbc->jkac", S2, S1)
    L = L2 + np.einsum("jkab,kbc->jac", S2, L1)
    cross = np.einsum("jba,jkbc,kcd->ad", L2.conj(), S2, L1)
    H = H1 + H2 + op_imag(cross)
    return S, L, H


def series_product(G2: SLHTriple, G1: SLHTriple):
    """Feed the output of ``G1`` into ``G2``:
    ``(S2 S1, L2 + S2 L1, H1 + H2 + Im(L2* S2 L1))``.
    """
    if G2.n_channels != G1.n_channels:
        raise ValueError(f"channel mismatch: {G2.n_channels} vs {G1.n_channels}")
    if G2.dim != G1.dim:
        raise ValueError(f"dimension mismatch: {G2.dim} vs {G1.dim}")
    if not (G2.is_time_dependent or G1.is_time_dependent):
        S, L, H = _series_arrays(G2.at(0.0), G1.at(0.0))
        return SLHTriple(S, tuple(L), H)
    n = G1.n_channels

    def part(i, k=None):
        def f(t):
            out = _series_arrays(G2.at(t), G1.at(t))[i]
            return out if k is None else out[k]
        return f

    return SLHTriple(part(0), tuple(part(1, k) for k in range(n)), part(2))


def identity_triple(n, dim):
    return SLHTriple.from_operators([np.zeros((dim, dim))] * n, dim=dim)


def weyl_box(beta, dim):
    """Displacement component ``(I, beta(t), 0)``; ``beta`` is a vector or a callable."""
    I = np.eye(dim, dtype=complex)
    if callable(beta):
        n = len(np.atleast_1d(beta(0.0)))
        L = tuple((lambda t, k=k: np.asarray(beta(t))[k] * I) for k in range(n))
    else:
        beta = np.atleast_1d(np.asarray(beta, dtype=complex))
        n = beta.size
        L = tuple(b * I for b in beta)
    return SLHTriple(scalar_scattering(np.eye(n), dim), L, np.zeros((dim, dim), dtype=complex))


@dataclass(frozen=True)
class EuclideanElement:
    """Scalar rotation ``U``, displacement ``beta`` and energy shift ``epsilon``."""

    U: np.ndarray
    beta: Union[np.ndarray, Callable]
    epsilon: float = 0.0

    def __post_init__(self):
        U = np.asarray(self.U, dtype=complex)
        if not is_unitary(U, 1e-12):
            raise ValueError("U must be unitary")
        object.__setattr__(self, "U", U)
        if not callable(self.beta):
            b = np.asarray(self.beta, dtype=complex).reshape(U.shape[0])
            object.__setattr__(self, "beta", b)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @classmethod
    def rotation(cls, U):
        U = np.asarray(U, dtype=complex)
        return cls(U, np.zeros(U.shape[0]), 0.0)

    @classmethod
    def translation(cls, beta, epsilon=0.0):
        n = len(np.atleast_1d(beta(0.0) if callable(beta) else beta))
        return cls(np.eye(n), beta, epsilon)

    def as_triple(self, dim):
        box = weyl_box(self.beta, dim)
        H = self.epsilon * np.eye(dim, dtype=complex)
        return SLHTriple(scalar_scattering(self.U, dim), box.L, H)


def euclidean_apply(E: EuclideanElement, G: SLHTriple):
    """``E <| G``; leaves the Lindblad generator of ``G`` unchanged."""
    if E.U.shape[0] != G.n_channels:
        raise ValueError(f"channel mismatch: {E.U.shape[0]} vs {G.n_channels}")
    S = G.at(0.0)[0]
    if not np.allclose(S, scalar_scattering(np.eye(G.n_channels), G.dim), atol=1e-12):
        raise ValueError("euclidean_apply expects a non-scattering triple (S = I)")
    return series_product(E.as_triple(G.dim), G)


def build_network(description, dim):
    """Compose a declarative network.

    ``description`` has ``components`` (name -> spec) and ``series``, a list
    of component names ``[G_n, ..., G_1]`` read as ``G_n <| ... <| G_1``.
    Component specs carry already-numeric operators:

    - ``{"type": "system", "L": [...], "H": ..., "S": optional scalar unitary}``
    - ``{"type": "weyl", "beta": [...]}``
    - ``{"type": "euclidean", "U": ..., "beta": [...], "epsilon": ...}``
    """
    comps = {}
    for name, spec in description["components"].items():
        kind = spec.get("type")
        if kind == "system":
            comps[name] = SLHTriple.from_operators(spec["L"], spec.get("H"), spec.get("S"), dim)
        elif kind == "weyl":
            comps[name] = weyl_box(spec["beta"], dim)
        elif kind == "euclidean":
            n = len(spec["beta"]) if "beta" in spec else np.shape(spec["U"])[0]
            E = EuclideanElement(spec.get("U", np.eye(n)), spec.get("beta", np.zeros(n)),
                                 spec.get("epsilon", 0.0))
            comps[name] = E.as_triple(dim)
        else:
            raise ValueError(f"component {name!r}: unknown type {kind!r}")
    order = list(description["series"])
    if not order:
        raise ValueError("series must name at least one component")
    for name in order:
        if name not in comps:
            raise ValueError(f"series references unknown component {name!r}")
    G = comps[order[-1]]
    for name in reversed(order[:-1]):
        G = series_product(comps[name], G)
    return G
