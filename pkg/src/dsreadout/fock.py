"""Fermionic modes via Jordan-Wigner strings, and initial density matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Hashable, Union

import numpy as np

Label = Hashable


@dataclass(frozen=True)
class FockBasis:
    """Occupation-number basis over labelled modes.

    ``ordering[k]`` is the mode carried by bit k (k = 0 is the most significant
    bit and has no Jordan-Wigner string). Basis index ``i`` has mode
    ``ordering[k]`` occupied iff bit ``n_modes - 1 - k`` of ``i`` is set.
    """

    ordering: tuple

    def __post_init__(self):
        if len(set(self.ordering)) != len(self.ordering):
            raise ValueError(f"ordering has repeated labels: {self.ordering}")

    @classmethod
    def default(cls) -> "FockBasis":
        return cls(("D", 1, 2))

    @classmethod
    def for_chain(cls, n_sites: int) -> "FockBasis":
        return cls(("D",) + tuple(range(1, n_sites + 1)))

    @property
    def n_modes(self) -> int:
        return len(self.ordering)

    @property
    def dim(self) -> int:
        return 2**self.n_modes

    def position(self, label: Label) -> int:
        return self.ordering.index(label)

    def index(self, occupied) -> int:
        """Basis index of the state with the given labels occupied."""
        i = 0
        for label in occupied:
            i |= 1 << (self.n_modes - 1 - self.position(label))
        return i

    def occupations(self, label: Label) -> np.ndarray:
        """Occupation (0/1) of ``label`` for every basis state."""
        shift = self.n_modes - 1 - self.position(label)
        return (np.arange(self.dim) >> shift) & 1

    def number_per_state(self) -> np.ndarray:
        return np.array([bin(i).count("1") for i in range(self.dim)])


_SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]])
_Z = np.diag([1.0, -1.0])


@lru_cache(maxsize=32)
def _jw_operators(n_modes: int) -> tuple:
    ops = []
    for k in range(n_modes):
        op = np.ones((1, 1))
        for m in range(n_modes):
            factor = _Z if m < k else _SIGMA_MINUS if m == k else np.eye(2)
            op = np.kron(op, factor)
        op.setflags(write=False)
        ops.append(op)
    return tuple(ops)


def mode_operators(basis: FockBasis) -> list[np.ndarray]:
    """Annihilation matrices, listed in ``basis.ordering`` order."""
    return [op.astype(complex) for op in _jw_operators(basis.n_modes)]


def operators_by_label(basis: FockBasis) -> dict:
    return dict(zip(basis.ordering, mode_operators(basis)))


def number_operator(basis: FockBasis) -> np.ndarray:
    return np.diag(basis.number_per_state().astype(complex))


# --- initial-state specifications -------------------------------------------


@dataclass(frozen=True)
class Ground:
    pass


@dataclass(frozen=True)
class SiteExcited:
    n: int


@dataclass(frozen=True)
class Stationary:
    n: int


@dataclass(frozen=True)
class Superposition:
    theta: float
    phi: float = 0.0


@dataclass(frozen=True)
class BothExcited:
    pass


@dataclass(frozen=True)
class DSExcited:
    pass


InitialStateSpec = Union[Ground, SiteExcited, Stationary, Superposition, BothExcited, DSExcited]


def one_excitation_amplitudes(spec: InitialStateSpec, params) -> np.ndarray | None:
    """Amplitudes over sites (1, 2) for one-excitation specs, else None."""
    from .model import stationary_states

    if isinstance(spec, SiteExcited):
        if spec.n not in (1, 2):
            raise ValueError(f"site must be 1 or 2, got {spec.n}")
        amp = np.zeros(2, dtype=complex)
        amp[spec.n - 1] = 1.0
        return amp
    if isinstance(spec, Stationary):
        if spec.n not in (1, 2):
            raise ValueError(f"stationary state must be 1 or 2, got {spec.n}")
        pair = stationary_states(params)
        return (pair.psi1 if spec.n == 1 else pair.psi2).astype(complex)
    if isinstance(spec, Superposition):
        pair = stationary_states(params)
        return math.cos(spec.theta) * pair.psi1 + np.exp(1j * spec.phi) * math.sin(spec.theta) * pair.psi2
    return None


def state_vector(spec: InitialStateSpec, params, basis: FockBasis | None = None) -> np.ndarray:
    basis = basis or FockBasis.default()
    vac = np.zeros(basis.dim, dtype=complex)
    vac[0] = 1.0
    ops = operators_by_label(basis)
    if isinstance(spec, Ground):
        return vac
    if isinstance(spec, BothExcited):
        return ops[1].conj().T @ ops[2].conj().T @ vac
    if isinstance(spec, DSExcited):
        if "D" not in ops:
            raise ValueError("DSExcited needs a basis with a DS mode")
        return ops["D"].conj().T @ vac
    amp = one_excitation_amplitudes(spec, params)
    if amp is None:
        raise TypeError(f"unsupported initial state {spec!r}")
    return amp[0] * (ops[1].conj().T @ vac) + amp[1] * (ops[2].conj().T @ vac)


def initial_state(spec: InitialStateSpec, params, basis: FockBasis | None = None) -> np.ndarray:
    """Pure-state density matrix for ``spec``; the DS (if present) starts empty
    except for ``DSExcited``."""
    psi = state_vector(spec, params, basis)
    return np.outer(psi, psi.conj())


def check_density_matrix(rho: np.ndarray, tol: float = 1e-12, eig_tol: float = 1e-10) -> None:
    """Raise ValueError if ``rho`` is not Hermitian, unit-trace and positive."""
    herm = np.linalg.norm(rho - rho.conj().T)
    if herm > tol:
        raise ValueError(f"not Hermitian: |rho - rho^H| = {herm:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1) > tol:
        raise ValueError(f"trace {tr} differs from 1")
    lo = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if lo < -eig_tol:
        raise ValueError(f"negative eigenvalue {lo:.3e}")
