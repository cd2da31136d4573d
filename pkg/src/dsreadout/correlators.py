"""Closed linear equations for the correlators of modes (1, 2, D).

One-body correlators ``rho[a, b] = <a_b^+ a_a>`` form a 3x3 matrix. With two
excitations the four-point correlators ``rho4[a, b, c, d] = <a_d^+ a_c^+ a_b a_a>``
are also needed; they are stored as a 3x3 matrix ``pair`` over the ordered
pairs (12), (1D), (2D):

    rho4[a, b, c, d] = s(a, b) * s(d, c) * pair[p(a, b), p(d, c)]

where ``s`` is the permutation sign and ``p`` the pair index. ``pair`` is the
two-excitation block of the density matrix in the basis a_a^+ a_b^+ |0>, so
antisymmetry is exact by construction.

Derivation (adjoint master equation, d<A>/dt = i<[H, A]> - gamma <n_D A + A n_D
- 2 a_D^+ A a_D>) gives for the one-body part

    d rho/dt = i[rho, h] - gamma (P rho + rho P)  + interaction terms,

with ``h`` the single-excitation Hamiltonian and ``P`` the projector on D, and
for the pair block the same form with the two-particle Hamiltonian. The
interaction J*Delta*n1*n2 feeds the pair block into the one-body block only.
Component vectors are row-major: one-body first, then pair.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .fock import BothExcited, FockBasis, Ground, InitialStateSpec, one_excitation_amplitudes, operators_by_label
from .model import ModelParams, one_excitation_hamiltonian

MODES = ("1", "2", "D")
PAIRS = ((0, 1), (0, 2), (1, 2))
_PAIR_INDEX = {p: k for k, p in enumerate(PAIRS)}
COND_LIMIT = 1e12


class IllConditionedWarning(RuntimeWarning):
    pass


def _sign(a: int, b: int) -> int:
    return (a < b) - (a > b)


def _pair(a: int, b: int) -> int:
    return _PAIR_INDEX[(min(a, b), max(a, b))]


def _liouvillian(h: np.ndarray, decay: np.ndarray, gamma: float) -> np.ndarray:
    """Row-major superoperator of  X -> i[X, h] - gamma (decay X + X decay)."""
    eye = np.eye(h.shape[0])
    return 1j * (np.kron(eye, h.T) - np.kron(h, eye)) - gamma * (np.kron(decay, eye) + np.kron(eye, decay))


def two_particle_hamiltonian(params: ModelParams) -> np.ndarray:
    """<ab|H|cd> over antisymmetric pairs |ab> = a_a^+ a_b^+ |0>."""
    h = one_excitation_hamiltonian(params)
    d = np.eye(3)
    h2 = np.zeros((3, 3))
    for p, (a, b) in enumerate(PAIRS):
        for q, (c, e) in enumerate(PAIRS):
            h2[p, q] = h[a, c] * d[b, e] + h[b, e] * d[a, c] - h[a, e] * d[b, c] - h[b, c] * d[a, e]
    h2[_pair(0, 1), _pair(0, 1)] += params.j * params.delta
    return h2


def _interaction_coupling(params: ModelParams) -> np.ndarray:
    """9x9 block: d rho[a, b]/dt contributions from the pair block (J*Delta terms)."""
    jdelta = params.j * params.delta
    c = np.zeros((9, 9), dtype=complex)
    d = np.eye(3)

    def add(row, a, b, cc, dd, coef):
        s = _sign(a, b) * _sign(dd, cc)
        if s:
            c[row, 3 * _pair(a, b) + _pair(dd, cc)] += coef * s

    one, two = 0, 1
    for a in range(3):
        for b in range(3):
            row = 3 * a + b
            # -i J Delta [(d_2b - d_2a) rho4[a,1,b,1] + (d_1b - d_1a) rho4[2,a,2,b]]
            add(row, a, one, b, one, -1j * jdelta * (d[two, b] - d[two, a]))
            add(row, two, a, two, b, -1j * jdelta * (d[one, b] - d[one, a]))
    return c


@dataclass
class Generator:
    """Constant-coefficient generator ``dx/dt = matrix @ x`` with component labels."""

    matrix: np.ndarray
    labels: list[str]
    params: ModelParams

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def eig(self):
        w, v = np.linalg.eig(self.matrix)
        return w, v, np.linalg.cond(v)

    def one_body_block(self) -> np.ndarray:
        return self.matrix[:9, :9]

    def pair_block(self) -> np.ndarray:
        if self.size < 18:
            raise ValueError("one-excitation generator has no pair block")
        return self.matrix[9:, 9:]


def _one_body_labels() -> list[str]:
    return [f"rho_{a}{b}" for a in MODES for b in MODES]


def _pair_labels() -> list[str]:
    names = [MODES[a] + MODES[b] for a, b in PAIRS]
    return [f"pair_({p})({q})" for p in names for q in names]


def one_excitation_generator(params: ModelParams) -> Generator:
    h = one_excitation_hamiltonian(params)
    proj_d = np.diag([0.0, 0.0, 1.0])
    return Generator(_liouvillian(h, proj_d, params.gamma), _one_body_labels(), params)


def two_excitation_generator(params: ModelParams) -> Generator:
    l1 = one_excitation_generator(params).matrix
    l2 = _liouvillian(two_particle_hamiltonian(params), np.diag([0.0, 1.0, 1.0]), params.gamma)
    m = np.zeros((18, 18), dtype=complex)
    m[:9, :9] = l1
    m[:9, 9:] = _interaction_coupling(params)
    m[9:, 9:] = l2
    return Generator(m, _one_body_labels() + _pair_labels(), params)


# --- states -----------------------------------------------------------------


@dataclass
class CorrelatorState:
    rho: np.ndarray
    pair: np.ndarray | None = None

    def vector(self) -> np.ndarray:
        parts = [self.rho.ravel()]
        if self.pair is not None:
            parts.append(self.pair.ravel())
        return np.concatenate(parts).astype(complex)

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "CorrelatorState":
        x = np.asarray(x)
        return cls(x[:9].reshape(3, 3), x[9:18].reshape(3, 3) if x.size >= 18 else None)

    @property
    def rho4(self) -> np.ndarray:
        """Full antisymmetric four-index tensor rho4[a, b, c, d]."""
        out = np.zeros((3, 3, 3, 3), dtype=complex)
        if self.pair is None:
            return out
        for a in range(3):
            for b in range(3):
                for c in range(3):
                    for d in range(3):
                        s = _sign(a, b) * _sign(d, c)
                        if s:
                            out[a, b, c, d] = s * self.pair[_pair(a, b), _pair(d, c)]
        return out


def initial_correlators(spec: InitialStateSpec, params: ModelParams, two_excitation: bool | None = None) -> CorrelatorState:
    """Correlators of the supported initial states (DS empty)."""
    if two_excitation is None:
        two_excitation = isinstance(spec, BothExcited)
    rho = np.zeros((3, 3), dtype=complex)
    pair = np.zeros((3, 3), dtype=complex) if two_excitation else None
    if isinstance(spec, BothExcited):
        if pair is None:
            raise ValueError("BothExcited needs the two-excitation generator")
        rho[0, 0] = rho[1, 1] = 1.0
        pair[0, 0] = 1.0
    elif isinstance(spec, Ground):
        pass
    else:
        amp = one_excitation_amplitudes(spec, params)
        if amp is None:
            raise TypeError(f"unsupported initial state {spec!r}")
        c = np.array([amp[0], amp[1], 0.0])
        rho = np.outer(c, c.conj())
    return CorrelatorState(rho, pair)


def correlators_from_density(rho_fock: np.ndarray, basis: FockBasis | None = None, two_excitation: bool = True) -> CorrelatorState:
    """Expectation values <a_b^+ a_a> and the pair block from a Fock-space density matrix."""
    basis = basis or FockBasis.default()
    ops = operators_by_label(basis)
    a = [ops[1], ops[2], ops["D"]]
    rho = np.array([[np.trace(a[j].conj().T @ a[i] @ rho_fock) for j in range(3)] for i in range(3)])
    if not two_excitation:
        return CorrelatorState(rho)
    # pair[p, q] = <A_q^+ A_p>, A_(ab) = a_b a_a
    pa = [a[y] @ a[x] for x, y in PAIRS]
    pair = np.array([[np.trace(pa[q].conj().T @ pa[p] @ rho_fock) for q in range(3)] for p in range(3)])
    return CorrelatorState(rho, pair)


# --- evolution ----------------------------------------------------------------


@dataclass
class CorrelatorTrajectory:
    times: np.ndarray
    x: np.ndarray  # (n_times, n_components)
    ds_integral: np.ndarray  # int_0^t rho_DD dt', exact
    used_fallback: bool = False
    condition: float = 1.0

    def state(self, k: int) -> CorrelatorState:
        return CorrelatorState.from_vector(self.x[k])

    def population(self, mode: str) -> np.ndarray:
        i = MODES.index(mode)
        return self.x[:, 4 * i].real


def _phi1(lam: np.ndarray, t: float) -> np.ndarray:
    """(exp(lam t) - 1) / lam, continued to t at lam = 0."""
    z = lam * t
    out = np.empty_like(z)
    small = np.abs(z) < 1e-8
    out[~small] = np.expm1(z[~small]) / lam[~small]
    out[small] = t * (1 + z[small] / 2)
    return out


def evolve_correlators(gen: Generator, state0: CorrelatorState, times) -> CorrelatorTrajectory:
    """Exact solution x(t) = exp(L t) x0 via the eigen-decomposition of L.

    Falls back to ``scipy.linalg.expm`` (scaling and squaring) when the
    eigenbasis condition number exceeds ``COND_LIMIT``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times must be non-negative")
    x0 = state0.vector()
    if x0.size != gen.size:
        raise ValueError(f"state has {x0.size} components, generator {gen.size}")
    dd = 8  # row of rho_DD
    w, v, cond = gen.eig
    if cond <= COND_LIMIT:
        coef = np.linalg.solve(v, x0)
        x = (np.exp(np.outer(times, w)) * coef) @ v.T
        integ = np.array([(v[dd] * coef * _phi1(w, t)).sum() for t in times]).real
        return CorrelatorTrajectory(times, x, integ, False, cond)
    warnings.warn(f"eigenbasis condition {cond:.2e} > {COND_LIMIT:.0e}; using expm", IllConditionedWarning)
    n = gen.size
    # augmented system carries the integral of rho_DD exactly
    aug = np.zeros((n + 1, n + 1), dtype=complex)
    aug[:n, :n] = gen.matrix
    aug[n, dd] = 1.0
    y0 = np.concatenate([x0, [0.0]])
    ys = np.array([scipy.linalg.expm(aug * t) @ y0 for t in times])
    return CorrelatorTrajectory(times, ys[:, :n], ys[:, n].real, True, cond)


def signal_from_correlators(traj: CorrelatorTrajectory, gamma: float):
    """R(t) from the counting identity, with the exact integral of 2*gamma*rho_DD as check."""
    from .lindblad import SignalTrace

    total = sum(traj.population(m) for m in MODES)
    r = total[0] - total
    return SignalTrace(
        times=traj.times,
        r=r,
        rho11=traj.population("1"),
        rho22=traj.population("2"),
        rhoDD=traj.population("D"),
        r_counting=r,
        r_quadrature=2 * gamma * traj.ds_integral,
    )


def correlator_signal(spec: InitialStateSpec, params: ModelParams, times):
    """Initial state, matching generator, spectral solve, signal."""
    two = isinstance(spec, BothExcited)
    gen = two_excitation_generator(params) if two else one_excitation_generator(params)
    traj = evolve_correlators(gen, initial_correlators(spec, params, two), times)
    return signal_from_correlators(traj, params.gamma)


# --- spectrum -----------------------------------------------------------------


@dataclass
class SpectralLine:
    value: complex
    kind: str  # "slow", "ds-fast" or "fast-oscillating"


def classify(value: complex, params: ModelParams) -> str:
    if abs(value.imag) > params.omega21 / 2:
        return "fast-oscillating"
    if abs(value.real) > params.gamma / 2:
        return "ds-fast"
    return "slow"


def slow_spectrum(gen: Generator) -> list[SpectralLine]:
    """All eigenvalues sorted by |Re| ascending, each tagged with its band."""
    w = gen.eig[0]
    order = np.argsort(np.abs(w.real), kind="stable")
    return [SpectralLine(complex(w[k]), classify(w[k], gen.params)) for k in order]


def slowest_rate(gen: Generator, floor: float = 0.0) -> complex:
    """Eigenvalue with the smallest nonzero |Re| (above ``floor``)."""
    for line in slow_spectrum(gen):
        if abs(line.value.real) > floor:
            return line.value
    raise ValueError("no decaying eigenvalue")
