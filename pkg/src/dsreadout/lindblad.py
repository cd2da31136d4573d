"""Master-equation evolution on the full Fock space and the detection signal.

The dissipator uses the convention

    drho/dt = i[rho, H] - gamma (n_D rho - 2 a_D rho a_D^+ + rho n_D)

so the DS population decays at 2*gamma and the registered signal is
R(t) = 2 gamma * int_0^t <n_D> dt'.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .fock import FockBasis, initial_state, number_operator, operators_by_label
from .model import ChainParams, ModelParams, chain_hamiltonian, chain_one_excitation_hamiltonian, full_hamiltonian


class NumericalFailure(RuntimeError):
    """Integrator gave up; ``t_reached`` is the last time it accepted."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (reached t = {t_reached:.6g})")
        self.t_reached = t_reached


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, dim, dim)
    basis: FockBasis
    signal_integral: np.ndarray  # 2*gamma*int <n_jump>, integrated alongside rho
    jump_mode: object = "D"

    def population(self, label) -> np.ndarray:
        occ = self.basis.occupations(label)
        diag = np.einsum("tii->ti", self.states).real
        return diag @ occ

    def total_number(self) -> np.ndarray:
        diag = np.einsum("tii->ti", self.states).real
        return diag @ self.basis.number_per_state()

    def traces(self) -> np.ndarray:
        return np.einsum("tii->t", self.states)


@dataclass
class SignalTrace:
    times: np.ndarray
    r: np.ndarray
    rho11: np.ndarray
    rho22: np.ndarray
    rhoDD: np.ndarray
    r_counting: np.ndarray | None = None
    r_quadrature: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.r))


def lindblad_rhs(rho: np.ndarray, h: np.ndarray, gamma: float, jump: np.ndarray) -> np.ndarray:
    """Right-hand side of the master equation with jump operator ``jump``."""
    n_jump = jump.conj().T @ jump
    return 1j * (rho @ h - h @ rho) - gamma * (n_jump @ rho - 2 * jump @ rho @ jump.conj().T + rho @ n_jump)


def _integrate(
    rho0: np.ndarray,
    h_of_t: Callable[[float], np.ndarray],
    gamma: float,
    jump: np.ndarray,
    times: np.ndarray,
    tol: float,
) -> tuple[np.ndarray, np.ndarray]:
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError(f"tol must lie in [1e-12, 1e-4], got {tol}")
    times = np.asarray(times, dtype=float)
    if times[0] != 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must start at 0 and increase strictly")
    dim = rho0.shape[0]
    n_jump = jump.conj().T @ jump
    jump_h = jump.conj().T

    def rhs(t, y):
        rho = y[:-1].reshape(dim, dim)
        h = h_of_t(t)
        drho = 1j * (rho @ h - h @ rho) - gamma * (n_jump @ rho - 2 * jump @ rho @ jump_h + rho @ n_jump)
        dr = 2 * gamma * np.trace(n_jump @ rho)
        return np.concatenate([drho.ravel(), [dr]])

    y0 = np.concatenate([rho0.astype(complex).ravel(), [0.0]])
    # signal grows from exactly zero (as t^3); a tiny atol keeps it relatively accurate
    atol = np.full(y0.size, tol * 1e-3)
    atol[-1] = 1e-30
    sol = solve_ivp(rhs, (0.0, times[-1]), y0, method="DOP853", t_eval=times, rtol=tol, atol=atol)
    if sol.status != 0:
        t_reached = float(sol.t[-1]) if sol.t.size else 0.0
        raise NumericalFailure(sol.message, t_reached)
    states = sol.y[:-1].T.reshape(-1, dim, dim)
    return states, sol.y[-1].real


def evolve(
    rho0: np.ndarray,
    h: np.ndarray,
    gamma: float,
    times,
    tol: float = 1e-9,
    basis: FockBasis | None = None,
    jump_mode="D",
) -> Trajectory:
    """Adaptive (8th-order Dormand-Prince) integration with dense output at ``times``."""
    basis = basis or FockBasis.default()
    jump = operators_by_label(basis)[jump_mode]
    states, r = _integrate(rho0, lambda t: h, gamma, jump, times, tol)
    return Trajectory(np.asarray(times, float), states, basis, r, jump_mode)


def signal(traj: Trajectory, gamma: float, labels=(1, 2)) -> SignalTrace:
    """Detection probability R(t) with two independent cross-checks.

    ``r`` is the integral carried by the integrator; ``r_counting`` is
    <N>(0) - <N>(t); ``r_quadrature`` is the trapezoid rule on the output grid.
    """
    n_total = traj.total_number()
    pop_jump = traj.population(traj.jump_mode)
    quad = np.concatenate([[0.0], np.cumsum(np.diff(traj.times) * (pop_jump[1:] + pop_jump[:-1]))]) * gamma
    has_ds = "D" in traj.basis.ordering
    return SignalTrace(
        times=traj.times,
        r=traj.signal_integral,
        rho11=traj.population(labels[0]),
        rho22=traj.population(labels[1]),
        rhoDD=traj.population("D") if has_ds else np.full(traj.times.size, np.nan),
        r_counting=n_total[0] - n_total,
        r_quadrature=quad,
    )


def simulate(spec, params: ModelParams, times, tol: float = 1e-9, basis: FockBasis | None = None) -> SignalTrace:
    """Convenience wrapper: initial state, full Hamiltonian, evolve, signal."""
    basis = basis or FockBasis.default()
    rho0 = initial_state(spec, params, basis)
    traj = evolve(rho0, full_hamiltonian(params, basis), params.gamma, times, tol, basis)
    return signal(traj, params.gamma)


def direct_damping_hamiltonian(params: ModelParams, basis: FockBasis) -> np.ndarray:
    ops = operators_by_label(basis)
    n1 = ops[1].conj().T @ ops[1]
    n2 = ops[2].conj().T @ ops[2]
    hop = ops[1].conj().T @ ops[2]
    return params.omega21 * n2 + params.j / 2 * (hop + hop.conj().T) + params.j * params.delta * n1 @ n2


def direct_damping_evolve(spec, params: ModelParams, times, tol: float = 1e-9) -> SignalTrace:
    """Alternative scheme: no DS, qubit 1 itself decays at ``params.gamma``."""
    basis = FockBasis((1, 2))
    rho0 = initial_state(spec, params, basis)
    h = direct_damping_hamiltonian(params, basis)
    traj = evolve(rho0, h, params.gamma, times, tol, basis, jump_mode=1)
    return signal(traj, params.gamma)


@dataclass(frozen=True)
class Sweep:
    detuning_start: float
    detuning_end: float
    duration: float

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"sweep duration must be positive, got {self.duration}")

    def detuning(self, t: float) -> float:
        frac = min(max(t / self.duration, 0.0), 1.0)
        return self.detuning_start + (self.detuning_end - self.detuning_start) * frac


def evolve_with_sweep(spec, params: ModelParams, sweep: Sweep, times, tol: float = 1e-9) -> SignalTrace:
    """Evolution with the DS level ramped linearly, then held at ``detuning_end``."""
    basis = FockBasis.default()
    rho0 = initial_state(spec, params, basis)
    ops = operators_by_label(basis)
    n_d = ops["D"].conj().T @ ops["D"]
    h_static = full_hamiltonian(replace(params, eps_d_detuning=0.0), basis)
    states, r = _integrate(rho0, lambda t: h_static + sweep.detuning(t) * n_d, params.gamma, ops["D"], times, tol)
    traj = Trajectory(np.asarray(times, float), states, basis, r)
    trace = signal(traj, params.gamma)
    trace.extra["detuning"] = np.array([sweep.detuning(t) for t in traj.times])
    return trace


# --- chain ------------------------------------------------------------------


def chain_stationary_amplitudes(chain: ChainParams) -> np.ndarray:
    """Eigenvectors of the bare chain's one-excitation block, column k localized on site k."""
    h = chain_one_excitation_hamiltonian(chain)[:-1, :-1]
    _, vecs = np.linalg.eigh(h)
    order = np.argmax(np.abs(vecs), axis=0)
    if sorted(order) != list(range(chain.n_sites)):
        raise ValueError("chain eigenstates are not site-localized; detune the sites further")
    out = np.empty_like(vecs)
    out[:, order] = vecs
    # fix sign so the dominant amplitude is positive
    return out * np.sign(np.diag(out))


def chain_initial_state(chain: ChainParams, site: int, stationary: bool = True, basis: FockBasis | None = None) -> np.ndarray:
    """One excitation on ``site`` (0-based): bare site or its quasi-stationary state."""
    basis = basis or FockBasis.for_chain(chain.n_sites)
    if stationary:
        amp = chain_stationary_amplitudes(chain)[:, site]
    else:
        amp = np.eye(chain.n_sites)[:, site]
    ops = operators_by_label(basis)
    vac = np.zeros(basis.dim, dtype=complex)
    vac[0] = 1.0
    psi = sum(amp[k] * (ops[k + 1].conj().T @ vac) for k in range(chain.n_sites))
    return np.outer(psi, psi.conj())


def evolve_chain(chain: ChainParams, rho0: np.ndarray, times, tol: float = 1e-9) -> SignalTrace:
    basis = FockBasis.for_chain(chain.n_sites)
    traj = evolve(rho0, chain_hamiltonian(chain, basis), chain.gamma, times, tol, basis)
    m = chain.measured_site + 1
    trace = signal(traj, chain.gamma, labels=(m, m))
    others = sum(traj.population(k) for k in range(1, chain.n_sites + 1) if k != m)
    trace.rho22 = others
    return trace


def number_commutator_norm(h: np.ndarray, basis: FockBasis) -> float:
    n = number_operator(basis)
    return float(np.linalg.norm(h @ n - n @ h))
