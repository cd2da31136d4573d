"""Parameter records and Hamiltonian builders.

Energies and rates share one unit (hbar = 1). All many-body operators are
written in the frame rotating at the measured qubit's carrier energy, so the
measured qubit sits at zero and the detector (DS) sits at ``eps_d_detuning``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import FockBasis, mode_operators

MAX_CHAIN_MODES = 12


class SizeError(ValueError):
    """Requested Fock space exceeds the dense-matrix cap."""


@dataclass(frozen=True)
class ModelParams:
    omega21: float
    j: float
    jd: float
    gamma: float = 1.0
    delta: float = 0.0
    eps_d_detuning: float = 0.0
    eps1: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.omega21 > 0:
            raise ValueError(f"omega21 must be positive, got {self.omega21}")


@dataclass(frozen=True)
class ChainParams:
    site_energies: tuple[float, ...]
    j: float
    jd: float
    measured_site: int
    gamma: float = 1.0
    delta: float = 0.0
    eps_d_detuning: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "site_energies", tuple(float(e) for e in self.site_energies))
        if len(self.site_energies) < 2:
            raise ValueError("a chain needs at least 2 sites")
        if not 0 <= self.measured_site < len(self.site_energies):
            raise ValueError(
                f"measured_site {self.measured_site} outside 0..{len(self.site_energies) - 1}"
            )
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def n_sites(self) -> int:
        return len(self.site_energies)


@dataclass(frozen=True)
class StationaryPair:
    mu: float
    c: float
    psi1: np.ndarray
    psi2: np.ndarray
    delta_eps1: float


@dataclass
class RegimeReport:
    ratios: dict[str, float]
    warnings: list[str] = field(default_factory=list)
    deep: dict[str, bool] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.warnings


def two_qubit_block(params: ModelParams) -> np.ndarray:
    """One-excitation block of the bare two-qubit Hamiltonian over sites (1, 2)."""
    return np.array([[0.0, params.j / 2], [params.j / 2, params.omega21]])


def stationary_states(params: ModelParams) -> StationaryPair:
    """Exact one-excitation eigenstates of the coupled qubit pair.

    ``psi_n`` is mostly localized on site n; ``psi1 = c (1, mu)`` and
    ``psi2 = c (-mu, 1)`` with ``mu = 2 delta_eps1 / J``.
    """
    w, j = params.omega21, params.j
    delta_eps1 = (w - math.hypot(w, j)) / 2
    # 2 delta_eps1 / J rewritten to stay finite (and exact) as J -> 0
    mu = -j / (w + math.hypot(w, j))
    c = 1.0 / math.sqrt(1.0 + mu * mu)
    psi1 = np.array([c, mu * c])
    psi2 = np.array([-mu * c, c])
    return StationaryPair(mu=mu, c=c, psi1=psi1, psi2=psi2, delta_eps1=delta_eps1)


def one_excitation_hamiltonian(params: ModelParams) -> np.ndarray:
    """Single-excitation Hamiltonian over the basis (1, 2, D)."""
    h = np.zeros((3, 3))
    h[1, 1] = params.omega21
    h[2, 2] = params.eps_d_detuning
    h[0, 1] = h[1, 0] = params.j / 2
    h[0, 2] = h[2, 0] = params.jd / 2
    return h


def _many_body(basis: FockBasis, h1: np.ndarray, labels, pair_terms) -> np.ndarray:
    """Second-quantize ``h1`` (over ``labels``) and add n_a n_b density terms."""
    ops = dict(zip(basis.ordering, mode_operators(basis)))
    dim = basis.dim
    h = np.zeros((dim, dim), dtype=complex)
    for mu, a in enumerate(labels):
        for nu, b in enumerate(labels):
            if h1[mu, nu] != 0:
                h += h1[mu, nu] * ops[a].conj().T @ ops[b]
    for (a, b), v in pair_terms:
        if v != 0:
            h += v * (ops[a].conj().T @ ops[a]) @ (ops[b].conj().T @ ops[b])
    return h


def full_hamiltonian(params: ModelParams, basis: FockBasis | None = None) -> np.ndarray:
    """Rotating-frame Hamiltonian of qubits 1, 2 and the DS on the 8-dim Fock space."""
    if basis is None:
        basis = FockBasis.default()
    h1 = one_excitation_hamiltonian(params)
    return _many_body(basis, h1, (1, 2, "D"), [((1, 2), params.j * params.delta)])


def chain_hamiltonian(chain: ChainParams, basis: FockBasis | None = None) -> np.ndarray:
    """Nearest-neighbour chain plus a DS attached to ``chain.measured_site``.

    Site labels are 1..N; the frame rotates at the measured site's energy.
    """
    n = chain.n_sites
    if n + 1 > MAX_CHAIN_MODES:
        raise SizeError(f"{n} sites + DS = {n + 1} modes exceeds cap of {MAX_CHAIN_MODES}")
    if basis is None:
        basis = FockBasis.for_chain(n)
    h1 = chain_one_excitation_hamiltonian(chain)
    labels = tuple(range(1, n + 1)) + ("D",)
    jdelta = chain.j * chain.delta
    pairs = [((k, k + 1), jdelta) for k in range(1, n)]
    return _many_body(basis, h1, labels, pairs)


def chain_one_excitation_hamiltonian(chain: ChainParams) -> np.ndarray:
    """Single-excitation block over (1..N, D)."""
    n = chain.n_sites
    ref = chain.site_energies[chain.measured_site]
    h = np.zeros((n + 1, n + 1))
    for k, e in enumerate(chain.site_energies):
        h[k, k] = e - ref
    for k in range(n - 1):
        h[k, k + 1] = h[k + 1, k] = chain.j / 2
    h[n, n] = chain.eps_d_detuning
    h[chain.measured_site, n] = h[n, chain.measured_site] = chain.jd / 2
    return h


def chain_site_params(chain: ChainParams, site: int | None = None) -> ModelParams:
    """Two-level effective parameters for ``site`` (0-based), used for rates and windows.

    The detuning to the closest neighbour plays the role of omega21.
    """
    site = chain.measured_site if site is None else site
    e = chain.site_energies
    gaps = [abs(e[k] - e[site]) for k in (site - 1, site + 1) if 0 <= k < len(e)]
    return ModelParams(
        omega21=min(gaps), j=chain.j, jd=chain.jd, gamma=chain.gamma, delta=chain.delta
    )


def _ratio(num: float, den: float) -> float:
    return math.inf if den == 0 else abs(num) / abs(den)


def validate_regime(params: ModelParams, threshold: float = 2.0, deep: float = 5.0) -> RegimeReport:
    """Check the ordering omega21 >> gamma >> J, J_D, |detuning| (and |J Delta| << gamma)."""
    g = params.gamma
    ratios = {
        "omega21/gamma": _ratio(params.omega21, g),
        "gamma/j": _ratio(g, params.j),
        "gamma/jd": _ratio(g, params.jd),
        "gamma/detuning": _ratio(g, params.eps_d_detuning),
        "gamma/j_delta": _ratio(g, params.j * params.delta),
    }
    messages = {
        "omega21/gamma": "omega21 >> gamma violated: detector loses spectral selectivity",
        "gamma/j": "gamma >> J violated",
        "gamma/jd": "gamma >> J_D violated: excitation oscillates between qubit 1 and DS",
        "gamma/detuning": "gamma >> |eps_D - eps_1| violated: DS off resonance",
        "gamma/j_delta": "gamma >> |J Delta| violated",
    }
    warnings = [f"{messages[k]} (ratio {v:.3g} < {threshold:g})" for k, v in ratios.items() if v < threshold]
    if _ratio(params.eps_d_detuning, params.omega21) >= 0.5:
        warnings.append("detuning comparable to omega21: spectral selectivity lost")
    return RegimeReport(ratios=ratios, warnings=warnings, deep={k: v >= deep for k, v in ratios.items()})
