"""Closed-form rates, signal laws and the measurement-error comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import BothExcited, Ground, InitialStateSpec, one_excitation_amplitudes
from .model import ModelParams, stationary_states


@dataclass(frozen=True)
class DirectScheme:
    fast_rate: float
    slow_rate_estimate: float
    false_click_floor: float
    order_of_magnitude: bool = True


@dataclass(frozen=True)
class Window:
    t_min: float
    t_max: float
    epsilon0: float
    resolvable: bool


@dataclass(frozen=True)
class AsymptoticReport:
    w1: float
    w2: float
    mu: float
    epsilon0: float
    window: tuple[float, float]
    resolvable: bool
    direct_scheme: DirectScheme


def decay_rates(params: ModelParams) -> tuple[float, float, float]:
    """(W1, W2, mu): resonant quantum-diffusion rate, mediated off-resonant rate, admixture."""
    g = params.gamma
    if g == 0:
        raise ZeroDivisionError("gamma = 0")
    w1 = params.jd**2 / (2 * g)
    w2 = params.j**2 * params.jd**2 * g / (8 * params.omega21**4)
    return w1, w2, stationary_states(params).mu


def asymptotic_signal(p1: float, p2: float, w1: float, w2: float, t, two_excitation: bool = False):
    """Weighted sum of the exponential laws; ``two_excitation`` gives 2 - e^-W1t - e^-W2t."""
    t = np.asarray(t, dtype=float)
    if two_excitation:
        p1 = p2 = 1.0
    elif p1 < 0 or p2 < 0 or p1 + p2 > 1 + 1e-12:
        raise ValueError(f"populations ({p1}, {p2}) are not a sub-normalized pair")
    r = p1 * -np.expm1(-w1 * t) + p2 * -np.expm1(-w2 * t)
    return float(r) if r.ndim == 0 else r


def overlap_populations(spec: InitialStateSpec, params: ModelParams) -> tuple[float, float]:
    """|<psi(0)|psi_n>|^2 for the exact stationary states n = 1, 2."""
    if isinstance(spec, BothExcited):
        raise ValueError("BothExcited is a two-excitation state; use the two-excitation law")
    if isinstance(spec, Ground):
        return 0.0, 0.0
    amp = one_excitation_amplitudes(spec, params)
    if amp is None:
        raise ValueError(f"{spec!r} is not a one-excitation qubit state")
    pair = stationary_states(params)
    return float(abs(np.vdot(pair.psi1, amp)) ** 2), float(abs(np.vdot(pair.psi2, amp)) ** 2)


def projective_reference(p1: float, p2: float, phi: float, params: ModelParams) -> float:
    """Leading-order probability that a fast projective measurement finds qubit 1 excited."""
    if abs(p1 + p2 - 1) > 1e-9:
        raise ValueError(f"p1 + p2 = {p1 + p2}; only normalized one-excitation states are supported")
    x = params.j / (2 * params.omega21)
    amp = math.sqrt(p1) + math.sqrt(p2) * complex(math.cos(phi), math.sin(phi)) * x
    return (1 - x * x) * abs(amp) ** 2


def discrimination_window(params: ModelParams) -> Window:
    """Times where R(t) tracks P1 to better than J^2 / 4 omega21^2."""
    w1, w2, _ = decay_rates(params)
    if w1 <= 0 or w2 <= 0:
        raise ValueError("window needs W1, W2 > 0")
    eps0 = params.j**2 / (4 * params.omega21**2)
    t_min = 2 * math.log(2 * params.omega21 / params.j) / w1
    t_max = (params.omega21 / params.gamma) ** 2 / w1
    return Window(t_min, t_max, eps0, t_min < t_max)


def direct_scheme_estimates(params: ModelParams) -> DirectScheme:
    """Order-of-magnitude figures for damping qubit 1 directly (no DS)."""
    x2 = (params.j / params.omega21) ** 2
    return DirectScheme(fast_rate=2 * params.gamma, slow_rate_estimate=x2 * params.gamma, false_click_floor=x2)


def report(params: ModelParams) -> AsymptoticReport:
    w1, w2, mu = decay_rates(params)
    win = discrimination_window(params) if w1 > 0 and w2 > 0 else Window(math.nan, math.nan, params.j**2 / (4 * params.omega21**2), False)
    return AsymptoticReport(
        w1=w1,
        w2=w2,
        mu=mu,
        epsilon0=win.epsilon0,
        window=(win.t_min, win.t_max),
        resolvable=win.resolvable,
        direct_scheme=direct_scheme_estimates(params),
    )
