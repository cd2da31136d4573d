"""Scenario execution, figure presets, numeric-vs-asymptotic comparison and file export."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import correlators as corr
from . import lindblad
from .analysis import FitError, first_crossing, fit_decay_rate, loglog_slope
from .asymptotics import (
    asymptotic_signal,
    decay_rates,
    direct_scheme_estimates,
    discrimination_window,
    overlap_populations,
    projective_reference,
)
from .fock import BothExcited, DSExcited, Ground, Stationary, one_excitation_amplitudes
from .model import ModelParams, chain_site_params, stationary_states, validate_regime
from .scenario import Scenario

CSV_HEADER = "t,R,R_asymptotic,rho11,rho22,rhoDD"
W1_FIT_WINDOW = (10.0, 40.0)
W2_FIT_WINDOW = (1e4, 1e5)
SMALL_T_WINDOW = (1e-3, 1e-2)

PRESETS = {
    "fig2a": dict(engine="full", initial="stationary1", t_max=60.0, n_points=601),
    "fig2b": dict(engine="correlators", initial="stationary2", t_max=3e5, n_points=600, spacing="log"),
    "fig3": dict(engine="full", initial="superposition", t_max=150.0, n_points=1501, phi_deg=0.0),
}
FIG3_THETAS_DEG = (45.0, 60.0)


def preset(name: str, **overrides) -> Scenario:
    """Scenario with the figure parameters omega21 = 4, J = J_D = 1/2 (gamma = 1), Delta = 0."""
    base = dict(omega21=4.0, j=0.5, jd=0.5, gamma=1.0, delta=0.0)
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    kw = {**base, **PRESETS[name]}
    if name == "fig3":
        kw["theta_deg"] = FIG3_THETAS_DEG[0]
    kw.update(overrides)
    return Scenario(**kw)


@dataclass
class RunResult:
    trace: lindblad.SignalTrace
    summary: dict


def _asymptotic_column(s: Scenario, times: np.ndarray) -> np.ndarray:
    if s.engine == "chain":
        return _chain_asymptotic(s, times)
    p = s.params
    spec = s.initial_spec
    if isinstance(spec, DSExcited):
        return np.full(times.size, np.nan)
    if isinstance(spec, Ground):
        return np.zeros(times.size)
    if s.engine == "direct":
        est = direct_scheme_estimates(p)
        if isinstance(spec, BothExcited):
            return asymptotic_signal(1, 1, est.fast_rate, est.slow_rate_estimate, times, two_excitation=True)
        p1, p2 = overlap_populations(spec, p)
        return asymptotic_signal(p1, p2, est.fast_rate, est.slow_rate_estimate, times)
    w1, w2, _ = decay_rates(p)
    if isinstance(spec, BothExcited):
        return asymptotic_signal(1, 1, w1, w2, times, two_excitation=True)
    p1, p2 = overlap_populations(spec, p)
    return asymptotic_signal(p1, p2, w1, w2, times)


def _chain_asymptotic(s: Scenario, times: np.ndarray) -> np.ndarray:
    # measured site's state decays at W1; adjacent sites' states at their own W2; farther ones neglected
    chain = s.chain
    pops = _chain_overlaps(s)
    m = chain.measured_site
    w1, _, _ = decay_rates(chain_site_params(chain))
    r = pops[m] * -np.expm1(-w1 * times)
    e = chain.site_energies
    for k in (m - 1, m + 1):
        if 0 <= k < chain.n_sites:
            w2 = decay_rates(ModelParams(abs(e[k] - e[m]), chain.j, chain.jd, chain.gamma))[1]
            r = r + pops[k] * -np.expm1(-w2 * times)
    return r


def _chain_overlaps(s: Scenario) -> np.ndarray:
    chain = s.chain
    if s.initial == "ground":
        return np.zeros(chain.n_sites)
    vecs = lindblad.chain_stationary_amplitudes(chain)
    k = _site_index(s.initial)
    amp = vecs[:, k] if s.initial.startswith("stationary") else np.eye(chain.n_sites)[:, k]
    return np.abs(vecs.T @ amp) ** 2


def _site_index(initial: str) -> int:
    """0-based site of ``site<k>`` / ``stationary<k>``."""
    return int(re.search(r"\d+$", initial).group()) - 1


def simulate_trace(s: Scenario) -> lindblad.SignalTrace:
    times = s.times()
    if s.engine == "chain":
        chain = s.chain
        if s.initial == "ground":
            rho0 = np.zeros((2 ** (chain.n_sites + 1),) * 2, dtype=complex)
            rho0[0, 0] = 1.0
        else:
            site = _site_index(s.initial)
            rho0 = lindblad.chain_initial_state(chain, site, stationary=s.initial.startswith("stationary"))
        return lindblad.evolve_chain(chain, rho0, times, s.rel_tol)
    spec = s.initial_spec
    p = s.params
    if s.engine == "full":
        return lindblad.simulate(spec, p, times, s.rel_tol)
    if s.engine == "correlators":
        return corr.correlator_signal(spec, p, times)
    if s.engine == "direct":
        return lindblad.direct_damping_evolve(spec, p, times, s.rel_tol)
    if s.engine == "sweep":
        return lindblad.evolve_with_sweep(spec, p, s.sweep, times, s.rel_tol)
    raise ValueError(f"unknown engine {s.engine!r}")


def _try_fit(trace, window, plateau=1.0):
    try:
        return fit_decay_rate(trace.times, trace.r, window, plateau)
    except FitError:
        return None


def small_time_slope(s: Scenario) -> float | None:
    """log-log slope of R on [1e-3, 1e-2]/gamma for two-qubit DS scenarios."""
    if s.engine not in ("full", "correlators", "sweep") or isinstance(s.initial_spec, Ground):
        return None
    g = s.gamma
    times = np.concatenate([[0.0], np.geomspace(SMALL_T_WINDOW[0] / g, SMALL_T_WINDOW[1] / g, 11)])
    short = replace(s, engine="correlators" if s.engine == "correlators" else "full")
    if isinstance(short.initial_spec, DSExcited):
        short = replace(short, engine="full")
    if short.engine == "full":
        trace = lindblad.simulate(short.initial_spec, short.params, times, min(s.rel_tol, 1e-10))
    else:
        trace = corr.correlator_signal(short.initial_spec, short.params, times)
    # the counting identity cancels to ~1e-16 while R ~ t^3 here; the exact integral keeps relative accuracy
    r = trace.r_quadrature if short.engine == "correlators" else trace.r
    try:
        return loglog_slope(trace.times, r, (times[1], times[-1]))
    except FitError:
        return None


def run_scenario(s: Scenario, csv_path: str | Path | None = None) -> RunResult:
    """Run, attach the asymptotic column, optionally write CSV, and summarize."""
    trace = simulate_trace(s)
    trace.extra["r_asymptotic"] = _asymptotic_column(s, trace.times)
    path = csv_path or s.out
    if path:
        write_csv(trace, path)
    return RunResult(trace, summarize(s, trace))


def summarize(s: Scenario, trace: lindblad.SignalTrace) -> dict:
    params = chain_site_params(s.chain) if s.engine == "chain" else s.params
    w1, w2, mu = decay_rates(params)
    regime = validate_regime(params)
    out = {"engine": s.engine, "initial": s.initial, "w1": w1, "w2": w2, "mu": mu}
    if w1 > 0 and w2 > 0:
        win = discrimination_window(params)
        out.update(t_min=win.t_min, t_max=win.t_max, epsilon0=win.epsilon0, resolvable=win.resolvable)
    for name, window in (("w1", W1_FIT_WINDOW), ("w2", W2_FIT_WINDOW)):
        fit = _try_fit(trace, window) if s.initial.startswith(("stationary", "site")) else None
        out[f"fitted_{name}"] = fit.rate if fit else None
        out[f"fitted_{name}_shift"] = fit.shift if fit else None
        out[f"fitted_{name}_log_shift"] = fit.log_shift if fit else None
    r_asym = trace.extra.get("r_asymptotic")
    late = trace.times >= 5 / s.gamma
    if r_asym is not None and late.any() and np.isfinite(r_asym).all():
        out["max_deviation_asymptotic"] = float(np.max(np.abs(trace.r - r_asym)[late]))
    if s.engine == "correlators":
        out["max_integral_check_error"] = float(np.max(np.abs(trace.r - trace.r_quadrature)))
    elif trace.r_counting is not None:
        out["max_counting_identity_error"] = float(np.max(np.abs(trace.r - trace.r_counting)))
    out["final_r"] = float(trace.r[-1])
    out["small_time_slope"] = small_time_slope(s) if s.engine != "chain" else None
    out["regime_warnings"] = list(regime.warnings)
    return out


def _one_exc_phase(spec, params: ModelParams) -> float:
    amp = one_excitation_amplitudes(spec, params)
    pair = stationary_states(params)
    o1, o2 = np.vdot(pair.psi1, amp), np.vdot(pair.psi2, amp)
    if abs(o1) < 1e-300 or abs(o2) < 1e-300:
        return 0.0
    return float(np.angle(o2) - np.angle(o1))


def compare(s: Scenario, oracle_t_max: float = 100.0) -> dict:
    """Full-space vs correlator engines, analytic laws, projective and direct-damping references."""
    if s.engine == "chain":
        raise ValueError("compare needs a two-qubit one-excitation scenario")
    p = s.params
    spec = s.initial_spec
    if isinstance(spec, (BothExcited, DSExcited, Ground)):
        raise ValueError("compare needs a one-excitation qubit initial state")
    w1, w2, mu = decay_rates(p)
    win = discrimination_window(p)
    t_oracle = np.linspace(0.0, min(s.t_max, oracle_t_max), 1001)
    full = lindblad.simulate(spec, p, t_oracle, s.rel_tol)
    cor = corr.correlator_signal(spec, p, t_oracle)
    oracle_gap = float(np.max(np.abs(full.r - cor.r)))

    fit1 = fit_decay_rate(
        *_xy(lindblad.simulate(Stationary(1), p, np.linspace(0, W1_FIT_WINDOW[1], 801), s.rel_tol)),
        W1_FIT_WINDOW,
    )
    slow = corr.slowest_rate(corr.one_excitation_generator(p), floor=1e-14)

    p1, p2 = overlap_populations(spec, p)
    t_star = math.sqrt(win.t_min * win.t_max)
    r_star = corr.correlator_signal(spec, p, [0.0, t_star]).r[-1]
    plateau_error = abs(r_star - p1)
    proj = projective_reference(p1, p2, _one_exc_phase(spec, p), p) if abs(p1 + p2 - 1) < 1e-9 else math.nan
    projective_error = abs(proj - p1)

    # direct damping: false clicks from state 2 once state 1 is detected with 99% confidence
    t_direct = np.linspace(0.0, 20.0 / p.gamma, 4001)
    d1 = lindblad.direct_damping_evolve(Stationary(1), p, t_direct, s.rel_tol)
    d2 = lindblad.direct_damping_evolve(Stationary(2), p, t_direct, s.rel_tol)
    t99 = first_crossing(d1.times, d1.r, 0.99)
    direct_false = float(np.interp(t99, d2.times, d2.r)) if math.isfinite(t99) else math.nan
    ds_false = float(corr.correlator_signal(Stationary(2), p, [0.0, t_star]).r[-1])

    return {
        "w1": w1,
        "w2": w2,
        "mu": mu,
        "p1": p1,
        "p2": p2,
        "t_min": win.t_min,
        "t_max": win.t_max,
        "epsilon0": win.epsilon0,
        "resolvable": win.resolvable,
        "oracle_max_discrepancy": oracle_gap,
        "fitted_w1": fit1.rate,
        "fitted_w1_rel_error": fit1.rate / w1 - 1,
        "spectral_w2": -slow.real,
        "spectral_w2_rel_error": -slow.real / w2 - 1,
        "t_star": t_star,
        "r_at_t_star": float(r_star),
        "plateau_error": plateau_error,
        "projective_probability": proj,
        "projective_error": projective_error,
        "improvement_ratio": projective_error / plateau_error if plateau_error > 0 else math.inf,
        "direct_t99": t99,
        "direct_false_click": direct_false,
        "direct_false_click_threshold": 0.5 * (p.j / p.omega21) ** 2,
        "ds_false_click_at_t_star": ds_false,
        "direct_vs_ds_false_click_ratio": direct_false / ds_false if ds_false > 0 else math.inf,
        "regime_warnings": validate_regime(p).warnings,
    }


def _xy(trace):
    return trace.times, trace.r


# --- output -------------------------------------------------------------------


def _num(x: float) -> str:
    return f"{x:.15e}"


def write_csv(trace: lindblad.SignalTrace, path: str | Path) -> None:
    r_asym = trace.extra.get("r_asymptotic")
    if r_asym is None:
        r_asym = np.full(trace.times.size, np.nan)
    cols = (trace.times, trace.r, r_asym, trace.rho11, trace.rho22, trace.rhoDD)
    lines = [CSV_HEADER]
    lines += [",".join(_num(float(c[k])) for c in cols) for k in range(trace.times.size)]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _json_value(v) -> str:
    import json

    if v is None or isinstance(v, (bool, str)):
        return json.dumps(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return "null"
        if v != 0 and abs(v) < 1e-3:
            return f"{v:.12e}"
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__} in a flat summary")


def dumps_summary(summary: dict) -> str:
    """Flat JSON object; numbers below 1e-3 in magnitude use scientific notation."""
    body = ",\n".join(f'  "{k}": {_json_value(v)}' for k, v in summary.items())
    return "{\n" + body + "\n}"
