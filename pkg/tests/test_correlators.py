import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import dsreadout.correlators as corr
from dsreadout.correlators import (
    CorrelatorState,
    IllConditionedWarning,
    correlator_signal,
    correlators_from_density,
    evolve_correlators,
    initial_correlators,
    one_excitation_generator,
    signal_from_correlators,
    slow_spectrum,
    slowest_rate,
    two_excitation_generator,
)
from dsreadout.fock import BothExcited, FockBasis, Ground, SiteExcited, Stationary, Superposition, initial_state, operators_by_label
from dsreadout.lindblad import evolve, lindblad_rhs
from dsreadout.model import ModelParams, full_hamiltonian

I1, I2, ID = 0, 1, 2
T100 = np.linspace(0.0, 100.0, 401)


def random_state_upto_two(rng, basis):
    """Random density matrix supported on the 0, 1 and 2 excitation sectors."""
    keep = basis.number_per_state() <= 2
    m = rng.normal(size=(basis.dim, basis.dim)) + 1j * rng.normal(size=(basis.dim, basis.dim))
    m[~keep] = 0
    m[:, ~keep] = 0
    rho = m @ m.conj().T
    return rho / np.trace(rho)


@pytest.mark.parametrize("two", [False, True])
def test_generator_matches_master_equation(two):
    p = ModelParams(omega21=4.0, j=0.5, jd=0.5, delta=0.3, eps_d_detuning=0.15)
    basis = FockBasis.default()
    rng = np.random.default_rng(7)
    rho = random_state_upto_two(rng, basis)
    if not two:
        one = basis.number_per_state() == 1
        rho[~one] = 0
        rho[:, ~one] = 0
        rho /= np.trace(rho)
        p = ModelParams(omega21=4.0, j=0.5, jd=0.5, eps_d_detuning=0.15)
    gen = two_excitation_generator(p) if two else one_excitation_generator(p)
    drho = lindblad_rhs(rho, full_hamiltonian(p, basis), p.gamma, operators_by_label(basis)["D"])
    x = correlators_from_density(rho, basis, two).vector()
    dx = correlators_from_density(drho, basis, two).vector()
    assert np.abs(gen.matrix @ x - dx).max() < 1e-12


def test_uncoupled_spectrum():
    gen = one_excitation_generator(ModelParams(omega21=4.0, j=0.0, jd=0.0))
    w = np.sort_complex(np.round(gen.eig[0], 12))
    expected = np.sort_complex(np.array([0, 0, -2, -1, -1, -1 + 4j, -1 - 4j, 4j, -4j]))
    np.testing.assert_allclose(w, expected, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(1, 20), st.floats(0, 2), st.floats(0, 2), st.floats(0.1, 3), st.floats(-1, 1), st.floats(-2, 2),
    st.integers(0, 2**32 - 1),
)
def test_generator_structure(omega, j, jd, gamma, delta, det, seed):
    p = ModelParams(omega21=omega, j=j, jd=jd, gamma=gamma, delta=delta, eps_d_detuning=det)
    for gen in (one_excitation_generator(p), two_excitation_generator(p)):
        w = gen.eig[0]
        assert w.real.max() <= 1e-12 * max(1, omega)
        # closed under conjugation
        for z in w:
            assert np.abs(w - z.conjugate()).min() < 1e-8 * max(1, omega)
    # Hermitian correlators map to Hermitian derivatives
    rng = np.random.default_rng(seed)
    rho = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    pair = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    s = CorrelatorState(rho + rho.conj().T, pair + pair.conj().T)
    d = CorrelatorState.from_vector(two_excitation_generator(p).matrix @ s.vector())
    assert np.abs(d.rho - d.rho.conj().T).max() < 1e-12 * max(1, omega)
    assert np.abs(d.pair - d.pair.conj().T).max() < 1e-12 * max(1, omega)


def test_a3_rows(fig2):
    """The rho_12 and rho_22 rows carry exactly the stated couplings."""
    gen = one_excitation_generator(fig2)
    rho = np.arange(9).reshape(3, 3) * (1 + 0.5j)
    d = CorrelatorState.from_vector(gen.matrix @ CorrelatorState(rho).vector()).rho
    w, j, jd = fig2.omega21, fig2.j, fig2.jd
    assert d[I1, I2] == pytest.approx(1j * w * rho[I1, I2] + 0.5j * j * (rho[I1, I1] - rho[I2, I2]) - 0.5j * jd * rho[ID, I2])
    assert d[I2, I2] == pytest.approx(-0.5j * j * (rho[I1, I2] - rho[I2, I1]))


def test_pair_block_slowest_is_w1(fig2):
    gen = two_excitation_generator(fig2)
    w = np.linalg.eigvals(gen.pair_block())
    closest = w[np.argmin(np.abs(w))]
    assert -closest.real == pytest.approx(0.125, rel=0.1)


def test_four_particle_ratio_at_gt8(fig2):
    traj = evolve_correlators(two_excitation_generator(fig2), initial_correlators(BothExcited(), fig2), [0.0, 8.0])
    r4 = traj.state(1).rho4
    ratio = r4[ID, I2, I2, I1] / r4[I1, I2, I2, I1]
    assert abs(ratio - (-0.25j)) < 0.1 * 0.25


def test_rho4_symmetries_under_flow():
    p = ModelParams(omega21=4.0, j=0.5, jd=0.5, delta=0.2)
    traj = evolve_correlators(two_excitation_generator(p), initial_correlators(BothExcited(), p), T100[::40])
    for k in range(len(traj.times)):
        r4 = traj.state(k).rho4
        assert np.abs(r4 + np.transpose(r4, (1, 0, 2, 3))).max() < 1e-12
        assert np.abs(r4 + np.transpose(r4, (0, 1, 3, 2))).max() < 1e-12
        assert np.abs(r4 - np.conj(np.transpose(r4, (3, 2, 1, 0)))).max() < 1e-12


def test_t0_unchanged(fig2):
    s0 = initial_correlators(Superposition(0.3, 1.1), fig2)
    traj = evolve_correlators(one_excitation_generator(fig2), s0, [0.0])
    np.testing.assert_allclose(traj.x[0], s0.vector(), atol=1e-15)
    assert traj.ds_integral[0] == 0


STATES = [Ground(), SiteExcited(1), SiteExcited(2), Stationary(1), Stationary(2), Superposition(math.pi / 4), Superposition(math.pi / 3, 2.0), BothExcited()]


@pytest.mark.parametrize("spec", STATES, ids=lambda s: repr(s))
@pytest.mark.parametrize("delta", [0.0, 0.2])
def test_oracle_equivalence(spec, delta):
    p = ModelParams(omega21=4.0, j=0.5, jd=0.5, delta=delta)
    basis = FockBasis.default()
    two = isinstance(spec, BothExcited)
    traj = evolve(initial_state(spec, p, basis), full_hamiltonian(p, basis), p.gamma, T100, tol=1e-12, basis=basis)
    gen = two_excitation_generator(p) if two else one_excitation_generator(p)
    ctraj = evolve_correlators(gen, initial_correlators(spec, p, two), T100)
    worst = 0.0
    for k in range(0, len(T100), 20):
        ref = correlators_from_density(traj.states[k], basis, two).vector()
        worst = max(worst, np.abs(ctraj.x[k] - ref).max())
    assert worst < 1e-8
    r_ref = traj.signal_integral
    r = signal_from_correlators(ctraj, p.gamma).r
    assert np.abs(r - r_ref).max() < 1e-8


def test_identity_vs_exact_integral(fig2):
    for spec in (Stationary(1), Superposition(1.0, 0.4), BothExcited()):
        tr = correlator_signal(spec, fig2, np.geomspace(1e-3, 1e5, 300))
        assert np.abs(tr.r - tr.r_quadrature).max() < 1e-9
    tr = correlator_signal(Stationary(1), fig2, [0.0, 1.0])
    assert tr.r[0] == 0


def test_stationary2_at_inverse_w2(fig2):
    w2 = 0.25 * 0.25 / (8 * 4**4)
    tr = correlator_signal(Stationary(2), fig2, [0.0, 1 / w2])
    assert tr.r[-1] == pytest.approx(1 - math.exp(-1), rel=0.15)


def test_expm_fallback_agrees(monkeypatch, fig2):
    t = [0.0, 3.0, 50.0, 4e4]
    gen = one_excitation_generator(fig2)
    s0 = initial_correlators(Stationary(2), fig2)
    ref = evolve_correlators(gen, s0, t)
    monkeypatch.setattr(corr, "COND_LIMIT", 0.5)
    with pytest.warns(IllConditionedWarning):
        alt = evolve_correlators(gen, s0, t)
    assert alt.used_fallback and not ref.used_fallback
    np.testing.assert_allclose(alt.x, ref.x, atol=1e-10)
    np.testing.assert_allclose(alt.ds_integral, ref.ds_integral, rtol=1e-9, atol=1e-12)


def test_negative_time_rejected(fig2):
    with pytest.raises(ValueError):
        evolve_correlators(one_excitation_generator(fig2), initial_correlators(Stationary(1), fig2), [-1.0])


def test_spectrum_fig2(fig2):
    gen = one_excitation_generator(fig2)
    assert -slowest_rate(gen, floor=1e-14).real == pytest.approx(3.0517578125e-5, rel=0.15)
    lines = slow_spectrum(gen)
    assert all(abs(a.value.real) <= abs(b.value.real) for a, b in zip(lines, lines[1:]))
    assert min(abs(l.value.real + 0.125) for l in lines) < 0.0125
    kinds = [l.kind for l in lines]
    assert kinds.count("fast-oscillating") == 4 and kinds.count("ds-fast") == 3 and kinds.count("slow") == 2


def test_spectrum_deep(deep):
    gen = one_excitation_generator(deep)
    assert -slowest_rate(gen, floor=1e-14).real == pytest.approx(2e-8, rel=0.03)
    assert min(abs(l.value.real + 0.02) for l in slow_spectrum(gen)) < 0.02 * 0.03


# --- slow-dynamics relations ------------------------------------------------


@pytest.mark.parametrize(
    "spec, t",
    [(Stationary(1), np.linspace(5.0, 60.0, 221)), (Stationary(2), np.geomspace(5.0, 1e5, 300))],
)
def test_quasi_stationarity(fig2, spec, t):
    """Holds while one stationary state carries the decay (no w21 beating in the populations)."""
    gen = one_excitation_generator(fig2)
    traj = evolve_correlators(gen, initial_correlators(spec, fig2), t)
    dx = traj.x @ gen.matrix.T
    pdot = (dx[:, 0] + dx[:, 4]).real
    rdd = traj.population("D")
    assert np.max(np.abs(rdd + pdot / 2) / rdd) < 0.2


def test_stationary1_population_ratio(fig2):
    t = np.linspace(5.0, 3 / 0.125, 100)
    traj = evolve_correlators(one_excitation_generator(fig2), initial_correlators(Stationary(1), fig2), t)
    ratio = traj.population("2") / traj.population("1") / (0.25 / 4) ** 2
    assert np.all(np.abs(ratio - 1) < 0.25)


def test_stationary2_population_ratio(fig2):
    t = np.geomspace(10 / 0.125, 1e5, 100)
    traj = evolve_correlators(one_excitation_generator(fig2), initial_correlators(Stationary(2), fig2), t)
    ratio = traj.population("1") / traj.population("2") / (0.25 / 4) ** 2
    assert np.all(np.abs(ratio - 1) < 0.25)


def test_rho12_fast_component(fig2):
    """Starting on site 2, rho_12 relaxes onto its slaved value (J/2 omega) rho_22.

    The transient decays at W1/2 + (J_D / 2 omega)^2 Gamma: the DS-induced
    broadening of the resonant level plus the admixture decay of the coherence.
    """
    gen = one_excitation_generator(fig2)
    t = np.linspace(5.0, 40.0, 141)
    traj = evolve_correlators(gen, initial_correlators(SiteExcited(2), fig2), t)
    rho12 = traj.x[:, 1]
    slaved = fig2.j / (2 * fig2.omega21) * traj.population("2")
    fast = np.abs(rho12 - slaved)
    rate = -np.polyfit(t, np.log(fast), 1)[0]
    expected = 0.125 / 2 + (fig2.jd / (2 * fig2.omega21)) ** 2 * fig2.gamma
    assert rate == pytest.approx(expected, rel=0.25)
    late = evolve_correlators(gen, initial_correlators(Stationary(2), fig2), [200.0, 2000.0])
    assert late.x[:, 1].real == pytest.approx(fig2.j / (2 * fig2.omega21) * late.population("2"), rel=0.25)


def test_superposition_fast_term(fig2):
    """Interference part of R (half the phi = 0 vs phi = pi difference) for Gamma t > 5."""
    t = np.linspace(5.0, 100.0, 381)
    a = correlator_signal(Superposition(math.pi / 4, 0.0), fig2, t).r
    b = correlator_signal(Superposition(math.pi / 4, math.pi), fig2, t).r
    bound = fig2.j * fig2.jd**2 / (2 * fig2.omega21**3)
    assert np.max(np.abs(a - b) / 2) < bound


def test_two_excitation_delta_robustness(fig2):
    p = ModelParams(omega21=4.0, j=0.5, jd=0.5, delta=0.2)
    a = correlator_signal(BothExcited(), fig2, T100).r
    b = correlator_signal(BothExcited(), p, T100).r
    assert np.abs(a - b).max() < (fig2.j / fig2.omega21) ** 2


def test_two_excitation_additive_at_zero_delta(fig2):
    both = correlator_signal(BothExcited(), fig2, T100).r
    one = correlator_signal(SiteExcited(1), fig2, T100).r + correlator_signal(SiteExcited(2), fig2, T100).r
    assert np.abs(both - one).max() < 1e-12


def test_one_excitation_trace_bounds(fig2):
    traj = evolve_correlators(one_excitation_generator(fig2), initial_correlators(Superposition(0.7, 0.3), fig2), T100)
    for k in range(0, len(T100), 50):
        rho = traj.state(k).rho
        assert np.abs(rho - rho.conj().T).max() < 1e-12
        d = np.diag(rho).real
        assert d.min() > -1e-10 and d.max() < 1 + 1e-10 and d.sum() <= 1 + 1e-9


def test_ground_correlators(fig2):
    tr = correlator_signal(Ground(), fig2, T100)
    assert np.all(tr.r == 0)
