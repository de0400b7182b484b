import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm, solve_continuous_lyapunov

from atom_membrane import metrics
from atom_membrane.dynamics import (
    GeneratorMatrices,
    LindbladChannel,
    QuadraticHamiltonian,
    annihilation,
    assemble_QN,
    atom_diffusion_channels,
    cavity_mediated_hamiltonian,
    correlated_decay_channels,
    coupling_hamiltonian,
    effective_generator,
    force_vectors,
    free_hamiltonian,
    full_generator,
    membrane_bath_channels,
    propagate_const,
    propagate_grid,
    propagate_timedep,
    propagators,
    sideband_decay_channels,
    uniform_grid,
)
from atom_membrane.gaussian import coherent, make_state, partial_transpose, squeezed, symplectic_eigenvalues, thermal, vacuum
from atom_membrane.protocols import ScenarioConfig, coarse_grain, modulated_generator, swap_generator
from atom_membrane.system import DerivedRates, squeezing_correction


def cov_at(gen, t, cov0=None):
    Phi, noise = propagators(gen, t)
    cov0 = 0.5 * np.eye(gen.dim) if cov0 is None else cov0
    return Phi @ cov0 @ Phi.T + noise


# types ---------------------------------------------------------------------------


def test_type_invariants():
    with pytest.raises(ValueError):
        QuadraticHamiltonian(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        LindbladChannel(np.zeros(2, dtype=complex), 1.0, "zero")
    with pytest.raises(ValueError):
        LindbladChannel(annihilation(0, 1), -1.0, "negative")
    with pytest.raises(ValueError):
        GeneratorMatrices(np.zeros((2, 2)), -np.eye(2))


# effective model -----------------------------------------------------------------


def test_uncoupled_vacuum_is_fixed_point():
    rates = DerivedRates.from_noise_ratio(0.034, 0.0)
    H = free_hamiltonian([1.0, 1.3])
    assert not H.H[0:2, 2:4].any()
    gen = assemble_QN(H, [])
    s = propagate_const(vacuum(2), gen, 17.3)
    assert np.allclose(s.cov, 0.5 * np.eye(4), atol=1e-13)
    H, _ = effective_generator(rates)
    assert H.H[0, 2] == pytest.approx(-0.034)


def test_force_vector_balanced():
    f1, f2 = force_vectors(1.0, 1.0)
    assert np.allclose(f1, np.array([-1, -1j, 1, 1j]) / 2)
    assert np.allclose(f2, np.array([-1, -1j, -1, -1j]) / 2)


def test_epsilon_example():
    assert squeezing_correction(10.0, 1.0, 1.0) == pytest.approx(0.02, rel=1e-12)


def test_effective_hamiltonian_terms():
    H = coupling_hamiltonian(0.1).H
    # -G (a+a^dag)(b+b^dag) = -2G X_m X_at
    assert H[0, 2] == pytest.approx(-0.1) and H[2, 0] == pytest.approx(-0.1)
    assert np.count_nonzero(H) == 2
    He = coupling_hamiltonian(0.1, epsilon=0.5).H
    assert He[1, 3] != 0 or He[0, 3] != 0


def test_effective_channel_set():
    rates = DerivedRates.from_couplings(0.3, 0.4, 10.0, 0.5, Gamma_at=0.01, gamma_m=1e-3, nbar_m=20)
    _, ch = effective_generator(rates)
    labels = sorted(c.label for c in ch)
    assert labels == sorted(["membrane_cool", "membrane_heat", "atom_diffusion", "F1", "F2dag", "F1dag", "F2"])
    by = {c.label: c.rate for c in ch}
    assert by["membrane_cool"] == pytest.approx(1e-3 * 21) and by["membrane_heat"] == pytest.approx(1e-3 * 20)
    assert by["F1"] == by["F2dag"] == pytest.approx(rates.Gamma_c_plus)
    assert by["F1dag"] == by["F2"] == pytest.approx(rates.Gamma_c_minus)


# full model ----------------------------------------------------------------------


def test_full_model_decoupled_cavities_decay_to_vacuum():
    rates = replace(DerivedRates.from_noise_ratio(0.034, 0.0), g_m=0.0, g_at=0.0, g=0.0, kappa=1.0)
    H, ch = full_generator(rates, 5.0, -5.0)
    assert not (H.H - np.diag(np.diag(H.H))).any()
    gen = assemble_QN(H, ch)
    start = make_state({2: coherent(2.0), 3: thermal(3.0)}, 4)
    s = propagate_const(start, gen, 40.0)
    assert np.allclose(s.cov[4:, 4:], 0.5 * np.eye(4), atol=1e-12)
    assert np.allclose(s.d[4:], 0, atol=1e-12)


def test_cavity_steady_state_from_lyapunov():
    H = free_hamiltonian([-3.0])
    gen = assemble_QN(H, [LindbladChannel(annihilation(0, 1), 2.0, "decay")])
    cov = solve_continuous_lyapunov(gen.Q, -gen.N)
    assert np.allclose(cov, 0.5 * np.eye(2), atol=1e-14)


def fidelity_curve(gen, times):
    out = []
    for t in times:
        c = cov_at(gen, t)
        out.append(metrics.transfer_fidelity(c[0:2, 0:2], 0.5 * np.eye(2)))
    return np.array(out)


def test_full_matches_effective_example():
    rates = DerivedRates.from_couplings(0.5, 0.5, 30.0, 1.0)
    ts = metrics.swap_time(rates.G_exact)
    times = np.linspace(0, 2 * ts, 81)
    fe = fidelity_curve(assemble_QN(*effective_generator(rates)), times)
    ff = fidelity_curve(assemble_QN(*full_generator(rates, 30.0, -30.0)), times)
    assert np.max(np.abs(fe - ff)) <= 5 * rates.g / 30.0


@settings(max_examples=8)
@given(g1=st.floats(0.3, 0.6), ratio=st.floats(25.0, 40.0))
def test_full_matches_effective_property(g1, ratio):
    g = math.sqrt(2) * g1
    Delta = ratio * g
    rates = DerivedRates.from_couplings(g1, g1, Delta, 1.0)
    ts = metrics.swap_time(rates.G_exact)
    times = np.linspace(0, 2 * ts, 41)
    fe = fidelity_curve(assemble_QN(*effective_generator(rates)), times)
    ff = fidelity_curve(assemble_QN(*full_generator(rates, Delta, -Delta)), times)
    assert np.max(np.abs(fe - ff)) <= 5 * g / Delta


# correlated decay ----------------------------------------------------------------


def test_rwa_rates_example():
    ch = correlated_decay_channels(1.0, 0.0, (10.0,), 0.5, 1.0, mode="rwa")
    by = {c.label: c.rate for c in ch}
    assert by["F1"] == pytest.approx(1 / 121.25, rel=1e-12)
    assert by["F1dag"] == pytest.approx(1 / 81.25, rel=1e-12)


def test_exact_mode_fast_cavity_limit():
    g, kappa = 1.0, 2e4
    ch = correlated_decay_channels(g / math.sqrt(2), g / math.sqrt(2), (10.0, -10.0), kappa, 1.0, mode="exact")
    for i in (1, 2):
        lam = sorted(c.rate for c in ch if c.label.startswith(f"J{i}"))
        assert lam[-1] == pytest.approx(4 * g**2 / kappa, rel=1e-6)
        assert sum(lam) == pytest.approx(4 * g**2 * kappa / (kappa**2 + 11**2) / 2 + 4 * g**2 * kappa / (kappa**2 + 9**2) / 2, rel=1e-9)


def test_exact_mode_rejects_non_lindblad_regime():
    with pytest.raises(ValueError, match="eigenvalue"):
        correlated_decay_channels(0.5, 0.5, (10.0, -10.0), 0.5, 1.0, mode="exact")
    with pytest.raises(ValueError):
        correlated_decay_channels(0.5, 0.5, (10.0,), 0.5, 1.0, mode="bogus")


def test_rwa_decay_matches_sideband_channels():
    rates = DerivedRates.from_couplings(0.4, 0.3, 12.0, 0.7)
    a = correlated_decay_channels(0.4, 0.3, (12.0, -12.0), 0.7, 1.0, mode="rwa")
    b = sideband_decay_channels(0.4, 0.3, rates.Gamma_c_plus, rates.Gamma_c_minus)
    H = free_hamiltonian([1.0, 1.0])
    ga, gb = assemble_QN(H, a), assemble_QN(H, b)
    assert np.allclose(ga.Q, gb.Q, atol=1e-15) and np.allclose(ga.N, gb.N, atol=1e-15)


# cavity-mediated Hamiltonian -----------------------------------------------------


def test_mediated_coupling_equals_exact_coupling():
    H = cavity_mediated_hamiltonian(0.5, 0.5, (30.0, -30.0), 0.0, 1.0).H
    G = DerivedRates.from_couplings(0.5, 0.5, 30.0, 0.0).G_exact
    assert H[0, 2] == pytest.approx(-G, rel=1e-12)


def test_mediated_membrane_only():
    for Deltas in ((30.0,), (30.0, -30.0)):
        H = cavity_mediated_hamiltonian(0.5, 0.0, Deltas, 0.3, 1.0).H
        assert not H[0:2, 2:4].any() and not H[2:4, 2:4].any()
    # a single mode shifts the membrane; opposite detunings cancel the shift
    assert cavity_mediated_hamiltonian(0.5, 0.0, (30.0,), 0.3, 1.0).H[0, 0] != 0


@given(gm=st.floats(0.05, 1.0), ga=st.floats(0.05, 1.0), Delta=st.floats(3.0, 50.0), kappa=st.floats(0.0, 2.0))
def test_mediated_relabel_symmetry(gm, ga, Delta, kappa):
    P = np.zeros((4, 4))
    P[0, 2] = P[1, 3] = P[2, 0] = P[3, 1] = 1
    a = cavity_mediated_hamiltonian(gm, ga, (Delta, -Delta), kappa, 1.0).H
    b = cavity_mediated_hamiltonian(ga, gm, (Delta, -Delta), kappa, 1.0).H
    assert np.allclose(P @ a @ P, b, atol=1e-14)


# generator assembly --------------------------------------------------------------


def test_assemble_single_damping_channel():
    gamma = 0.3
    gen = assemble_QN(QuadraticHamiltonian(np.zeros((2, 2))), [LindbladChannel(annihilation(0, 1), gamma, "a")])
    assert np.allclose(gen.Q, -gamma / 2 * np.eye(2))
    assert np.allclose(gen.N, gamma / 2 * np.eye(2))
    assert np.allclose(solve_continuous_lyapunov(gen.Q, -gen.N), 0.5 * np.eye(2))


def test_atom_diffusion_is_pure_momentum_noise():
    gen = assemble_QN(QuadraticHamiltonian(np.zeros((4, 4))), atom_diffusion_channels(0.07))
    expected = np.zeros((4, 4))
    expected[3, 3] = 2 * 0.07
    assert np.allclose(gen.N, expected) and not gen.Q.any()


def test_paired_channels_leave_drift_unchanged():
    H = free_hamiltonian([1.0, 1.1]) + coupling_hamiltonian(0.03)
    bare = assemble_QN(H, [])
    paired = assemble_QN(H, sideband_decay_channels(0.3, 0.2, 0.01, 0.01))
    assert np.allclose(paired.Q, bare.Q, atol=1e-15)
    unpaired = assemble_QN(H, sideband_decay_channels(0.3, 0.2, 0.01, 0.002))
    assert not np.allclose(unpaired.Q, bare.Q)


def test_assemble_dimension_mismatch():
    with pytest.raises(ValueError, match="length"):
        assemble_QN(free_hamiltonian([1.0]), [LindbladChannel(annihilation(0, 2), 1.0, "a")])


# constant propagation ------------------------------------------------------------


def test_free_rotation():
    w, t = 1.7, 2.3
    gen = assemble_QN(free_hamiltonian([w]), [])
    s = propagate_const(make_state({0: coherent(1.0)}, 1), gen, t)
    x0 = math.sqrt(2)
    assert np.allclose(s.d, [x0 * math.cos(w * t), -x0 * math.sin(w * t)], atol=1e-13)
    assert np.allclose(s.cov, 0.5 * np.eye(2), atol=1e-14)


def test_thermal_relaxation():
    gamma, n0 = 0.2, 4.0
    gen = assemble_QN(free_hamiltonian([1.0]), [LindbladChannel(annihilation(0, 1), gamma, "a")])
    for t in (0.5, 3.0, 11.0):
        s = propagate_const(make_state({0: thermal(n0)}, 1), gen, t)
        assert metrics.occupation(s, 0) == pytest.approx(n0 * math.exp(-gamma * t), rel=1e-10)


def test_propagators_match_quadrature_of_noise_integral():
    gen, _ = swap_generator(ScenarioConfig(f=0.1, G=0.05))
    t = 7.0
    Phi, noise = propagators(gen, t)
    assert np.allclose(Phi, expm(gen.Q * t), atol=1e-12)
    tau = np.linspace(0, t, 2001)
    vals = np.array([expm(gen.Q * (t - s)) @ gen.N @ expm(gen.Q * (t - s)).T for s in tau])
    ref = np.trapezoid(vals, tau, axis=0) if hasattr(np, "trapezoid") else np.trapz(vals, tau, axis=0)
    assert np.allclose(noise, ref, atol=1e-6)


def test_negative_time_rejected():
    gen = assemble_QN(free_hamiltonian([1.0]), [])
    with pytest.raises(ValueError):
        propagate_const(vacuum(1), gen, -1.0)


def test_equal_dissipation_population():
    G, f = 0.0085, 0.05
    gen, _ = swap_generator(ScenarioConfig(f=f, G=G))
    for t in np.linspace(0.2, 2, 5) * metrics.swap_time(G):
        c = cov_at(gen, t)
        nbar = metrics.swap_population(t, G, f * G, f * G, f * G)
        for k in (0, 1):
            n = 0.5 * (c[2 * k, 2 * k] + c[2 * k + 1, 2 * k + 1] - 1)
            # counter-rotating terms add O((G / 2 omega_m)^2) and O(f G / omega_m)
            assert n == pytest.approx(nbar, abs=2 * G**2 + 1e-3 * nbar)


# time-dependent propagation ------------------------------------------------------


def test_timedep_matches_const():
    gen, _ = swap_generator(ScenarioConfig(f=0.05, G=0.034))
    t = uniform_grid(10.0, 0.005)
    traj = propagate_timedep(make_state({1: squeezed(0.3)}, 2), lambda _t: gen, t)
    ref = propagate_const(make_state({1: squeezed(0.3)}, 2), gen, 10.0)
    assert np.abs(traj.cov[-1] - ref.cov).max() < 1e-8
    assert np.abs(traj.d[-1] - ref.d).max() < 1e-8


def test_timedep_fourth_order_convergence():
    cfg = ScenarioConfig(scenario="entangle", f=0.02, G=0.034, omega_at=1.1, modulation=True)
    gen, _ = modulated_generator(cfg)
    T = 10.0
    fine = propagate_timedep(vacuum(2), gen, uniform_grid(T, 0.00625)).cov[-1]
    errs = [np.abs(propagate_timedep(vacuum(2), gen, uniform_grid(T, h)).cov[-1] - fine).max() for h in (0.05, 0.025)]
    assert errs[1] < 1e-6
    assert 12 < errs[0] / errs[1] < 20


def test_timedep_step_limit_enforced():
    gen, _ = swap_generator(ScenarioConfig())
    with pytest.raises(ValueError, match="step"):
        propagate_timedep(vacuum(2), lambda _t: gen, uniform_grid(10.0, 0.5))
    with pytest.raises(ValueError, match="uniform"):
        propagate_timedep(vacuum(2), lambda _t: gen, [0.0, 0.1, 0.15])


def test_modulated_squeezing_grows_monotonically():
    cfg = ScenarioConfig(scenario="entangle", f=0.0, G=0.034, omega_at=1.1, modulation=True)
    gen, wbar = modulated_generator(cfg)
    t = uniform_grid(3 / cfg.G, 0.05)
    traj = propagate_timedep(vacuum(2), gen, t)
    nu = np.array([symplectic_eigenvalues(partial_transpose(s, 1).cov)[0] for s in traj.states()])
    coarse = coarse_grain(nu, t, math.pi / wbar)
    assert len(coarse) > 20
    assert np.all(np.diff(coarse) < 0)


# invariants ----------------------------------------------------------------------


@given(
    f=st.floats(0.0, 0.2),
    G=st.floats(0.005, 0.08),
    state=st.sampled_from(["vacuum", "coherent", "squeezed", "thermal"]),
    model=st.sampled_from(["effective", "full"]),
)
@settings(max_examples=25)
def test_uncertainty_preserved(f, G, state, model):
    spec = {"vacuum": {}, "coherent": {1: coherent(0.7 - 0.2j)}, "squeezed": {1: squeezed(0.2)}, "thermal": {0: thermal(2.0)}}[state]
    gen, _ = swap_generator(ScenarioConfig(f=f, G=G, model=model))
    n = gen.dim // 2
    traj = propagate_grid(make_state(spec, n), gen, np.linspace(0, 2 * metrics.swap_time(G), 25))
    assert min(symplectic_eigenvalues(c)[0] for c in traj.cov) >= 0.5 - 1e-7


@given(w1=st.floats(0.1, 3.0), w2=st.floats(0.1, 3.0), D=st.floats(1e-4, 0.5), G=st.floats(0.0, 0.04))
def test_det_nondecreasing_under_rotation_plus_diffusion(w1, w2, D, G):
    H = free_hamiltonian([w1, w2]) + coupling_hamiltonian(G)
    gen = assemble_QN(H, atom_diffusion_channels(D))
    traj = propagate_grid(make_state({1: squeezed(0.4)}, 2), gen, np.linspace(0, 20, 60))
    dets = np.array([np.linalg.det(c) for c in traj.cov])
    assert np.all(np.diff(dets) >= -1e-10 * dets[:-1])


def cross_block(cfg, times):
    gen, _ = swap_generator(cfg)
    return np.array([cov_at(gen, t)[0:2, 2:4] for t in times])


def test_equal_rate_correlations_stay_small():
    G = 0.034
    times = np.linspace(0, 2 * metrics.swap_time(G), 201)
    for f in (0.01, 0.05, 0.1):
        blocks = cross_block(ScenarioConfig(f=f, G=G), times)
        peak = float(np.abs(blocks).max())
        assert peak <= 0.02, f"f={f}: max |cross block| = {peak:.4f}"


def test_equal_rate_correlations_are_counter_rotating():
    # removing the coupling-only part leaves nothing beyond the counter-rotating band
    G = 0.034
    times = np.linspace(0, 2 * metrics.swap_time(G), 201)
    ref = cross_block(ScenarioConfig(f=0.0, G=G), times)
    for f in (0.01, 0.05, 0.1):
        diff = cross_block(ScenarioConfig(f=f, G=G), times) - ref
        assert np.abs(diff).max() <= G


@pytest.mark.parametrize("G", [0.034, 0.0085])
@pytest.mark.parametrize("Gm,Ga", [(0.1, 0.0), (0.0, 0.1), (0.15, 0.05)])
def test_unequal_rate_correlation_pattern(G, Gm, Ga):
    times = np.linspace(0, 2 * metrics.swap_time(G), 161)
    cfg = ScenarioConfig(f=0.0, G=G, Gamma_m=Gm, Gamma_at=Ga)
    gen, _ = swap_generator(cfg)
    gen0, _ = swap_generator(ScenarioConfig(f=0.0, G=G))
    dm, da = Gm * G, Ga * G
    for t in times:
        c, c0 = cov_at(gen, t), cov_at(gen0, t)
        nbar = metrics.swap_population(t, G, 0.0, dm, da)
        n_m = 0.5 * (np.trace(c[0:2, 0:2]) - np.trace(c0[0:2, 0:2]))
        assert n_m == pytest.approx(nbar + metrics.membrane_rate_imbalance(t, G, dm, da), abs=G)
        cross = np.linalg.norm(c[0:2, 2:4] - c0[0:2, 2:4])
        assert cross == pytest.approx(math.sqrt(2) * abs(dm - da) / (2 * G) * math.sin(G * t) ** 2, abs=G)
