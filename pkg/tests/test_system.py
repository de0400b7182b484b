import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from atom_membrane.system import (
    HBAR,
    ConditionThresholds,
    DerivedRates,
    PhysicalParams,
    check_strong_coupling,
    derive_rates,
    dispersive_coupling,
    exact_coupling,
    intracavity_amplitude,
    membrane_coupling_factor,
    optimal_swap_coupling,
    sideband_rates,
    single_mode_coupling,
    squeezing_correction,
    swap_residual_occupation,
)

BASE = dict(
    L=5.3e-5, r=0.4, M=1e-14, omega_m=2 * math.pi * 1e6, Q_m=1e7, m_atom=2.2069e-25, gamma_atom=1.6336e7,
    Omega0=4e8, delta=-7.5e9, Delta=1e9, finesse=2e5, wavelength=852e-9, T=2.0, alpha=3000.0,
)


def params(**kw):
    return PhysicalParams(**{**BASE, **kw})


def test_amplitude_limits():
    P, kappa, wc = 1e-6, 1e7, 2.2e15
    E = math.sqrt(2 * P * kappa / (HBAR * wc))
    assert intracavity_amplitude(P, kappa, 0.0, wc) == pytest.approx(E / kappa, rel=1e-14)
    assert intracavity_amplitude(0.0, kappa, 1e9, wc) == 0.0
    Delta = 1e4 * kappa
    a = intracavity_amplitude(P, kappa, Delta, wc)
    assert a**2 == pytest.approx((kappa / Delta) ** 2 * 2 * P / (kappa * HBAR * wc), rel=1e-7)
    with pytest.raises(ValueError):
        intracavity_amplitude(P, 0.0, 0.0, wc)


def test_exact_coupling_example():
    r = DerivedRates.from_couplings(1.0, 1.0, 10.0, 0.0, 1.0)
    assert r.G_exact == pytest.approx(2 * (9 / 81 + 11 / 121), rel=1e-14)
    assert r.G_exact == pytest.approx(0.40404, abs=5e-6)
    assert r.G_dispersive == pytest.approx(0.4, rel=1e-15)
    assert r.epsilon == 0.0


def test_dispersive_decay_ratio():
    r = DerivedRates.from_couplings(1.0, 1.0, 1e3, 100.0, 1.0)
    assert r.Gamma_c_dispersive / r.G_dispersive == pytest.approx(0.1, rel=1e-14)


def test_resonant_divergence_rejected():
    with pytest.raises(ValueError):
        exact_coupling(1.0, 1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        sideband_rates(1.0, 1.0, -1.0, 0.0, 1.0)


def test_single_mode_coupling():
    assert single_mode_coupling(1, 1, 10) == pytest.approx(0.2)
    assert single_mode_coupling(1, 0, 10) == 0.0
    with pytest.raises(ValueError):
        single_mode_coupling(1, 1, 0)


@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(1, 1e3) | st.floats(-1e3, -1))
def test_single_mode_is_half_of_two_mode(gm, ga, Delta):
    assert single_mode_coupling(gm, ga, Delta) == pytest.approx(dispersive_coupling(gm, ga, Delta) / 2, rel=1e-15)


def test_optimal_swap_coupling_values():
    # (2 pi 1e-3)^(1/3) evaluated independently
    assert optimal_swap_coupling(1e-3, 1.0) == pytest.approx(0.184527, abs=1e-6)
    assert optimal_swap_coupling(8e-3, 1.0) == pytest.approx(2 * optimal_swap_coupling(1e-3, 1.0), rel=1e-14)
    with pytest.raises(ValueError):
        optimal_swap_coupling(0.0, 1.0)


def test_optimal_swap_coupling_is_a_minimum():
    Gc = 1e-3
    G = np.linspace(0.05, 0.5, 200001)
    n = swap_residual_occupation(G, Gc, 1.0)
    assert G[np.argmin(n)] == pytest.approx(optimal_swap_coupling(Gc, 1.0), rel=1e-5)


def test_coupling_factor_default_and_position():
    assert membrane_coupling_factor(0.4) == pytest.approx(0.8)
    k = 2 * math.pi / 852e-9
    x = math.pi / (8 * k)  # sin(2kx) = cos(2kx) = 1/sqrt 2
    assert membrane_coupling_factor(0.4, k, x) == pytest.approx(0.8 / math.sqrt(2) / math.sqrt(1 - 0.08), rel=1e-9)
    with pytest.raises(ValueError):
        membrane_coupling_factor(1.0)


admissible = st.tuples(st.floats(0.1, 3), st.floats(0.1, 3), st.floats(0, 5), st.floats(0.2, 5), st.booleans(), st.floats(10, 200))


@given(admissible)
def test_exact_coupling_converges_to_dispersive(p):
    gm, ga, kappa, wm, sign, scale = p
    Delta = scale * max(wm, kappa)
    Delta = Delta if sign else -Delta
    Ge, Gd = exact_coupling(gm, ga, Delta, kappa, wm), dispersive_coupling(gm, ga, Delta)
    assert abs(Ge / Gd - 1) <= 2 * ((wm / Delta) ** 2 + (kappa / Delta) ** 2)


@given(st.floats(0.1, 3), st.floats(0.1, 3), st.floats(0.01, 5), st.floats(0.2, 5), st.floats(10, 200))
def test_heating_sideband_exceeds_cooling_for_positive_detuning(gm, ga, kappa, wm, scale):
    plus, minus = sideband_rates(gm, ga, scale * max(wm, kappa), kappa, wm)
    assert minus > plus > 0


def test_noise_to_coupling_ratio_minimized_at_balance():
    prod = 1.0
    gm = np.geomspace(0.1, 10, 2001)
    ratio = [sum(sideband_rates(g, prod / g, 50.0, 1.0, 1.0)) / exact_coupling(g, prod / g, 50.0, 1.0, 1.0) for g in gm]
    assert gm[int(np.argmin(ratio))] == pytest.approx(1.0, rel=5e-3)


def test_squeezing_correction():
    assert squeezing_correction(10.0, 0.0, 1.0) == 0.0
    assert squeezing_correction(10.0, 1.0, 1.0) == pytest.approx(2 / 100, rel=1e-14)


def test_derived_rates_invariants():
    r = derive_rates(params())
    assert r.g**2 == pytest.approx(r.g_m**2 + r.g_at**2, rel=1e-12)
    for name in ("Gamma_c_plus", "Gamma_c_minus", "Gamma_c_dispersive", "Gamma_at", "Gamma_m", "epsilon"):
        assert getattr(r, name) >= 0
    s = r.scaled()
    assert s.omega_m == 1.0 and s.G_exact == pytest.approx(r.G_exact / r.omega_m)
    assert s.f_c == pytest.approx(r.f_c)


def test_derived_rates_reject_inconsistent_g():
    r = DerivedRates.from_couplings(1.0, 1.0, 10.0, 1.0)
    with pytest.raises(ValueError):
        replace(r, g=1.0)


def test_small_amplitude_warns():
    with pytest.warns(UserWarning):
        derive_rates(params(alpha=5.0))


def test_physical_params_requires_one_of_each_pair():
    with pytest.raises(ValueError):
        params(kappa=1e7)
    with pytest.raises(ValueError):
        PhysicalParams(**{k: v for k, v in BASE.items() if k != "T"})
    with pytest.raises(ValueError):
        params(r=1.0)


def test_finesse_and_kappa_are_consistent():
    p = params()
    q = params(finesse=None, kappa=p.decay_rate)
    assert q.cavity_finesse == pytest.approx(p.cavity_finesse, rel=1e-14)


def test_margins_do_not_depend_on_drive():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = check_strong_coupling(params(alpha=100.0), None, 1e-8 / 1.380649e-23).to_dict()
        b = check_strong_coupling(params(alpha=1e5), None, 1e-8 / 1.380649e-23).to_dict()
    assert a == b


def test_balance_point_and_margin_three():
    p = params()
    C = p.cooperativity
    # choose M so (4 r F / pi) sqrt(m/M) = (gamma/|delta|) C
    target = (p.gamma_atom / abs(p.delta)) * C / (4 * p.r * p.cavity_finesse / math.pi)
    q = params(M=p.m_atom / target**2)
    rep = check_strong_coupling(q, None, 1e12)
    assert rep.balance_2 == pytest.approx(1.0, rel=1e-12) and rep.condition_2
    # choose Delta so that C = 10 Delta / (4 kappa)
    q = params(Delta=4 * p.decay_rate * C / 10)
    assert check_strong_coupling(q, None, 1e12).margin_3 == pytest.approx(10.0, rel=1e-12)


def test_finesse_over_cooperativity_depends_only_on_cross_section():
    p = params()
    # twice the length at fixed waist halves Omega0^2; the finesse is a mirror property
    q = params(L=2 * p.L, Omega0=p.Omega0 / math.sqrt(2))
    assert q.cavity_finesse / q.cooperativity == pytest.approx(p.cavity_finesse / p.cooperativity, rel=1e-12)


def test_report_flags_follow_thresholds():
    rep = check_strong_coupling(params(), None, 1e-8 / 1.380649e-23)
    assert rep.all_pass
    strict = check_strong_coupling(params(), None, 1e-8 / 1.380649e-23, ConditionThresholds(margin=1e3))
    assert not strict.condition_1 and strict.margin_1 == rep.margin_1


def test_resonance_amplitude_puts_atom_on_membrane_frequency():
    p = params(zeta=0.5)
    alpha = check_strong_coupling(p, None, 1e12).resonance_alpha
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = derive_rates(params(zeta=0.5, alpha=alpha))
    assert r.omega_at == pytest.approx(p.omega_m, rel=1e-12)


def test_atom_rates_follow_definitions():
    p = params()
    r = derive_rates(p)
    eta = p.k1 * math.sqrt(HBAR / (2 * p.m_atom * r.omega_at))
    assert r.g_at == pytest.approx(abs(p.U0) * p.alpha * eta * p.theta, rel=1e-13)
    s_e = (p.alpha * p.Omega0 / p.delta) ** 2
    assert r.Gamma_at == pytest.approx(eta**2 * s_e * p.gamma_atom * (2 - 0.8 * p.u), rel=1e-13)
