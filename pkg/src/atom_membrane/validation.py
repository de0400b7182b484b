"""Self-checks shared by ``validate`` and the test suite.

The Gaussian suite compares the moment engine with closed forms; the oracle
suite compares it with the truncated Fock-space integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import metrics, oracle
from .dynamics import (
    assemble_QN,
    effective_generator,
    membrane_bath_channels,
    atom_diffusion_channels,
    free_hamiltonian,
    propagate_const,
    propagate_grid,
    propagators,
)
from .gaussian import coherent, make_state, symplectic_eigenvalues, vacuum
from .system import DerivedRates


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(abs(self.value) <= self.tol)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.value:.3e} (tol {self.tol:.1e})"


def gaussian_suite(G: float = 0.034, f: float = 0.05) -> list[Check]:
    rates = DerivedRates.from_noise_ratio(G, f)
    gen = assemble_QN(*effective_generator(rates))
    ts = metrics.swap_time(G)
    out = []

    traj = propagate_grid(make_state({1: coherent(1.0)}, 2), gen, np.linspace(0, 2 * ts, 81))
    nu = min(symplectic_eigenvalues(c)[0] for c in traj.cov)
    out.append(Check("uncertainty: 0.5 - min symplectic eigenvalue", max(0.0, 0.5 - nu), 1e-7))

    gen_fock = metrics.fock_negativity_numeric(gen, ts)
    Phi, noise = propagators(gen, ts)
    cov_m = (Phi @ Phi.T / 2 + noise)[0:2, 0:2]
    quad = metrics.fock_negativity_quadrature(Phi, cov_m)
    out.append(Check("Fock negativity closed form vs quadrature", gen_fock - quad, 1e-8))
    rwa = metrics.fock_negativity_rwa(ts, G, f * G, f * G, f * G)
    out.append(Check("Fock negativity vs RWA", gen_fock - rwa, 0.03))

    F = metrics.transfer_fidelity(propagate_const(vacuum(2), gen, ts).mode_block(0), 0.5 * np.eye(2))
    out.append(Check("coherent swap fidelity vs RWA", F - 1 / (1 + math.pi * f), 0.02))

    # damping only: the steady state is the vacuum
    H = free_hamiltonian([1.0, 1.1])
    damp = assemble_QN(H, membrane_bath_channels(0.2, 0.0))
    state = propagate_const(make_state({0: coherent(1.5)}, 2), damp, 400.0)
    err = max(np.abs(state.cov[0:2, 0:2] - 0.5 * np.eye(2)).max(), np.abs(state.d[0:2]).max())
    out.append(Check("damped membrane relaxes to vacuum", err, 1e-9))

    diffusion = assemble_QN(free_hamiltonian([1.0, 1.0]), atom_diffusion_channels(0.01))
    n_at = metrics.occupation(propagate_const(vacuum(2), diffusion, 100.0), 1)
    out.append(Check("atom diffusion heats at Gamma_at", n_at - 0.01 * 100.0, 1e-9))
    return out


def oracle_suite(G: float = 0.034, f: float = 0.05, n_tr: int = 25, h: float = 0.2) -> list[Check]:
    rates = DerivedRates.from_noise_ratio(G, f)
    gen = assemble_QN(*effective_generator(rates))
    sup = oracle.build_superoperator(oracle.OracleModel.from_rates(rates), n_tr)
    ts = metrics.swap_time(G)
    out = []

    rho = oracle.propagate_density(oracle.product_state(oracle.fock_ket(0, n_tr), oracle.coherent_ket(1.0, n_tr)), sup, ts, h)
    d, cov = oracle.moments(rho)
    ref = propagate_const(make_state({1: coherent(1.0)}, 2), gen, ts)
    out.append(Check("coherent swap displacement, oracle vs Gaussian", np.abs(d - ref.d).max(), 1e-5))
    out.append(Check("coherent swap covariance, oracle vs Gaussian", np.abs(cov - ref.cov).max(), 1e-5))

    rho = oracle.propagate_density(oracle.product_state(oracle.fock_ket(0, n_tr), oracle.fock_ket(1, n_tr)), sup, ts, h)
    _, cov = oracle.moments(rho)
    Phi, noise = propagators(gen, ts)
    # |1> has the covariance of a thermal state with one quantum
    cov_ref = Phi @ np.diag([0.5, 0.5, 1.5, 1.5]) @ Phi.T + noise
    out.append(Check("Fock swap covariance, oracle vs Gaussian", np.abs(cov - cov_ref).max(), 1e-5))
    w = oracle.wigner_origin_normalized(rho)
    out.append(Check("Fock swap Wigner origin, oracle vs closed form", w - metrics.fock_negativity_numeric(gen, ts), 1e-3))
    return out


SUITES = {"gaussian": gaussian_suite, "oracle": oracle_suite}
