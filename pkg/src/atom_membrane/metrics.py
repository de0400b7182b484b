"""Figures of merit for state transfer and entanglement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import integrate

from .gaussian import GaussianState, partial_transpose, symplectic_eigenvalues


def _block(cov, name: str = "covariance block") -> NDArray[np.float64]:
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2):
        raise ValueError(f"{name} must be 2x2, got {cov.shape}")
    return 0.5 * (cov + cov.T)


def transfer_fidelity(cov_m_t, cov_at_0) -> float:
    """``1 / sqrt(det(cov_m(t) + cov_at(0)))``; ignores displacement."""
    S = _block(cov_m_t) + _block(cov_at_0)
    det = float(np.linalg.det(S))
    if det <= 0 or S[0, 0] <= 0:
        raise ValueError("sum of covariance blocks is not positive definite")
    return 1.0 / math.sqrt(det)


def gaussian_overlap(cov_rho, d_rho, cov_psi, d_psi) -> float:
    """``<psi|rho|psi>`` for a pure Gaussian ``psi`` and single-mode Gaussian ``rho``."""
    S = _block(cov_rho) + _block(cov_psi)
    delta = np.asarray(d_rho, dtype=float) - np.asarray(d_psi, dtype=float)
    det = float(np.linalg.det(S))
    if det <= 0:
        raise ValueError("sum of covariance blocks is not positive definite")
    return math.exp(-0.5 * delta @ np.linalg.solve(S, delta)) / math.sqrt(det)


def min_variance(cov_block) -> tuple[float, float]:
    """Smallest quadrature variance as ``s`` (variance ``s/2``) and its angle in radians."""
    w, v = np.linalg.eigh(_block(cov_block))
    vec = v[:, 0]
    angle = math.atan2(vec[1], vec[0])
    if angle <= -math.pi / 2:
        angle += math.pi
    elif angle > math.pi / 2:
        angle -= math.pi
    return 2.0 * float(w[0]), angle


def squeezing_db(s: float) -> float:
    return 10.0 * math.log10(s)


def occupation(state: GaussianState, mode: int) -> float:
    c = state.mode_block(mode)
    d = state.mode_displacement(mode)
    return 0.5 * (c[0, 0] + c[1, 1] - 1.0) + 0.5 * float(d @ d)


def log_negativity(state: GaussianState) -> float:
    """``max(0, -log2(2 nu))`` with ``nu`` the smallest partially transposed symplectic eigenvalue."""
    if state.n_modes != 2:
        raise ValueError("logarithmic negativity is implemented for two modes")
    nu = symplectic_eigenvalues(partial_transpose(state, 1).cov)[0]
    return max(0.0, -math.log2(2.0 * nu))


# Fock-state transfer ---------------------------------------------------------


def fock_negativity(Phi, cov_m) -> float:
    """Normalized Wigner value at the membrane origin after transferring ``|1>``.

    ``Phi`` is the moment transfer matrix ``d(t) = Phi d(0)`` and ``cov_m`` the
    membrane block of the covariance evolved from the two-mode vacuum. The
    characteristic function of the membrane is
    ``(1 - xi^T C xi / 2) exp(-xi^T A xi / 2)`` with ``C = B B^T`` and ``B`` the
    membrane-row, atom-column block of ``Phi``; the Gaussian integral gives
    ``(1 - tr(A^-1 C) / 2) / (2 sqrt(det A))``.
    """
    Phi = np.asarray(Phi, dtype=float)
    A = _block(cov_m, "membrane covariance")
    B = Phi[0:2, 2:4]
    C = B @ B.T
    det = float(np.linalg.det(A))
    if det <= 0 or A[0, 0] <= 0:
        raise ValueError("membrane covariance is not positive definite; characteristic function diverges")
    return (1.0 - 0.5 * float(np.trace(np.linalg.solve(A, C)))) / (2.0 * math.sqrt(det))


def fock_negativity_numeric(gen, t: float) -> float:
    """Fock negativity after time ``t`` under a constant generator, starting from ``|0>_m |1>_at``."""
    from .dynamics import propagators

    Phi, noise = propagators(gen, t)
    cov = Phi @ (0.5 * np.eye(Phi.shape[0])) @ Phi.T + noise
    return fock_negativity(Phi, cov[0:2, 0:2])


def fock_negativity_quadrature(Phi, cov_m, cutoff: float = 12.0) -> float:
    """Same quantity by direct 2-D integration of the characteristic function."""
    A = _block(cov_m)
    B = np.asarray(Phi, dtype=float)[0:2, 2:4]
    C = B @ B.T
    w, V = np.linalg.eigh(A)
    # integrate in the eigenbasis of A, out to ``cutoff`` standard deviations
    R = cutoff / np.sqrt(w)

    def integrand(y, x):
        xi = V @ np.array([x, y])
        return (1.0 - 0.5 * xi @ C @ xi) * math.exp(-0.5 * xi @ A @ xi)

    val, _ = integrate.dblquad(integrand, -R[0], R[0], -R[1], R[1], epsabs=1e-12, epsrel=1e-10)
    return val / (4.0 * math.pi)


def fock_negativity_rwa(t, G: float, Gamma_c: float, Gamma_m: float, Gamma_at: float):
    """Beam-splitter prediction for the Fock negativity with thermalization."""
    if min(Gamma_c, Gamma_m, Gamma_at) < 0:
        raise ValueError("rates must be non-negative")
    if G == 0:
        if Gamma_m != Gamma_at:
            raise ValueError("G = 0 with unequal membrane and atom rates is undefined")
        corr = 0.0
    t = np.asarray(t, dtype=float)
    nbar = 0.5 * (2 * Gamma_c + Gamma_m + Gamma_at) * t
    if G != 0:
        corr = np.sin(2 * G * t) * (Gamma_m - Gamma_at) / (2 * G)
    val = (2 * nbar + np.cos(2 * G * t) + corr) / (1 + 2 * nbar + corr) ** 2
    return float(val) if val.ndim == 0 else val


def membrane_rate_imbalance(t, G: float, Gamma_m: float, Gamma_at: float):
    """Beam-splitter shift of the membrane occupation from unequal local rates.

    ``(Gamma_m - Gamma_at) sin(2 G t) / (4 G)``, which tends to ``(Gamma_m - Gamma_at) t / 2``
    as ``G -> 0`` so the membrane heats at ``Gamma_m`` when uncoupled.
    """
    t = np.asarray(t, dtype=float)
    val = np.sin(2 * G * t) * (Gamma_m - Gamma_at) / (4 * G) if G != 0 else 0.5 * (Gamma_m - Gamma_at) * t
    return float(val) if np.ndim(val) == 0 else val


def swap_time(G: float) -> float:
    if G <= 0:
        raise ValueError("G must be positive")
    return math.pi / (2.0 * G)


def swap_population(t, G: float, Gamma_c: float, Gamma_m: float, Gamma_at: float):
    return 0.5 * (2 * Gamma_c + Gamma_m + Gamma_at) * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class RwaPrediction:
    t_swap: float
    fidelity_swap: float
    n_bar_swap: float
    squeezing_offset: float
    fock_negativity_swap: float

    def squeezing_out(self, s0: float) -> float:
        """Minimal variance parameter after the swap for an input ``s0``."""
        return s0 + self.squeezing_offset


def rwa_predictions(f: float, G: float) -> RwaPrediction:
    """Swap endpoint for equal noise rates ``f G``."""
    if f < 0:
        raise ValueError("f must be non-negative")
    ts = swap_time(G)
    return RwaPrediction(
        t_swap=ts,
        fidelity_swap=1.0 / (1.0 + math.pi * f),
        n_bar_swap=math.pi * f,
        squeezing_offset=2.0 * math.pi * f,
        fock_negativity_swap=float(fock_negativity_rwa(ts, G, f * G, f * G, f * G)),
    )


def thermal_block(nbar: float) -> NDArray[np.float64]:
    return (nbar + 0.5) * np.eye(2)


def displacement_fidelity(state_m: GaussianState, target: GaussianState) -> float:
    """Overlap with a pure single-mode target, including displacement mismatch."""
    return gaussian_overlap(state_m.cov, state_m.d, target.cov, target.d)


def all_symplectic_ok(covs, tol: float = 1e-7) -> bool:
    return all(symplectic_eigenvalues(c)[0] >= 0.5 - tol for c in covs)
