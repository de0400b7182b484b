"""Brute-force density-matrix integrator for the two-mode (membrane, atom) model.

Everything here is built from truncated ladder operators, independently of the
quadrature-vector machinery in :mod:`atom_membrane.dynamics`, so it can be used
to check that machinery. Mode order inside the Kronecker products is
(membrane, atom).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray
from scipy.special import gammaln

from .system import DerivedRates

LEAK_THRESHOLD = 1e-6
MAX_TRUNCATION = 40


@dataclass(frozen=True)
class OracleModel:
    """Generator ingredients in units of omega_m."""

    omega_m: float
    omega_at: float
    G: float
    epsilon: float = 0.0
    gamma_m: float = 0.0
    nbar_m: float = 0.0
    Gamma_at: float = 0.0
    Gamma_c_plus: float = 0.0
    Gamma_c_minus: float = 0.0
    g_m: float = 1.0
    g_at: float = 1.0

    @classmethod
    def from_rates(cls, rates: DerivedRates, use_exact_G: bool = True, include_epsilon: bool = False) -> "OracleModel":
        return cls(
            omega_m=rates.omega_m,
            omega_at=rates.omega_at,
            G=rates.G_exact if use_exact_G else rates.G_dispersive,
            epsilon=rates.epsilon if include_epsilon else 0.0,
            gamma_m=rates.gamma_m,
            nbar_m=rates.nbar_m,
            Gamma_at=rates.Gamma_at,
            Gamma_c_plus=rates.Gamma_c_plus,
            Gamma_c_minus=rates.Gamma_c_minus,
            g_m=rates.g_m,
            g_at=rates.g_at,
        )


def destroy(n: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n, dtype=float)), 1, format="csr").astype(complex)


@dataclass
class Superoperator:
    """Liouvillian split into a diagonal free part and a sparse remainder."""

    n_tr: int
    free_phase: NDArray[np.float64]
    L1: sp.csr_matrix
    ops: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return self.n_tr * self.n_tr

    def apply(self, rho: NDArray[np.complex128]) -> NDArray[np.complex128]:
        """Full Liouvillian acting on a density matrix (for tests)."""
        v = rho.reshape(-1)
        out = -1j * self.free_phase * v + self.L1 @ v
        return out.reshape(rho.shape)


def build_superoperator(model: OracleModel, n_tr: int) -> Superoperator:
    """Row-major vectorized Liouvillian ``-i[H, rho] + sum (gamma/2) D[J] rho``.

    With ``vec(A rho B) = (A kron B^T) vec(rho)`` for row-major flattening.
    """
    if n_tr < 10:
        raise ValueError("truncation must be at least 10")
    if n_tr > MAX_TRUNCATION:
        raise ValueError(f"truncation above {MAX_TRUNCATION} is outside the oracle's intended scale")
    a = destroy(n_tr)
    eye = sp.identity(n_tr, format="csr", dtype=complex)
    am = sp.kron(a, eye, format="csr")
    aa = sp.kron(eye, a, format="csr")
    amd, aad = am.T.conj().tocsr(), aa.T.conj().tocsr()
    D = n_tr * n_tr
    Id = sp.identity(D, format="csr", dtype=complex)

    m = model
    H1 = -m.G * ((am + amd) @ (aa + aad))
    if m.epsilon:
        H1 = H1 - m.G * 1j * m.epsilon * (am @ aa - amd @ aad)

    g = math.hypot(m.g_m, m.g_at)
    F1 = (-m.g_m * am + m.g_at * aa) / g
    F2 = (-m.g_m * am - m.g_at * aa) / g
    jumps = [
        (am, m.gamma_m * (m.nbar_m + 1)),
        (amd, m.gamma_m * m.nbar_m),
        (aa + aad, m.Gamma_at),
        (F1, m.Gamma_c_plus),
        (F2.T.conj(), m.Gamma_c_plus),
        (F1.T.conj(), m.Gamma_c_minus),
        (F2, m.Gamma_c_minus),
    ]

    def spre(A):
        return sp.kron(A, Id, format="csr")

    def spost(A):
        return sp.kron(Id, A.T, format="csr")

    L1 = -1j * (spre(H1) - spost(H1))
    for J, rate in jumps:
        if rate <= 0:
            continue
        J = sp.csr_matrix(J)
        JdJ = J.T.conj() @ J
        # (rate/2) D[J] = rate (J rho J^dag - {J^dag J, rho}/2)
        L1 = L1 + rate * (sp.kron(J, J.conj(), format="csr") - 0.5 * spre(JdJ) - 0.5 * spost(JdJ))
    n = np.arange(n_tr)
    energy = (m.omega_m * n[:, None] + m.omega_at * n[None, :]).reshape(-1)
    phase = (energy[:, None] - energy[None, :]).reshape(-1)
    ops = {"am": am, "aa": aa}
    return Superoperator(n_tr=n_tr, free_phase=phase, L1=L1.tocsr(), ops=ops)


class TruncationLeak(RuntimeError):
    """Raised when the top Fock level of either mode is noticeably populated."""


@dataclass
class DensityMatrix:
    n_tr: int
    rho: NDArray[np.complex128]

    def check(self, trace_tol: float = 1e-8, herm_tol: float = 1e-10, eig_tol: float = 1e-8) -> "DensityMatrix":
        tr = np.trace(self.rho)
        if abs(tr - 1) > trace_tol:
            raise ValueError(f"trace {tr} deviates from 1")
        if np.max(np.abs(self.rho - self.rho.conj().T)) > herm_tol:
            raise ValueError("density matrix is not Hermitian")
        if np.min(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))) < -eig_tol:
            raise ValueError("density matrix has negative eigenvalues")
        return self

    def membrane(self) -> NDArray[np.complex128]:
        n = self.n_tr
        return np.einsum("iaja->ij", self.rho.reshape(n, n, n, n))

    def atom(self) -> NDArray[np.complex128]:
        n = self.n_tr
        return np.einsum("aiaj->ij", self.rho.reshape(n, n, n, n))

    def top_population(self) -> float:
        """Largest marginal population of the highest retained Fock level."""
        return float(max(self.membrane()[-1, -1].real, self.atom()[-1, -1].real))


# states ---------------------------------------------------------------------


def coherent_ket(alpha: complex, n: int) -> NDArray[np.complex128]:
    k = np.arange(n)
    with np.errstate(divide="ignore"):
        logmag = k * np.log(abs(alpha)) if alpha != 0 else np.where(k == 0, 0.0, -np.inf)
    amp = np.exp(-abs(alpha) ** 2 / 2 + logmag - 0.5 * gammaln(k + 1))
    phase = np.exp(1j * k * np.angle(alpha)) if alpha != 0 else np.ones(n)
    return amp * phase


def squeezed_ket(s: float, n: int) -> NDArray[np.complex128]:
    """Squeezed vacuum with X variance ``s/2`` (``s = exp(-2 r)``)."""
    r = -0.5 * math.log(s)
    t = math.tanh(r)
    out = np.zeros(n, dtype=complex)
    for m in range((n + 1) // 2):
        out[2 * m] = (-t) ** m * math.exp(0.5 * gammaln(2 * m + 1) - m * math.log(2) - gammaln(m + 1))
    return out / math.sqrt(math.cosh(r))


def fock_ket(k: int, n: int) -> NDArray[np.complex128]:
    v = np.zeros(n, dtype=complex)
    v[k] = 1.0
    return v


def thermal_dm(nbar: float, n: int) -> NDArray[np.complex128]:
    k = np.arange(n)
    p = (nbar / (nbar + 1)) ** k / (nbar + 1) if nbar > 0 else (k == 0).astype(float)
    return np.diag(p).astype(complex)


def product_state(membrane, atom) -> DensityMatrix:
    """``membrane`` and ``atom`` are kets (1-D) or density matrices (2-D) of equal size."""

    def dm(x):
        x = np.asarray(x, dtype=complex)
        return np.outer(x, x.conj()) if x.ndim == 1 else x

    rm, ra = dm(membrane), dm(atom)
    if rm.shape != ra.shape:
        raise ValueError("both modes must use the same truncation")
    return DensityMatrix(rm.shape[0], np.kron(rm, ra))


# propagation ----------------------------------------------------------------


def propagate_density(
    rho0: DensityMatrix,
    superop: Superoperator,
    t: float,
    h: float = 0.2,
    leak_threshold: float = LEAK_THRESHOLD,
) -> DensityMatrix:
    """Integrating-factor RK4 with the free rotation treated exactly.

    Each step is followed by Hermitization and trace renormalization. The top
    Fock level population is checked after every step.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if superop.n_tr != rho0.n_tr:
        raise ValueError("state and superoperator truncations differ")
    D = superop.dim
    nsteps = max(1, int(math.ceil(t / h - 1e-12)))
    h = t / nsteps if t > 0 else 0.0
    ph = superop.free_phase
    e_full = np.exp(-1j * ph * h)
    e_half = np.exp(-1j * ph * h / 2)
    L1 = superop.L1
    v = rho0.rho.reshape(-1).astype(complex).copy()
    diag = np.arange(D) * (D + 1)
    for _ in range(nsteps if t > 0 else 0):
        k1 = L1 @ v
        v_half = e_half * v
        k2 = L1 @ (v_half + h / 2 * e_half * k1)
        k3 = L1 @ (v_half + h / 2 * k2)
        k4 = L1 @ (e_full * v + h * e_half * k3)
        v = e_full * v + h / 6 * (e_full * k1 + 2 * e_half * k2 + 2 * e_half * k3 + k4)
        M = v.reshape(D, D)
        M = 0.5 * (M + M.conj().T)
        v = (M / np.trace(M).real).reshape(-1)
        top = _top_population(v[diag].real, superop.n_tr)
        if top > leak_threshold:
            raise TruncationLeak(
                f"top Fock level population {top:.3e} exceeds {leak_threshold:.1e}; increase the truncation"
            )
    return DensityMatrix(superop.n_tr, v.reshape(D, D))


def _top_population(p: NDArray, n: int) -> float:
    p = p.reshape(n, n)
    return float(max(p[-1, :].sum(), p[:, -1].sum()))


# observables -----------------------------------------------------------------


def moments(state: DensityMatrix) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Displacement and symmetrized covariance in (X_m, P_m, X_at, P_at) order.

    Uses the reduced states for single-mode moments and ``<a_m^(dag) a_at^(dag)>``
    for the cross terms so the truncated ladder operators never multiply past
    the cut.
    """
    n = state.n_tr
    a = destroy(n).toarray()
    rho = state.rho
    rm, ra = state.membrane(), state.atom()

    def ev1(r, op):
        return np.trace(op @ r)

    means = {}
    second = {}
    for key, r in (("m", rm), ("at", ra)):
        means[key] = ev1(r, a)
        second[key] = (ev1(r, a @ a), ev1(r, a.conj().T @ a))
    R4 = rho.reshape(n, n, n, n)
    # <A_m B_at> = sum A[j,i] B[b,a] rho[i,a,j,b]
    ad = a.conj().T
    ab = np.einsum("ji,ba,iajb->", a, a, R4)
    adb = np.einsum("ji,ba,iajb->", ad, a, R4)

    d = np.zeros(4)
    cov = np.zeros((4, 4))
    for k, key in enumerate(("m", "at")):
        al = means[key]
        aa, na = second[key]
        d[2 * k] = math.sqrt(2) * al.real
        d[2 * k + 1] = math.sqrt(2) * al.imag
        # <XX> = (<aa> + <a^dag a^dag> + 2<a^dag a> + 1)/2, etc.
        xx = 0.5 * (2 * aa.real + 2 * na.real + 1)
        pp = 0.5 * (-2 * aa.real + 2 * na.real + 1)
        xp = aa.imag  # symmetrized <XP + PX>/2 = Im<aa>
        i = 2 * k
        cov[i, i] = xx - d[i] ** 2
        cov[i + 1, i + 1] = pp - d[i + 1] ** 2
        cov[i, i + 1] = cov[i + 1, i] = xp - d[i] * d[i + 1]
    # cross block from <a_m a_at> and <a_m^dag a_at>
    xmxa = 0.5 * (2 * ab.real + 2 * adb.real)
    pmpa = 0.5 * (-2 * ab.real + 2 * adb.real)
    xmpa = ab.imag + adb.imag
    pmxa = ab.imag - adb.imag
    cross = np.array([[xmxa, xmpa], [pmxa, pmpa]]) - np.outer(d[0:2], d[2:4])
    cov[0:2, 2:4] = cross
    cov[2:4, 0:2] = cross.T
    return d, cov


def parity(rho_single: NDArray[np.complex128]) -> float:
    p = np.real(np.diag(rho_single))
    return float(np.sum(p * (-1.0) ** np.arange(p.size)))


def wigner_origin_normalized(state: DensityMatrix) -> float:
    """Membrane Wigner value at the origin in units of ``|W_{|1>}(0)|``, i.e. the parity."""
    return parity(state.membrane())


def overlap(rho_single: NDArray[np.complex128], ket: NDArray[np.complex128]) -> float:
    return float(np.real(ket.conj() @ rho_single @ ket))
