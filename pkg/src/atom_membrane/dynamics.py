"""Quadratic generators and Gaussian moment propagation.

A master equation ``drho/dt = -i[R^T H R, rho] + sum_k (gamma_k/2) D[L_k . R] rho``
with ``D[a] rho = 2 a rho a^dag - {a^dag a, rho}`` is reduced to a drift matrix
``Q`` and a diffusion matrix ``N`` acting on the first and second moments.

Mode order for the effective model is (membrane, atom); the full model appends
the two cavity modes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import expm

from .gaussian import GaussianState, symplectic_form
from .system import DerivedRates

MEMBRANE, ATOM, CAVITY1, CAVITY2 = 0, 1, 2, 3
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """Real symmetric ``H`` with Hamiltonian ``R^T H R``."""

    H: NDArray[np.float64]

    def __post_init__(self):
        H = np.array(self.H, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] % 2:
            raise ValueError(f"H must be square with even dimension, got {H.shape}")
        if np.max(np.abs(H - H.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(H), initial=0.0)):
            raise ValueError("H must be symmetric")
        object.__setattr__(self, "H", 0.5 * (H + H.T))

    @property
    def n_modes(self) -> int:
        return self.H.shape[0] // 2

    def __add__(self, other: "QuadraticHamiltonian") -> "QuadraticHamiltonian":
        return QuadraticHamiltonian(self.H + other.H)


@dataclass(frozen=True)
class LindbladChannel:
    """Jump operator ``L . R`` with rate ``gamma_k`` (prefactor ``gamma_k / 2`` on D)."""

    L: NDArray[np.complex128]
    rate: float
    label: str = ""

    def __post_init__(self):
        L = np.array(self.L, dtype=complex).reshape(-1)
        if self.rate < 0:
            raise ValueError(f"channel {self.label!r} has negative rate {self.rate}")
        if not np.any(L):
            raise ValueError(f"channel {self.label!r} has a zero jump vector")
        object.__setattr__(self, "L", L)


@dataclass(frozen=True)
class GeneratorMatrices:
    Q: NDArray[np.float64]
    N: NDArray[np.float64]

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        N = np.array(self.N, dtype=float)
        if Q.shape != N.shape or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q and N must be square with equal shapes")
        if np.max(np.abs(N - N.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(N), initial=0.0)):
            raise ValueError("N must be symmetric")
        N = 0.5 * (N + N.T)
        if N.size and np.min(np.linalg.eigvalsh(N)) < -1e-12 * max(1.0, np.max(np.abs(N))):
            raise ValueError("N must be positive semidefinite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "N", N)

    @property
    def dim(self) -> int:
        return self.Q.shape[0]


# jump vectors -------------------------------------------------------------


def annihilation(mode: int, n_modes: int) -> NDArray[np.complex128]:
    """Vector ``v`` with ``a_mode = v . R``."""
    v = np.zeros(2 * n_modes, dtype=complex)
    v[2 * mode] = 1 / SQRT2
    v[2 * mode + 1] = 1j / SQRT2
    return v


def creation(mode: int, n_modes: int) -> NDArray[np.complex128]:
    return annihilation(mode, n_modes).conj()


def position(mode: int, n_modes: int) -> NDArray[np.complex128]:
    """Vector for ``a + a^dag = sqrt(2) X``."""
    v = np.zeros(2 * n_modes, dtype=complex)
    v[2 * mode] = SQRT2
    return v


def force_vectors(g_m: float, g_at: float, n_modes: int = 2) -> tuple[NDArray, NDArray]:
    """Vectors of ``F_{1,2} = (-g_m a_m +/- g_at a_at) / g``."""
    g = math.hypot(g_m, g_at)
    if g == 0:
        raise ValueError("at least one of g_m, g_at must be nonzero")
    am, aa = annihilation(MEMBRANE, n_modes), annihilation(ATOM, n_modes)
    return (-g_m * am + g_at * aa) / g, (-g_m * am - g_at * aa) / g


# Hamiltonians --------------------------------------------------------------


def quadratic_form(terms: Iterable[tuple[complex, NDArray, NDArray]], dim: int) -> QuadraticHamiltonian:
    """Matrix of ``sum_j c_j (u_j . R)(v_j . R)`` with constants dropped.

    Each product contributes ``c (u v^T + v u^T) / 2``; the commutator part only
    shifts the energy. The sum must be Hermitian, i.e. its matrix real.
    """
    M = np.zeros((dim, dim), dtype=complex)
    for c, u, v in terms:
        u, v = np.asarray(u), np.asarray(v)
        M += 0.5 * c * (np.outer(u, v) + np.outer(v, u))
    if np.max(np.abs(M.imag), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(M.real), initial=0.0)):
        raise ValueError("quadratic form is not Hermitian")
    return QuadraticHamiltonian(M.real)


def free_hamiltonian(frequencies: Sequence[float]) -> QuadraticHamiltonian:
    """``sum_j w_j a_j^dag a_j`` as ``diag(w/2, w/2, ...)``."""
    return QuadraticHamiltonian(np.diag(np.repeat(np.asarray(frequencies, dtype=float) / 2.0, 2)))


def coupling_hamiltonian(G: float, epsilon: float = 0.0, n_modes: int = 2) -> QuadraticHamiltonian:
    """``-G[(a_m + a_m^dag)(a_at + a_at^dag) + i eps (a_m a_at - a_m^dag a_at^dag)]``."""
    am, aa = annihilation(MEMBRANE, n_modes), annihilation(ATOM, n_modes)
    xm, xa = position(MEMBRANE, n_modes), position(ATOM, n_modes)
    terms = [(-G, xm, xa)]
    if epsilon:
        terms += [(-1j * G * epsilon, am, aa), (1j * G * epsilon, am.conj(), aa.conj())]
    return quadratic_form(terms, 2 * n_modes)


def sideband_factors(g: float, Delta: float, kappa: float, omega_m: float) -> tuple[complex, complex]:
    """``h_-, h_+ = g^2 / (kappa + i(Delta -/+ omega_m))``."""
    dm, dp = complex(kappa, Delta - omega_m), complex(kappa, Delta + omega_m)
    if dm == 0 or dp == 0:
        raise ValueError("detuning resonant with a membrane sideband at kappa = 0")
    return g**2 / dm, g**2 / dp


def cavity_mediated_hamiltonian(
    g_m: float, g_at: float, Deltas: Sequence[float], kappa: float, omega_m: float
) -> QuadraticHamiltonian:
    """Coherent part left behind after eliminating the cavity modes.

    For cavity mode ``i`` with force ``F_i = f . R`` this is
    ``(i/2)[(h_- F + h_+ F^dag)(F + F^dag) - h.c.]``, whose matrix is
    ``-sym(Im(u) v^T)`` with ``u = h_- f + h_+ f*`` and ``v = f + f*``.
    """
    if len(Deltas) > 2:
        raise ValueError("at most two cavity modes are supported")
    g = math.hypot(g_m, g_at)
    forces = force_vectors(g_m, g_at)
    H = np.zeros((4, 4))
    for f, Delta in zip(forces, Deltas):
        hm, hp = sideband_factors(g, Delta, kappa, omega_m)
        u = hm * f + hp * f.conj()
        v = (f + f.conj()).real
        H -= 0.5 * (np.outer(u.imag, v) + np.outer(v, u.imag))
    return QuadraticHamiltonian(H)


# channels -----------------------------------------------------------------


def membrane_bath_channels(gamma_m: float, nbar_m: float, n_modes: int = 2) -> list[LindbladChannel]:
    out = []
    if gamma_m * (nbar_m + 1) > 0:
        out.append(LindbladChannel(annihilation(MEMBRANE, n_modes), gamma_m * (nbar_m + 1), "membrane_cool"))
    if gamma_m * nbar_m > 0:
        out.append(LindbladChannel(creation(MEMBRANE, n_modes), gamma_m * nbar_m, "membrane_heat"))
    return out


def atom_diffusion_channels(Gamma_at: float, n_modes: int = 2) -> list[LindbladChannel]:
    """``(Gamma_at / 2) D[a + a^dag]``, pure momentum diffusion."""
    if Gamma_at <= 0:
        return []
    return [LindbladChannel(position(ATOM, n_modes), Gamma_at, "atom_diffusion")]


def sideband_decay_channels(
    g_m: float, g_at: float, Gamma_plus: float, Gamma_minus: float, n_modes: int = 2
) -> list[LindbladChannel]:
    """Cooling through mode 1 and heating through mode 2 at ``Gamma_plus``, reversed at ``Gamma_minus``."""
    f1, f2 = force_vectors(g_m, g_at, n_modes)
    spec = [
        (f1, Gamma_plus, "F1"),
        (f2.conj(), Gamma_plus, "F2dag"),
        (f1.conj(), Gamma_minus, "F1dag"),
        (f2, Gamma_minus, "F2"),
    ]
    return [LindbladChannel(v, r, lab) for v, r, lab in spec if r > 0]


def correlated_decay_channels(
    g_m: float,
    g_at: float,
    Deltas: Sequence[float],
    kappa: float,
    omega_m: float,
    mode: str = "rwa",
    neg_tol: float = 1e-12,
) -> list[LindbladChannel]:
    """Cavity-induced decay of membrane and atom for each eliminated cavity mode.

    ``exact`` diagonalizes the Hermitian matrix
    ``M = [[2 Re h_+, h_- + h_+*], [c.c., 2 Re h_-]]`` and returns jump vectors
    ``m_k^T (F, F^dag)`` at rates equal to the eigenvalues. ``M`` has
    ``det M = -(Re h_+ - Re h_-)^2 - (Im h_- - Im h_+)^2 <= 0``, so outside the
    fast-cavity limit one eigenvalue is negative and the request is rejected.
    ``rwa`` keeps only the diagonal of ``M``.
    """
    if mode not in ("exact", "rwa"):
        raise ValueError(f"mode must be 'exact' or 'rwa', got {mode!r}")
    g = math.hypot(g_m, g_at)
    forces = force_vectors(g_m, g_at)
    out: list[LindbladChannel] = []
    for i, (f, Delta) in enumerate(zip(forces, Deltas), start=1):
        hm, hp = sideband_factors(g, Delta, kappa, omega_m)
        if mode == "rwa":
            for vec, rate, lab in ((f, 2 * hp.real, f"F{i}"), (f.conj(), 2 * hm.real, f"F{i}dag")):
                if rate > 0:
                    out.append(LindbladChannel(vec, rate, lab))
            continue
        M = np.array([[2 * hp.real, hm + hp.conjugate()], [(hm + hp.conjugate()).conjugate(), 2 * hm.real]])
        lam, vecs = np.linalg.eigh(M)
        if lam[0] < -neg_tol:
            raise ValueError(
                f"correlated decay matrix for cavity mode {i} has eigenvalue {lam[0]:.3e}; "
                "not a valid Lindblad generator in this regime"
            )
        for k in range(2):
            if lam[k] > 0:
                m = vecs[:, k]
                out.append(LindbladChannel(m[0] * f + m[1] * f.conj(), float(lam[k]), f"J{i}{k + 1}"))
    return out


# generators ---------------------------------------------------------------


@dataclass(frozen=True)
class ModelOptions:
    use_exact_G: bool = True
    include_epsilon: bool = False
    rwa_cavity_decay: bool = True


def effective_generator(
    rates: DerivedRates, options: ModelOptions = ModelOptions()
) -> tuple[QuadraticHamiltonian, list[LindbladChannel]]:
    """Two-mode (membrane, atom) model in the units of ``rates``."""
    G = rates.G_exact if options.use_exact_G else rates.G_dispersive
    H = free_hamiltonian([rates.omega_m, rates.omega_at])
    H = H + coupling_hamiltonian(G, rates.epsilon if options.include_epsilon else 0.0)
    channels = membrane_bath_channels(rates.gamma_m, rates.nbar_m)
    channels += atom_diffusion_channels(rates.Gamma_at)
    if options.rwa_cavity_decay:
        channels += sideband_decay_channels(rates.g_m, rates.g_at, rates.Gamma_c_plus, rates.Gamma_c_minus)
    else:
        if not math.isfinite(rates.Delta):
            raise ValueError("exact correlated decay needs a finite detuning")
        channels += correlated_decay_channels(
            rates.g_m, rates.g_at, (rates.Delta, -rates.Delta), rates.kappa, rates.omega_m, mode="exact"
        )
    return H, channels


def full_generator(
    rates: DerivedRates, Delta1: float, Delta2: float
) -> tuple[QuadraticHamiltonian, list[LindbladChannel]]:
    """Four-mode (membrane, atom, cavity 1, cavity 2) linearized model.

    Each cavity mode decays at amplitude rate ``kappa``, i.e. ``gamma_k = 2 kappa``.
    """
    n = 4
    H = free_hamiltonian([rates.omega_m, rates.omega_at, -Delta1, -Delta2])
    xm, xa = position(MEMBRANE, n), position(ATOM, n)
    x1, x2 = position(CAVITY1, n), position(CAVITY2, n)
    terms = [
        (rates.g_m, xm, x1),
        (rates.g_m, xm, x2),
        (rates.g_at, xa, x1),
        (-rates.g_at, xa, x2),
    ]
    H = H + quadratic_form(terms, 2 * n)
    channels = membrane_bath_channels(rates.gamma_m, rates.nbar_m, n)
    channels += atom_diffusion_channels(rates.Gamma_at, n)
    if rates.kappa > 0:
        channels += [
            LindbladChannel(annihilation(CAVITY1, n), 2 * rates.kappa, "cavity1_decay"),
            LindbladChannel(annihilation(CAVITY2, n), 2 * rates.kappa, "cavity2_decay"),
        ]
    return H, channels


def assemble_QN(H: QuadraticHamiltonian, channels: Sequence[LindbladChannel]) -> GeneratorMatrices:
    dim = H.H.shape[0]
    Gam = np.zeros((dim, dim), dtype=complex)
    for ch in channels:
        if ch.L.shape[0] != dim:
            raise ValueError(f"channel {ch.label!r} has length {ch.L.shape[0]}, expected {dim}")
        Gam += 0.5 * ch.rate * np.outer(ch.L.conj(), ch.L)
    s = symplectic_form(dim // 2)
    Q = 2.0 * s @ (H.H + Gam.imag)
    N = 2.0 * s @ Gam.real @ s.T
    return GeneratorMatrices(Q, 0.5 * (N + N.T))


# propagation --------------------------------------------------------------


def _symmetrize(a: NDArray) -> NDArray:
    return 0.5 * (a + a.T)


def propagators(gen: GeneratorMatrices, t: float) -> tuple[NDArray, NDArray]:
    """``Phi = exp(Q t)`` and the accumulated noise ``int_0^t Phi(s) N Phi(s)^T ds``.

    The block exponential is taken over a short step ``tau = t / 2^k`` with
    ``||Q|| tau <= 1`` and then doubled ``k`` times. A single long block
    exponential loses the noise term to cancellation once strongly damped
    modes make ``exp(-Q^T t)`` huge.
    """
    if t < 0:
        raise ValueError(f"propagation time must be non-negative, got {t}")
    n = gen.dim
    norm = float(np.linalg.norm(gen.Q, 1)) * t
    k = max(0, int(math.ceil(math.log2(norm)))) if norm > 1 else 0
    tau = t / 2**k
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = gen.Q
    block[:n, n:] = gen.N
    block[n:, n:] = -gen.Q.T
    E = expm(block * tau)
    Phi = E[:n, :n]
    noise = _symmetrize(E[:n, n:] @ Phi.T)
    for _ in range(k):
        noise = _symmetrize(Phi @ noise @ Phi.T + noise)
        Phi = Phi @ Phi
    return Phi, noise


def propagate_const(state: GaussianState, gen: GeneratorMatrices, t: float) -> GaussianState:
    Phi, noise = propagators(gen, t)
    return GaussianState(Phi @ state.d, _symmetrize(Phi @ state.cov @ Phi.T + noise))


def propagate_grid(state: GaussianState, gen: GeneratorMatrices, times: Sequence[float]) -> "Trajectory":
    """Exact propagation sampled at each of ``times`` (increasing, starting anywhere >= 0)."""
    times = np.asarray(times, dtype=float)
    _check_grid(times, allow_single=True)
    ds, covs = [], []
    for t in times:
        s = propagate_const(state, gen, float(t))
        ds.append(s.d)
        covs.append(s.cov)
    return Trajectory(times, np.array(ds), np.array(covs))


def _check_grid(times: NDArray, allow_single: bool = False) -> None:
    if times.ndim != 1 or times.size < (1 if allow_single else 2):
        raise ValueError("time grid must be a 1-D array with enough points")
    if np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing")
    if times[0] < 0:
        raise ValueError("time grid must start at t >= 0")


@dataclass(frozen=True)
class Trajectory:
    times: NDArray[np.float64]
    d: NDArray[np.float64]
    cov: NDArray[np.float64]
    transfer: NDArray[np.float64] | None = field(default=None)

    def __len__(self) -> int:
        return self.times.shape[0]

    def state(self, i: int) -> GaussianState:
        return GaussianState(self.d[i], self.cov[i])

    def states(self) -> list[GaussianState]:
        return [self.state(i) for i in range(len(self))]

    def columns(self) -> list[str]:
        dim = self.d.shape[1]
        names = ["t"] + [f"d{i}" for i in range(dim)]
        names += [f"cov{i}{j}" for i in range(dim) for j in range(i, dim)]
        return names

    def rows(self) -> NDArray[np.float64]:
        dim = self.d.shape[1]
        iu = np.triu_indices(dim)
        return np.column_stack([self.times, self.d, self.cov[:, iu[0], iu[1]]])

    def write_csv(self, path, extra: dict[str, Sequence[float]] | None = None) -> None:
        from .io import format_float

        header = self.columns()
        data = self.rows()
        if extra:
            header += list(extra)
            data = np.column_stack([data] + [np.asarray(v, dtype=float) for v in extra.values()])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in data:
                w.writerow([format_float(x) for x in row])


GeneratorFn = Callable[[float], GeneratorMatrices]


def max_frequency(Q: NDArray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(Q))))


def _rk4_step(gen_fn: GeneratorFn, t: float, h: float, d: NDArray, cov: NDArray):
    g0, gh, g1 = gen_fn(t), gen_fn(t + h / 2), gen_fn(t + h)

    def f(g, c):
        return g.Q @ c + c @ g.Q.T + g.N

    k1d, k1c = g0.Q @ d, f(g0, cov)
    k2d, k2c = gh.Q @ (d + h / 2 * k1d), f(gh, cov + h / 2 * k1c)
    k3d, k3c = gh.Q @ (d + h / 2 * k2d), f(gh, cov + h / 2 * k2c)
    k4d, k4c = g1.Q @ (d + h * k3d), f(g1, cov + h * k3c)
    d_new = d + h / 6 * (k1d + 2 * k2d + 2 * k3d + k4d)
    cov_new = _symmetrize(cov + h / 6 * (k1c + 2 * k2c + 2 * k3c + k4c))
    return d_new, cov_new, (g0, gh, g1)


def propagate_timedep(
    state: GaussianState,
    generator_fn: GeneratorFn,
    times: Sequence[float],
    steps_per_period: float = 40.0,
    frequency_hint: float | None = None,
    with_transfer: bool = False,
) -> Trajectory:
    """Fixed-step RK4 on ``d' = Q d`` and ``cov' = Q cov + cov Q^T + N``.

    ``times`` must be uniformly spaced; its spacing is the integration step and
    has to satisfy ``h <= 2 pi / (steps_per_period * w_max)`` where ``w_max`` is
    the largest eigenvalue modulus of ``Q`` seen at any stage (or the hint, if
    larger). With ``with_transfer`` the matrix ``Phi(t)`` solving ``Phi' = Q Phi``
    is integrated alongside.
    """
    times = np.asarray(times, dtype=float)
    _check_grid(times)
    steps = np.diff(times)
    h = float(steps[0])
    if np.max(np.abs(steps - h)) > 1e-9 * h:
        raise ValueError("time grid must be uniform for fixed-step integration")
    dim = state.d.shape[0]
    d = state.d.copy()
    if with_transfer:
        d = np.column_stack([d, np.eye(dim)])
    cov = state.cov.copy()
    out_d = [d.copy()]
    out_c = [cov.copy()]
    w_hint = frequency_hint or 0.0
    for t in times[:-1]:
        d, cov, gens = _rk4_step(generator_fn, float(t), h, d, cov)
        w = max([w_hint] + [max_frequency(g.Q) for g in gens])
        if w > 0 and h > 2 * math.pi / (steps_per_period * w):
            raise ValueError(
                f"step {h:.4g} exceeds the limit {2 * math.pi / (steps_per_period * w):.4g} "
                f"for frequency {w:.4g}; refine the grid"
            )
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(cov))):
            raise FloatingPointError("non-finite moments during integration")
        out_d.append(d.copy())
        out_c.append(cov.copy())
    D = np.array(out_d)
    if with_transfer:
        return Trajectory(times, D[:, :, 0], np.array(out_c), D[:, :, 1:])
    return Trajectory(times, D, np.array(out_c))


def uniform_grid(t_end: float, h_max: float, t_start: float = 0.0) -> NDArray[np.float64]:
    """Uniform grid from ``t_start`` to ``t_end`` with spacing at most ``h_max``."""
    if t_end <= t_start:
        raise ValueError("t_end must exceed t_start")
    n = int(math.ceil((t_end - t_start) / h_max))
    return np.linspace(t_start, t_end, n + 1)


def step_limit(gen: GeneratorMatrices, steps_per_period: float = 40.0) -> float:
    return 2 * math.pi / (steps_per_period * max_frequency(gen.Q))
