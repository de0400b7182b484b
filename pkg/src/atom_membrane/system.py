"""Physical parameters, derived couplings and decoherence rates, feasibility margins.

Inputs are SI (rad/s, m, kg, W, K). :class:`DerivedRates` keeps SI values and can
be rescaled to units of the membrane frequency with :meth:`DerivedRates.scaled`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, replace

from scipy import constants as sc

HBAR = sc.hbar
K_B = sc.k
C_LIGHT = sc.c


def intracavity_amplitude(P: float, kappa: float, Delta: float, omega_c: float) -> float:
    """Steady-state intracavity amplitude ``E / sqrt(Delta^2 + kappa^2)``.

    The drive strength is ``E = sqrt(2 P kappa / (hbar omega_c))`` and the phase
    is chosen so the amplitude is real and non-negative.
    """
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if P < 0:
        raise ValueError(f"drive power must be non-negative, got {P}")
    if not omega_c > 0:
        raise ValueError(f"omega_c must be positive, got {omega_c}")
    E = math.sqrt(2.0 * P * kappa / (HBAR * omega_c))
    return E / math.hypot(Delta, kappa)


def membrane_coupling_factor(r: float, k: float | None = None, x_m: float | None = None) -> float:
    """Reflectivity correction ``f``; ``2 r`` unless a membrane position is given."""
    if not 0 <= r < 1:
        raise ValueError(f"membrane reflectivity must lie in [0, 1), got {r}")
    if x_m is None:
        return 2.0 * r
    if k is None:
        raise ValueError("a wavenumber is needed to evaluate f at a membrane position")
    c2 = math.cos(2.0 * k * x_m)
    return 2.0 * r * math.sin(2.0 * k * x_m) / math.sqrt(1.0 - (r * c2) ** 2)


def thermal_occupation(omega: float, T: float) -> float:
    """Bose occupation of a mode at angular frequency ``omega`` and temperature ``T``."""
    if T <= 0:
        return 0.0
    return 1.0 / math.expm1(HBAR * omega / (K_B * T))


def exact_coupling(g_m: float, g_at: float, Delta: float, kappa: float, omega_m: float) -> float:
    """Cavity-mediated coupling for opposite detunings, keeping kappa and omega_m."""
    dm, dp = Delta - omega_m, Delta + omega_m
    den_m, den_p = kappa**2 + dm**2, kappa**2 + dp**2
    if den_m == 0 or den_p == 0:
        raise ValueError("cavity detuning is resonant with the membrane sideband at kappa = 0")
    return 2.0 * g_m * g_at * (dm / den_m + dp / den_p)


def dispersive_coupling(g_m: float, g_at: float, Delta: float) -> float:
    if Delta == 0:
        raise ValueError("dispersive coupling needs a nonzero detuning")
    return 4.0 * g_m * g_at / Delta


def single_mode_coupling(g_m: float, g_at: float, Delta: float) -> float:
    """Coupling through a single driven mode, half of the two-mode value."""
    if Delta == 0:
        raise ValueError("single-mode coupling needs a nonzero detuning")
    return 2.0 * g_m * g_at / Delta


def sideband_rates(g_m: float, g_at: float, Delta: float, kappa: float, omega_m: float) -> tuple[float, float]:
    """Cavity-induced cooling/heating rates ``(Gamma_plus, Gamma_minus)``."""
    g2 = g_m**2 + g_at**2
    den_p = kappa**2 + (Delta + omega_m) ** 2
    den_m = kappa**2 + (Delta - omega_m) ** 2
    if den_p == 0 or den_m == 0:
        raise ValueError("cavity detuning is resonant with the membrane sideband at kappa = 0")
    return 2.0 * kappa * g2 / den_p, 2.0 * kappa * g2 / den_m


def squeezing_correction(Delta: float, kappa: float, omega_m: float) -> float:
    """Relative weight of the counter-rotating correction to the XX coupling."""
    den = Delta**2 + kappa**2 - omega_m**2
    if den == 0:
        raise ValueError("correction diverges at Delta^2 + kappa^2 = omega_m^2")
    return 2.0 * kappa * omega_m / den


def optimal_swap_coupling(Gamma_c: float, omega_m: float) -> float:
    """Coupling that minimizes ``pi Gamma_c / G + (G / 2 omega_m)^2``."""
    if not Gamma_c > 0 or not omega_m > 0:
        raise ValueError("Gamma_c and omega_m must be positive")
    return (2.0 * math.pi * Gamma_c * omega_m**2) ** (1.0 / 3.0)


def swap_residual_occupation(G: float, Gamma_c: float, omega_m: float) -> float:
    """Final membrane occupation after a swap from a cold atom."""
    return math.pi * Gamma_c / G + (G / (2.0 * omega_m)) ** 2


@dataclass(frozen=True)
class PhysicalParams:
    """Experimental inputs in SI units.

    Exactly one of ``finesse``/``kappa``, ``omega_c``/``wavelength``,
    ``P``/``alpha`` and ``nbar_m``/``T`` has to be set. ``theta``, ``u`` and
    ``zeta`` describe the atomic site and usually come from the lattice module.
    """

    L: float
    r: float
    M: float
    omega_m: float
    Q_m: float
    m_atom: float
    gamma_atom: float
    Omega0: float
    delta: float
    Delta: float
    finesse: float | None = None
    kappa: float | None = None
    omega_c: float | None = None
    wavelength: float | None = None
    nbar_m: float | None = None
    T: float | None = None
    P: float | None = None
    alpha: float | None = None
    theta: float = 1.0
    u: float = 1.0
    zeta: float = 0.5
    x_m: float | None = None
    geometry_factor: float = 0.8
    Gamma_R: float | None = None

    def __post_init__(self):
        for name in ("L", "M", "omega_m", "Q_m", "m_atom", "gamma_atom", "Omega0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 <= self.r < 1:
            raise ValueError(f"r must lie in [0, 1), got {self.r}")
        if self.delta == 0:
            raise ValueError("atomic detuning delta must be nonzero")
        if self.Delta == 0:
            raise ValueError("cavity detuning Delta must be nonzero")
        _exactly_one(self, "finesse", "kappa")
        _exactly_one(self, "omega_c", "wavelength")
        _exactly_one(self, "P", "alpha")
        _exactly_one(self, "nbar_m", "T")
        for name in ("finesse", "kappa", "omega_c", "wavelength"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        for name in ("P", "alpha", "nbar_m", "T"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be non-negative, got {v}")

    @property
    def cavity_frequency(self) -> float:
        if self.omega_c is not None:
            return self.omega_c
        return 2.0 * math.pi * C_LIGHT / self.wavelength

    @property
    def k1(self) -> float:
        return self.cavity_frequency / C_LIGHT

    @property
    def decay_rate(self) -> float:
        """Cavity amplitude decay rate, from the finesse when not given directly."""
        if self.kappa is not None:
            return self.kappa
        return math.pi * C_LIGHT / (2.0 * self.finesse * self.L)

    @property
    def cavity_finesse(self) -> float:
        if self.finesse is not None:
            return self.finesse
        return math.pi * C_LIGHT / (2.0 * self.kappa * self.L)

    @property
    def amplitude(self) -> float:
        if self.alpha is not None:
            return self.alpha
        return intracavity_amplitude(self.P, self.decay_rate, self.Delta, self.cavity_frequency)

    @property
    def gamma_m(self) -> float:
        return self.omega_m / self.Q_m

    @property
    def bath_occupation(self) -> float:
        if self.nbar_m is not None:
            return self.nbar_m
        return thermal_occupation(self.omega_m, self.T)

    @property
    def U0(self) -> float:
        return self.Omega0**2 / self.delta

    @property
    def cooperativity(self) -> float:
        return self.Omega0**2 / (self.decay_rate * self.gamma_atom)

    def with_drive(self, P: float) -> "PhysicalParams":
        return replace(self, P=P, alpha=None)


def _exactly_one(obj, a: str, b: str) -> None:
    if (getattr(obj, a) is None) == (getattr(obj, b) is None):
        raise ValueError(f"exactly one of {a!r} and {b!r} must be given")


@dataclass(frozen=True)
class DerivedRates:
    """Couplings and rates. Angular frequencies in rad/s unless rescaled."""

    g_m: float
    g_at: float
    g: float
    G_exact: float
    G_dispersive: float
    epsilon: float
    Gamma_c_plus: float
    Gamma_c_minus: float
    Gamma_c_dispersive: float
    Gamma_at: float
    Gamma_m: float
    omega_at: float
    omega_m: float
    kappa: float
    Delta: float
    gamma_m: float
    nbar_m: float
    f_c: float = field(init=False)
    f_at: float = field(init=False)
    f_m: float = field(init=False)

    def __post_init__(self):
        if abs(self.g**2 - (self.g_m**2 + self.g_at**2)) > 1e-12 * max(self.g**2, 1e-300):
            raise ValueError("g must satisfy g^2 = g_m^2 + g_at^2")
        for name in ("Gamma_c_plus", "Gamma_c_minus", "Gamma_c_dispersive", "Gamma_at", "Gamma_m", "gamma_m", "nbar_m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        G = abs(self.G_exact)
        inf = math.inf
        object.__setattr__(self, "f_c", self.Gamma_c_dispersive / G if G else inf)
        object.__setattr__(self, "f_at", self.Gamma_at / G if G else inf)
        object.__setattr__(self, "f_m", self.Gamma_m / G if G else inf)

    def scaled(self, unit: float | None = None) -> "DerivedRates":
        """Copy with every frequency divided by ``unit`` (default: ``omega_m``)."""
        unit = self.omega_m if unit is None else unit
        data = {k: v for k, v in asdict(self).items() if k not in ("f_c", "f_at", "f_m")}
        for k in data:
            if k not in ("epsilon", "nbar_m"):
                data[k] = data[k] / unit
        return DerivedRates(**data)

    @classmethod
    def from_couplings(
        cls,
        g_m: float,
        g_at: float,
        Delta: float,
        kappa: float,
        omega_m: float = 1.0,
        omega_at: float | None = None,
        Gamma_at: float = 0.0,
        gamma_m: float = 0.0,
        nbar_m: float = 0.0,
    ) -> "DerivedRates":
        """Rates for given cavity couplings, detuning and linewidth (any unit)."""
        if kappa < 0:
            raise ValueError("kappa must be non-negative")
        G_exact = exact_coupling(g_m, g_at, Delta, kappa, omega_m)
        gp, gm = sideband_rates(g_m, g_at, Delta, kappa, omega_m)
        return cls(
            g_m=g_m,
            g_at=g_at,
            g=math.hypot(g_m, g_at),
            G_exact=G_exact,
            G_dispersive=dispersive_coupling(g_m, g_at, Delta),
            epsilon=squeezing_correction(Delta, kappa, omega_m),
            Gamma_c_plus=gp,
            Gamma_c_minus=gm,
            Gamma_c_dispersive=dispersive_decay(g_m, g_at, Delta, kappa),
            Gamma_at=Gamma_at,
            Gamma_m=gamma_m * nbar_m,
            omega_at=omega_m if omega_at is None else omega_at,
            omega_m=omega_m,
            kappa=kappa,
            Delta=Delta,
            gamma_m=gamma_m,
            nbar_m=nbar_m,
        )

    @classmethod
    def from_noise_ratio(
        cls, G: float, f: float, omega_at: float = 1.0, nbar_m: float = 50.0, Delta: float = math.inf
    ) -> "DerivedRates":
        """Idealized effective-model rates in units of omega_m, all noise rates ``f G``.

        The cavity couples equally (``g_m = g_at``) and the sideband asymmetry is
        dropped, so both cavity rates equal ``f G``. The membrane damping is
        ``f G / nbar_m`` so that its thermal heating rate is ``f G``.
        """
        if not G > 0 or f < 0 or not nbar_m > 0:
            raise ValueError("need G > 0, f >= 0, nbar_m > 0")
        rate = f * G
        g1 = math.sqrt(abs(G * Delta) / 4.0) if math.isfinite(Delta) else 1.0
        return cls(
            g_m=g1,
            g_at=g1,
            g=math.hypot(g1, g1),
            G_exact=G,
            G_dispersive=G,
            epsilon=0.0,
            Gamma_c_plus=rate,
            Gamma_c_minus=rate,
            Gamma_c_dispersive=rate,
            Gamma_at=rate,
            Gamma_m=rate,
            omega_at=omega_at,
            omega_m=1.0,
            kappa=0.0,
            Delta=Delta,
            gamma_m=rate / nbar_m,
            nbar_m=nbar_m,
        )


def dispersive_decay(g_m: float, g_at: float, Delta: float, kappa: float) -> float:
    """Leading-order cavity decay ``2 kappa (g_m^2 + g_at^2) / Delta^2``.

    For balanced couplings this equals ``G kappa / Delta``.
    """
    return 2.0 * kappa * (g_m**2 + g_at**2) / Delta**2


def atom_zero_point(m_atom: float, omega_at: float) -> float:
    return math.sqrt(HBAR / (2.0 * m_atom * omega_at))


def derive_rates(params: PhysicalParams) -> DerivedRates:
    """All couplings and rates in rad/s for a physical configuration."""
    p = params
    alpha = p.amplitude
    if alpha < 10:
        warnings.warn(f"intracavity amplitude {alpha:.3g} < 10, linearization may be poor", stacklevel=2)
    kappa, omega_c, Delta = p.decay_rate, p.cavity_frequency, p.Delta
    k1 = p.k1
    ell_m = math.sqrt(HBAR / (2.0 * p.M * p.omega_m))
    f_i = membrane_coupling_factor(p.r, k1, p.x_m)
    g0 = f_i * (ell_m / p.L) * omega_c
    g_m = g0 * alpha
    U0 = p.U0
    omega_at = math.sqrt(HBAR * abs(U0) * alpha**2 * k1**2 * abs(p.zeta) / p.m_atom)
    if omega_at == 0:
        raise ValueError("atomic trap frequency vanishes; need nonzero drive and curvature")
    eta = k1 * atom_zero_point(p.m_atom, omega_at)
    g_at = abs(U0) * alpha * eta * p.theta
    s_e = (alpha * p.Omega0 / p.delta) ** 2
    Gamma_at = eta**2 * s_e * p.gamma_atom * (2.0 - p.geometry_factor * p.u)
    nbar = p.bath_occupation
    return DerivedRates.from_couplings(
        g_m, g_at, Delta, kappa, p.omega_m, omega_at=omega_at, Gamma_at=Gamma_at, gamma_m=p.gamma_m, nbar_m=nbar
    )


def resonance_amplitude(params: PhysicalParams) -> float:
    """Amplitude that puts the atomic trap frequency on the membrane frequency.

    Solves ``omega_m = eta^2 alpha^2 Omega0^2 / |delta|`` with ``eta`` evaluated at
    ``omega_at = omega_m``.
    """
    p = params
    eta = p.k1 * atom_zero_point(p.m_atom, p.omega_m)
    return math.sqrt(p.omega_m * abs(p.delta) / (eta**2 * p.Omega0**2))


@dataclass(frozen=True)
class ConditionThresholds:
    margin: float = 10.0
    balance_tol: float = 0.2


@dataclass(frozen=True)
class ConditionReport:
    margin_1: float
    balance_2: float
    margin_3: float
    margin_4: float
    resonance_alpha: float
    condition_1: bool
    condition_2: bool
    condition_3: bool
    condition_4: bool

    @property
    def all_pass(self) -> bool:
        return self.condition_1 and self.condition_2 and self.condition_3 and self.condition_4

    def to_dict(self) -> dict:
        d = asdict(self)
        d["all_pass"] = self.all_pass
        return d


def check_strong_coupling(
    params: PhysicalParams,
    rates: DerivedRates | None,
    kappa_th: float,
    thresholds: ConditionThresholds = ConditionThresholds(),
) -> ConditionReport:
    """Margins of the four strong-coupling conditions.

    ``kappa_th`` is the membrane thermal link in 1/s, i.e. ``k_B kappa_th`` in
    W/K divided by ``k_B``. ``rates`` is accepted for interface symmetry; every
    margin is built from fabrication parameters so the drive amplitude cancels.
    """
    p = params
    kappa, Delta, F = p.decay_rate, abs(p.Delta), p.cavity_finesse
    C = p.cooperativity
    margin_1 = Delta / max(kappa, p.omega_m)
    balance_2 = (4.0 * p.r * F / math.pi) / ((p.gamma_atom / abs(p.delta)) * C) * math.sqrt(p.m_atom / p.M)
    margin_3 = C / (Delta / (4.0 * kappa))
    lhs4 = (8.0 * p.r**2 * F**2 / math.pi**2) * (kappa_th / p.gamma_m) * (HBAR * p.cavity_frequency / (p.M * C_LIGHT**2))
    margin_4 = lhs4 / (Delta / kappa)
    t = thresholds
    return ConditionReport(
        margin_1=margin_1,
        balance_2=balance_2,
        margin_3=margin_3,
        margin_4=margin_4,
        resonance_alpha=resonance_amplitude(p),
        condition_1=margin_1 >= t.margin,
        condition_2=abs(balance_2 - 1.0) <= t.balance_tol,
        condition_3=margin_3 >= t.margin,
        condition_4=margin_4 >= t.margin,
    )
