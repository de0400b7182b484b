"""End-to-end scenarios: state swap, entanglement under modulated coupling, cooling comparison.

All frequencies are in units of the membrane frequency.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from . import metrics
from .dynamics import (
    GeneratorMatrices,
    ModelOptions,
    assemble_QN,
    coupling_hamiltonian,
    effective_generator,
    free_hamiltonian,
    full_generator,
    propagators,
    propagate_timedep,
    uniform_grid,
)
from .gaussian import GaussianState, coherent, make_state, squeezed, vacuum
from .system import DerivedRates, optimal_swap_coupling

Scenario = Literal["swap_coherent", "swap_squeezed", "swap_fock", "entangle", "cool_compare"]
SWAPS = ("swap_coherent", "swap_squeezed", "swap_fock")


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario parameters.

    ``f`` sets every noise rate to ``f G`` unless one of ``Gamma_c``,
    ``Gamma_m``, ``Gamma_at`` (also in units of ``G``) is given. ``duration``
    counts swap times for swaps and units of ``1/G`` for entanglement.
    The full model is fixed by ``g_over_delta`` and ``kappa`` with opposite
    detunings and balanced couplings.
    """

    scenario: Scenario = "swap_coherent"
    f: float = 0.0
    G: float = 0.034
    omega_at: float = 1.0
    beta: complex = 1.0
    s0: float = math.exp(-2.0)
    duration: float = 2.0
    points: int = 401
    model: Literal["effective", "full"] = "effective"
    modulation: bool = False
    Gamma_c: float | None = None
    Gamma_m: float | None = None
    Gamma_at: float | None = None
    nbar_m: float = 50.0
    g_over_delta: float = 0.02
    kappa: float = 1.0
    step: float = 0.05

    def __post_init__(self):
        if self.scenario not in SWAPS + ("entangle", "cool_compare"):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.f < 0:
            raise ValueError("f must be non-negative")
        if not self.G > 0:
            raise ValueError("G must be positive")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.omega_at > 0:
            raise ValueError("omega_at must be positive")
        if self.points < 2:
            raise ValueError("need at least two grid points")
        if self.model not in ("effective", "full"):
            raise ValueError(f"unknown model {self.model!r}")
        if not self.s0 > 0:
            raise ValueError("s0 must be positive")
        for name in ("Gamma_c", "Gamma_m", "Gamma_at"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.scenario == "entangle" and self.model == "full":
            raise ValueError("entanglement runs use the effective model only")

    def rate(self, name: str) -> float:
        """Absolute rate (units of omega_m) for ``Gamma_c``, ``Gamma_m`` or ``Gamma_at``."""
        v = getattr(self, name)
        return (self.f if v is None else v) * self.G

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta"] = [complex(self.beta).real, complex(self.beta).imag]
        return d


@dataclass
class ScenarioResult:
    scenario: str
    times: NDArray[np.float64]
    metrics: dict[str, NDArray[np.float64]]
    overlays: dict[str, NDArray[np.float64]] = field(default_factory=dict)
    summary: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        for group in (self.metrics, self.overlays):
            for k, v in group.items():
                if np.shape(v) != t.shape:
                    raise ValueError(f"series {k!r} does not match the time grid")

    def table(self) -> tuple[list[str], NDArray[np.float64]]:
        names = ["t"] + list(self.metrics) + [f"{k}_rwa" for k in self.overlays]
        cols = [self.times] + list(self.metrics.values()) + list(self.overlays.values())
        return names, np.column_stack(cols)


# rates and generators ----------------------------------------------------------


def effective_rates(config: ScenarioConfig) -> DerivedRates:
    c = config
    Gc, Gm, Ga = c.rate("Gamma_c"), c.rate("Gamma_m"), c.rate("Gamma_at")
    base = DerivedRates.from_noise_ratio(c.G, 0.0, omega_at=c.omega_at, nbar_m=c.nbar_m)
    return replace(
        base,
        Gamma_c_plus=Gc,
        Gamma_c_minus=Gc,
        Gamma_c_dispersive=Gc,
        Gamma_at=Ga,
        Gamma_m=Gm,
        gamma_m=Gm / c.nbar_m,
    )


def full_model_rates(config: ScenarioConfig) -> DerivedRates:
    """Balanced couplings whose dispersive coupling equals ``G`` at the given ``g / Delta``."""
    c = config
    Delta = c.G / (2.0 * c.g_over_delta**2)
    g1 = c.g_over_delta * Delta / math.sqrt(2.0)
    Gm, Ga = c.rate("Gamma_m"), c.rate("Gamma_at")
    return DerivedRates.from_couplings(
        g1, g1, Delta, c.kappa, 1.0, omega_at=c.omega_at, Gamma_at=Ga, gamma_m=Gm / c.nbar_m, nbar_m=c.nbar_m
    )


def swap_generator(config: ScenarioConfig) -> tuple[GeneratorMatrices, DerivedRates]:
    """Generator (effective or full) plus the rates that define it."""
    if config.model == "full":
        rates = full_model_rates(config)
        H, ch = full_generator(rates, rates.Delta, -rates.Delta)
    else:
        rates = effective_rates(config)
        H, ch = effective_generator(rates, ModelOptions(use_exact_G=True))
    return assemble_QN(H, ch), rates


def effective_counterpart(config: ScenarioConfig) -> ScenarioConfig:
    """Effective-model config matching the full model's exact coupling and sideband rates."""
    r = full_model_rates(config)
    return replace(
        config,
        model="effective",
        G=r.G_exact,
        Gamma_c=0.5 * (r.Gamma_c_plus + r.Gamma_c_minus) / r.G_exact,
        Gamma_m=config.rate("Gamma_m") / r.G_exact,
        Gamma_at=config.rate("Gamma_at") / r.G_exact,
        f=0.0,
    )


def initial_state(config: ScenarioConfig, n_modes: int) -> GaussianState:
    """Membrane in vacuum, atom prepared per scenario, cavity modes (if any) in vacuum.

    The Fock scenario returns the coherent-state analog (atom vacuum); the
    negativity is computed from the propagators instead.
    """
    if config.scenario == "swap_coherent":
        return make_state({1: coherent(config.beta)}, n_modes)
    if config.scenario == "swap_squeezed":
        return make_state({1: squeezed(config.s0)}, n_modes)
    return vacuum(n_modes)


# swap -------------------------------------------------------------------------------


def _swap_series(config: ScenarioConfig, gen: GeneratorMatrices, G: float, t: NDArray):
    state0 = initial_state(config, gen.dim // 2)
    cov_at0 = state0.mode_block(1)
    fid, svar, neg, n_m, n_at = [], [], [], [], []
    for tk in t:
        Phi, noise = propagators(gen, float(tk))
        cov = Phi @ state0.cov @ Phi.T + noise
        cov = 0.5 * (cov + cov.T)
        st = GaussianState(Phi @ state0.d, cov)
        fid.append(metrics.transfer_fidelity(st.mode_block(0), cov_at0))
        svar.append(metrics.min_variance(st.mode_block(0))[0])
        n_m.append(metrics.occupation(st, 0))
        n_at.append(metrics.occupation(st, 1))
        if config.scenario == "swap_fock":
            neg.append(metrics.fock_negativity(Phi, cov[0:2, 0:2]))
    out = {"fidelity": np.array(fid), "min_variance": np.array(svar), "n_m": np.array(n_m), "n_at": np.array(n_at)}
    if config.scenario == "swap_fock":
        out["fock_negativity"] = np.array(neg)
        # the Fock atom carries one extra quantum shared between the modes
        out.pop("fidelity")
    return out


def run_swap(config: ScenarioConfig) -> ScenarioResult:
    """Propagate a swap and record the scenario's metric with RWA overlays."""
    c = config
    if c.scenario not in SWAPS:
        raise ValueError(f"run_swap needs a swap scenario, got {c.scenario!r}")
    gen, rates = swap_generator(c)
    G = abs(rates.G_exact)
    ts = metrics.swap_time(G)
    t = np.linspace(0.0, c.duration * ts, c.points)
    series = _swap_series(c, gen, G, t)
    at_ts = _swap_series(c, gen, G, np.array([ts]))

    if c.model == "full":
        Gc = 0.5 * (rates.Gamma_c_plus + rates.Gamma_c_minus)
        Gm, Ga = c.rate("Gamma_m"), c.rate("Gamma_at")
    else:
        Gc, Gm, Ga = c.rate("Gamma_c"), c.rate("Gamma_m"), c.rate("Gamma_at")
    nbar = metrics.swap_population(t, G, Gc, Gm, Ga)
    # unequal membrane and atom rates shift the membrane diagonal by this much
    corr = metrics.membrane_rate_imbalance(t, G, Gm, Ga)
    overlays: dict[str, NDArray] = {}
    summary: dict[str, float] = {"t_swap": ts, "G": G}
    if c.scenario == "swap_coherent":
        overlays["fidelity"] = 1.0 / (1.0 + nbar + corr)
        summary["fidelity_at_ts"] = float(at_ts["fidelity"][0])
        summary["fidelity_rwa_at_ts"] = 1.0 / (1.0 + metrics.swap_population(ts, G, Gc, Gm, Ga))
        summary["fidelity_min"] = float(series["fidelity"].min())
    elif c.scenario == "swap_squeezed":
        overlays["min_variance"] = np.cos(G * t) ** 2 + c.s0 * np.sin(G * t) ** 2 + 2 * (nbar + corr)
        summary["s_at_ts"] = float(at_ts["min_variance"][0])
        summary["s_offset_at_ts"] = float(at_ts["min_variance"][0] - c.s0)
        summary["s_offset_rwa"] = float(2 * metrics.swap_population(ts, G, Gc, Gm, Ga))
        summary["squeezing_db_at_ts"] = metrics.squeezing_db(at_ts["min_variance"][0])
    else:
        overlays["fock_negativity"] = metrics.fock_negativity_rwa(t, G, Gc, Gm, Ga)
        summary["fock_negativity_at_ts"] = float(at_ts["fock_negativity"][0])
        summary["fock_negativity_rwa_at_ts"] = float(metrics.fock_negativity_rwa(ts, G, Gc, Gm, Ga))
    summary["n_m_at_ts"] = float(at_ts["n_m"][0])
    return ScenarioResult(c.scenario, t, series, overlays, summary)


# entanglement ---------------------------------------------------------------------


def modulated_generator(config: ScenarioConfig):
    """``t -> GeneratorMatrices`` for ``G(t) = G cos^2(w t)`` with ``w = (1 + omega_at) / 2``.

    The dissipation rates stay at their configured constant values.
    """
    c = config
    rates = effective_rates(c)
    H0, channels = effective_generator(replace(rates, G_exact=0.0, G_dispersive=0.0))
    gen0 = assemble_QN(H0, channels)
    Qc = assemble_QN(coupling_hamiltonian(1.0), []).Q
    wbar = 0.5 * (1.0 + c.omega_at)

    def gen(t: float) -> GeneratorMatrices:
        g = c.G * math.cos(wbar * t) ** 2 if c.modulation else c.G
        return GeneratorMatrices(gen0.Q + g * Qc, gen0.N)

    return gen, wbar


def run_entangle(config: ScenarioConfig) -> ScenarioResult:
    c = config
    if c.scenario != "entangle":
        raise ValueError("run_entangle needs the entangle scenario")
    if not c.modulation:
        raise ValueError("entanglement generation needs modulation enabled")
    gen, wbar = modulated_generator(c)
    t = uniform_grid(c.duration / c.G, c.step)
    traj = propagate_timedep(vacuum(2), gen, t)
    E = np.array([metrics.log_negativity(s) for s in traj.states()])
    n_at = np.array([metrics.occupation(s, 1) for s in traj.states()])
    n_m = np.array([metrics.occupation(s, 0) for s in traj.states()])
    from .gaussian import symplectic_eigenvalues

    nu_min = min(symplectic_eigenvalues(cv)[0] for cv in traj.cov)
    overlays = {"E_N": 2.0 * (c.G / 4.0) * t / math.log(2.0)}
    summary = {
        "E_N_final": float(E[-1]),
        "E_N_max": float(E.max()),
        "n_at_max": float(n_at.max()),
        "first_positive_Gt": float(c.G * t[np.argmax(E > 0)]) if np.any(E > 0) else math.inf,
        "min_symplectic_eigenvalue": float(nu_min),
        "omega_bar": wbar,
    }
    return ScenarioResult("entangle", t, {"E_N": E, "n_at": n_at, "n_m": n_m}, overlays, summary)


def coarse_grain(values: NDArray, times: NDArray, period: float) -> NDArray:
    """Mean of ``values`` over consecutive windows of length ``period``."""
    bins = np.floor((times - times[0]) / period).astype(int)
    full = bins < bins.max()
    return np.array([values[(bins == b) & full].mean() for b in range(bins.max())])


# cooling ------------------------------------------------------------------------------


@dataclass(frozen=True)
class CoolingSummary:
    n_swap: float
    n_cool: float
    n_cavity: float
    G_opt: float
    n_swap_at_opt: float
    swap_beats_cavity: bool
    threshold_condition: bool


def cooling_comparison(
    f: float, G: float, omega_m: float, Gamma_R: float, g_m: float, kappa: float, Gamma_m: float
) -> CoolingSummary:
    """Final membrane occupations for swap, atom-assisted cooling and cavity cooling.

    ``G_opt`` minimizes the swap occupation with ``Gamma_c = f G`` held fixed.
    """
    for name, v in (("G", G), ("omega_m", omega_m), ("Gamma_R", Gamma_R), ("g_m", g_m), ("kappa", kappa)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    if f < 0 or Gamma_m < 0:
        raise ValueError("f and Gamma_m must be non-negative")
    n_swap = math.pi * f + (G / (2 * omega_m)) ** 2
    n_cool = f * Gamma_R / G + (Gamma_R / (2 * omega_m)) ** 2
    n_cav = Gamma_m * kappa / g_m**2 + (kappa / (2 * omega_m)) ** 2
    Gc = f * G
    if Gc > 0:
        G_opt = optimal_swap_coupling(Gc, omega_m)
        n_opt = math.pi * Gc / G_opt + (G_opt / (2 * omega_m)) ** 2
    else:
        G_opt, n_opt = 0.0, 0.0
    return CoolingSummary(
        n_swap=n_swap,
        n_cool=n_cool,
        n_cavity=n_cav,
        G_opt=G_opt,
        n_swap_at_opt=n_opt,
        swap_beats_cavity=n_swap < n_cav,
        threshold_condition=G / math.pi > g_m**2 / kappa,
    )


def scan_swap_optimum(Gamma_c: float, omega_m: float = 1.0, n: int = 20001, span: float = 4.0) -> float:
    """Grid minimizer of ``pi Gamma_c / G + (G / 2 omega_m)^2`` on a log grid around the cube-root scale."""
    scale = (Gamma_c * omega_m**2) ** (1.0 / 3.0)
    G = np.geomspace(scale / span, scale * span * 2, n)
    n_swap = math.pi * Gamma_c / G + (G / (2 * omega_m)) ** 2
    return float(G[np.argmin(n_swap)])


def run(config: ScenarioConfig) -> ScenarioResult:
    if config.scenario in SWAPS:
        return run_swap(config)
    if config.scenario == "entangle":
        return run_entangle(config)
    raise ValueError("cool_compare has no time series; call cooling_comparison")
