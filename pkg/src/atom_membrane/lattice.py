"""Two-colour standing-wave intensity along the cavity axis and its trapping wells."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

DEFAULT_GEOMETRY_FACTOR = 0.8


@dataclass(frozen=True)
class LatticeGeometry:
    """Wavenumbers of the two driven modes and the cavity length (SI)."""

    k1: float
    k2: float
    L: float
    q: int | None = None

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0 and self.L > 0):
            raise ValueError("k1, k2 and L must be positive")
        if self.k1 == self.k2:
            raise ValueError("degenerate geometry: k1 == k2 gives no relative slope")
        if not self.k1 > self.k2:
            raise ValueError("expected k1 > k2")
        if self.q is not None and abs(self.dk * self.L / math.pi - self.q) > 1e-6 * max(1, self.q):
            raise ValueError(f"delta k L / pi = {self.dk * self.L / math.pi:.9g} does not match q = {self.q}")

    @property
    def k(self) -> float:
        return self.k1 + self.k2

    @property
    def dk(self) -> float:
        return self.k1 - self.k2

    @classmethod
    def resonant(cls, wavelength1: float, n1: int, q: int) -> "LatticeGeometry":
        """Cavity of ``n1`` half-wavelengths of mode 1, mode 2 ``q`` FSRs below."""
        L = n1 * wavelength1 / 2.0
        k1 = 2.0 * math.pi / wavelength1
        return cls(k1=k1, k2=k1 - q * math.pi / L, L=L, q=q)


@dataclass(frozen=True)
class WellSite:
    x: float
    u: float
    theta: float
    zeta: float
    xi: float
    is_intensity_max: bool


def intensity(x, geometry: LatticeGeometry):
    """``u = sin^2(k1 x) + sin^2(k2 x)`` and its first two derivatives."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > geometry.L):
        raise ValueError("positions must lie inside the cavity [0, L]")
    k1, k2 = geometry.k1, geometry.k2
    u = np.sin(k1 * x) ** 2 + np.sin(k2 * x) ** 2
    du = k1 * np.sin(2 * k1 * x) + k2 * np.sin(2 * k2 * x)
    d2u = 2 * k1**2 * np.cos(2 * k1 * x) + 2 * k2**2 * np.cos(2 * k2 * x)
    return u, du, d2u


def slope_factor(x, geometry: LatticeGeometry):
    """Mode-1 slope ``u1'(x) / k1 = sin(2 k1 x)``."""
    return np.sin(2 * geometry.k1 * np.asarray(x, dtype=float))


def site_factors(x: float, geometry: LatticeGeometry, geometry_factor: float = DEFAULT_GEOMETRY_FACTOR) -> WellSite:
    u, _, d2u = intensity(x, geometry)
    theta = float(slope_factor(x, geometry))
    zeta = float(d2u) / geometry.k1**2
    xi = (2.0 - geometry_factor * float(u)) / theta**2 if theta**2 > 0 else math.inf
    return WellSite(x=float(x), u=float(u), theta=theta, zeta=zeta, xi=xi, is_intensity_max=bool(d2u < 0))


def find_wells(
    geometry: LatticeGeometry, points_per_period: int = 64, geometry_factor: float = DEFAULT_GEOMETRY_FACTOR
) -> list[WellSite]:
    """All stationary points of ``u`` strictly inside ``(0, L)``, sorted by position.

    ``u'`` is sampled on a uniform grid and every sign change is refined with
    Brent's method to ``|u'| < 1e-12 k1``.
    """
    if points_per_period < 32:
        raise ValueError("need at least 32 grid points per optical period")
    g = geometry
    period = math.pi / g.k1
    n = int(math.ceil(g.L / period * points_per_period)) + 1
    xs = np.linspace(0.0, g.L, n)
    du = intensity(xs, g)[1]
    tol = 1e-12 * g.k1

    def f(x):
        return float(intensity(x, g)[1])

    roots = []
    for i in range(1, n - 2):
        a, b = du[i], du[i + 1]
        if a == 0.0:
            roots.append(xs[i])
        elif a * b < 0:
            x = brentq(f, xs[i], xs[i + 1], xtol=1e-18, maxiter=200)
            if abs(f(x)) > tol:
                x = _bisect(f, xs[i], xs[i + 1], tol)
            roots.append(x)
    return [site_factors(x, g, geometry_factor) for x in roots]


def _bisect(f: Callable[[float], float], a: float, b: float, tol: float) -> float:
    fa = f(a)
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = f(m)
        if abs(fm) < tol or m in (a, b):
            return m
        if fa * fm < 0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def _default_score(site: WellSite) -> float:
    return site.theta**2 / site.xi if site.xi > 0 else -math.inf


CRITERIA: dict[str, Callable[[WellSite], float]] = {
    "theta2_over_xi": _default_score,
    "theta": lambda s: abs(s.theta),
}


def best_site(sites: Sequence[WellSite], criterion: str = "theta2_over_xi") -> WellSite:
    """Intensity maximum with the highest score; the smaller position wins ties."""
    if not sites:
        raise ValueError("no sites to choose from")
    try:
        score = CRITERIA[criterion]
    except KeyError:
        raise ValueError(f"unknown criterion {criterion!r}; choose from {sorted(CRITERIA)}") from None
    pool = [s for s in sites if s.is_intensity_max] or list(sites)
    return max(sorted(pool, key=lambda s: s.x), key=score)


def beat_points(geometry: LatticeGeometry) -> NDArray[np.float64]:
    """Positions where the two modes are a quarter period out of step.

    Here ``cos(dk x) = 0`` so the total intensity is flat on average and the
    mode-1 slope at the nearest well is close to maximal.
    """
    g = geometry
    n = np.arange(0, int(g.dk * g.L / math.pi) + 1)
    x = (n + 0.5) * math.pi / g.dk
    return x[(x > 0) & (x < g.L)]


def transcendental_residual(site: WellSite, geometry: LatticeGeometry) -> float:
    """``tan(k x) + (dk/k) tan(dk x)``, zero at every stationary point."""
    kx, dkx = geometry.k * site.x, geometry.dk * site.x
    return math.tan(kx) + (geometry.dk / geometry.k) * math.tan(dkx)
