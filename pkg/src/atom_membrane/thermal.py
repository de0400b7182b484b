"""Membrane heating by absorbed intracavity light."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pyamg
import scipy.sparse as sp
from numpy.typing import NDArray


def absorbed_power(P_c: float, finesse: float) -> float:
    """Absorbed power when the finesse is limited by membrane absorption."""
    if P_c < 0 or not finesse > 0:
        raise ValueError("need P_c >= 0 and finesse > 0")
    return 2.0 * math.pi / finesse * P_c


def lumped_temperature_rise(P_c: float, finesse: float, thermal_link: float) -> float:
    """Temperature rise of the membrane centre; ``thermal_link`` is ``k_B kappa_th`` in W/K."""
    if not thermal_link > 0:
        raise ValueError("thermal link must be positive")
    return absorbed_power(P_c, finesse) / thermal_link


@dataclass(frozen=True)
class HeatConfig:
    """Steady-state heat map inputs (SI).

    ``P_a`` overrides the absorbed power computed from ``P_c`` and ``finesse``.
    ``thickness`` defaults to 50 nm and ``side`` to 1 mm; both are assumptions.
    """

    P_c: float = 850e-6
    finesse: float = 2e5
    thermal_link: float = 10e-9
    T0: float = 2.0
    k_th: float = 0.05
    side: float = 1e-3
    thickness: float = 50e-9
    waist: float = 10e-6
    grid: int = 400
    P_a: float | None = None
    tol: float = 1e-10

    def __post_init__(self):
        for name in ("finesse", "thermal_link", "T0", "k_th", "side", "thickness", "waist", "tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.P_c < 0 or (self.P_a is not None and self.P_a < 0):
            raise ValueError("powers must be non-negative")
        if not self.waist < self.side / 2:
            raise ValueError("beam waist must be smaller than half the membrane side")
        if self.grid < 64:
            raise ValueError("grid must have at least 64 cells per side")

    @property
    def absorbed(self) -> float:
        return self.P_a if self.P_a is not None else absorbed_power(self.P_c, self.finesse)


@dataclass(frozen=True)
class HeatMap:
    x: NDArray[np.float64]
    T: NDArray[np.float64]
    T_peak: float
    T_avg: float
    residual: float

    @property
    def peak_index(self) -> tuple[int, int]:
        i = int(np.argmax(self.T))
        return np.unravel_index(i, self.T.shape)


class HeatSolveError(RuntimeError):
    pass


def disk_coverage(x: NDArray, radius: float, h: float, oversample: int = 8) -> NDArray[np.float64]:
    """Fraction of each node's control square ``[x-h/2, x+h/2]^2`` inside the centred disk."""
    offs = (np.arange(oversample) + 0.5) / oversample - 0.5
    sub = (x[:, None] + h * offs[None, :]).ravel()
    inside = (sub[:, None] ** 2 + sub[None, :] ** 2) <= radius**2
    n = x.size
    return inside.reshape(n, oversample, n, oversample).mean(axis=(1, 3))


def _laplacian_1d(m: int) -> sp.csr_matrix:
    return sp.diags([-np.ones(m - 1), 2 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1], format="csr")


def steady_state_heat_map(config: HeatConfig) -> HeatMap:
    """Solve ``div(k_th t grad T) + q = 0`` on the square with ``T = T0`` on the frame.

    Node-centred five-point differences; the disk source is distributed by area
    coverage of each node's control square and rescaled so it integrates to the
    absorbed power exactly. Solved by algebraic multigrid preconditioned CG.
    """
    c = config
    n = c.grid
    h = c.side / n
    x = np.linspace(-c.side / 2, c.side / 2, n + 1)
    theta = np.zeros((n + 1, n + 1))
    P = c.absorbed
    residual = 0.0
    if P > 0:
        cov = disk_coverage(x, c.waist, h)
        cov[0, :] = cov[-1, :] = cov[:, 0] = cov[:, -1] = 0.0
        q = cov * (P / (cov.sum() * h * h))
        m = n - 1
        I = sp.identity(m, format="csr")
        A = (sp.kron(I, _laplacian_1d(m)) + sp.kron(_laplacian_1d(m), I)).tocsr()
        b = q[1:-1, 1:-1].ravel() * h * h / (c.k_th * c.thickness)
        ml = pyamg.smoothed_aggregation_solver(A, symmetry="hermitian")
        u = ml.solve(b, tol=c.tol * 1e-2, accel="cg", maxiter=500)
        residual = float(np.linalg.norm(b - A @ u) / np.linalg.norm(b))
        if not residual < c.tol:
            raise HeatSolveError(f"heat solver stopped at relative residual {residual:.3e} > {c.tol:.1e}")
        theta[1:-1, 1:-1] = u.reshape(m, m)
    T = c.T0 + theta
    w = np.ones(n + 1)
    w[0] = w[-1] = 0.5
    T_avg = float(np.einsum("i,j,ij->", w, w, T) / (n * n))
    return HeatMap(x=x, T=T, T_peak=float(T.max()), T_avg=T_avg, residual=residual)


def log_profile_slope(P_a: float, k_th: float, thickness: float) -> float:
    """Coefficient of ``ln(R/r)`` outside a point-like source in an infinite sheet."""
    return P_a / (2.0 * math.pi * k_th * thickness)
