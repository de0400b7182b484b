"""Gaussian states over bosonic modes and the symplectic linear algebra they need.

Quadratures are ordered ``(X_1, P_1, ..., X_n, P_n)`` with ``X = (a + a^dag)/sqrt(2)``
and ``P = (a - a^dag)/(i sqrt(2))``. Covariances use the symmetrized convention in
which the vacuum is ``I/2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from numpy.typing import NDArray

SYMMETRY_RTOL = 1e-12
UNCERTAINTY_TOL = 1e-9
IMAG_RESIDUE_TOL = 1e-8


def symplectic_form(n: int) -> NDArray[np.float64]:
    """Block-diagonal symplectic form with 2x2 blocks ``[[0, 1], [-1, 0]]``."""
    if int(n) != n or n < 1:
        raise ValueError(f"number of modes must be a positive integer, got {n!r}")
    return np.kron(np.eye(int(n)), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def check_covariance(cov, name: str = "cov") -> NDArray[np.float64]:
    """Return ``cov`` as a float array after checking shape and symmetry."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
        raise ValueError(f"{name} must be a square matrix of even dimension, got shape {cov.shape}")
    scale = max(1.0, float(np.max(np.abs(cov))))
    if np.max(np.abs(cov - cov.T)) > SYMMETRY_RTOL * scale:
        raise ValueError(f"{name} is not symmetric")
    return cov


def symplectic_eigenvalues(cov) -> NDArray[np.float64]:
    """Symplectic eigenvalues of a covariance matrix, one per mode, ascending.

    They are the moduli of the (purely imaginary) eigenvalues of ``sigma @ cov``.
    A real part larger than ``1e-8`` relative to the spectrum is treated as an
    error since it means the input is not a valid (positive) covariance.
    """
    cov = check_covariance(cov)
    n = cov.shape[0] // 2
    ev = np.linalg.eigvals(symplectic_form(n) @ cov)
    scale = max(1.0, float(np.max(np.abs(ev))))
    if np.max(np.abs(ev.real)) > IMAG_RESIDUE_TOL * scale:
        raise ValueError("sigma @ cov has eigenvalues off the imaginary axis; not a valid covariance")
    im = np.sort(ev.imag)
    return np.sort(np.abs(im[n:]))


@dataclass(frozen=True)
class GaussianState:
    """Displacement vector and covariance matrix of an ``n_modes`` Gaussian state.

    Construction only checks shapes and symmetry. Call :meth:`validate` to also
    check the uncertainty principle (partial transposes are stored in this type
    too, and those may legitimately violate it).
    """

    d: NDArray[np.float64]
    cov: NDArray[np.float64]

    def __post_init__(self):
        d = np.array(self.d, dtype=float).reshape(-1)
        cov = check_covariance(self.cov)
        if d.shape[0] != cov.shape[0]:
            raise ValueError(f"displacement has length {d.shape[0]}, covariance is {cov.shape}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "cov", np.array(cov))

    @property
    def n_modes(self) -> int:
        return self.d.shape[0] // 2

    def validate(self, tol: float = UNCERTAINTY_TOL) -> "GaussianState":
        nu = symplectic_eigenvalues(self.cov)
        if nu[0] < 0.5 - tol:
            raise ValueError(f"uncertainty principle violated: smallest symplectic eigenvalue {nu[0]:.6g} < 1/2")
        return self

    def mode_block(self, mode: int) -> NDArray[np.float64]:
        """2x2 covariance block of one mode."""
        _check_mode(mode, self.n_modes)
        s = slice(2 * mode, 2 * mode + 2)
        return self.cov[s, s].copy()

    def mode_displacement(self, mode: int) -> NDArray[np.float64]:
        _check_mode(mode, self.n_modes)
        return self.d[2 * mode : 2 * mode + 2].copy()

    def reduced(self, mode: int) -> "GaussianState":
        return GaussianState(self.mode_displacement(mode), self.mode_block(mode))

    def to_dict(self) -> dict:
        return {"n_modes": self.n_modes, "d": self.d.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping) -> "GaussianState":
        state = cls(np.asarray(data["d"], dtype=float), np.asarray(data["cov"], dtype=float))
        if "n_modes" in data and data["n_modes"] != state.n_modes:
            raise ValueError("n_modes does not match the displacement length")
        return state


def _check_mode(mode: int, n_modes: int) -> None:
    if not 0 <= mode < n_modes:
        raise IndexError(f"mode index {mode} out of range for {n_modes} modes")


@dataclass(frozen=True)
class ModeSpec:
    """Single-mode preparation: thermal occupation, X-squeezing and displacement.

    The covariance block is ``(nbar + 1/2) * diag(squeeze, 1/squeeze)`` and the
    displacement is ``sqrt(2) * (Re alpha, Im alpha)``.
    """

    alpha: complex = 0j
    squeeze: float = 1.0
    nbar: float = 0.0

    def __post_init__(self):
        if not self.squeeze > 0:
            raise ValueError(f"squeezing parameter must be positive, got {self.squeeze}")
        if not self.nbar >= 0:
            raise ValueError(f"thermal occupation must be non-negative, got {self.nbar}")

    def block(self) -> NDArray[np.float64]:
        return (self.nbar + 0.5) * np.diag([self.squeeze, 1.0 / self.squeeze])

    def displacement(self) -> NDArray[np.float64]:
        a = complex(self.alpha)
        return np.sqrt(2.0) * np.array([a.real, a.imag])


def vacuum_mode() -> ModeSpec:
    return ModeSpec()


def coherent(alpha: complex) -> ModeSpec:
    return ModeSpec(alpha=alpha)


def squeezed(s: float) -> ModeSpec:
    """Squeezed vacuum with X variance ``s/2``."""
    return ModeSpec(squeeze=s)


def thermal(nbar: float) -> ModeSpec:
    return ModeSpec(nbar=nbar)


def make_state(spec: Mapping[int, ModeSpec] | None, n_modes: int) -> GaussianState:
    """Product Gaussian state with the given per-mode preparations.

    Modes missing from ``spec`` are left in the vacuum.

    >>> make_state({1: coherent(1.0)}, 2).d
    array([0.        , 0.        , 1.41421356, 0.        ])
    """
    symplectic_form(n_modes)
    spec = dict(spec or {})
    d = np.zeros(2 * n_modes)
    cov = 0.5 * np.eye(2 * n_modes)
    for mode, ms in spec.items():
        _check_mode(mode, n_modes)
        s = slice(2 * mode, 2 * mode + 2)
        cov[s, s] = ms.block()
        d[s] = ms.displacement()
    return GaussianState(d, cov).validate()


def vacuum(n_modes: int) -> GaussianState:
    return make_state(None, n_modes)


def two_mode_squeezed(r: float) -> GaussianState:
    """Two-mode squeezed vacuum built by symplectic conjugation of the vacuum."""
    c, s = np.cosh(r), np.sinh(r)
    z = np.diag([1.0, -1.0])
    S = np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])
    return GaussianState(np.zeros(4), 0.5 * S @ S.T)


def partial_transpose(state: GaussianState, mode: int) -> GaussianState:
    """Flip the sign of one mode's momentum (row/column of the covariance and d entry)."""
    if state.n_modes != 2:
        raise ValueError("partial transpose is only supported for two-mode states")
    _check_mode(mode, 2)
    flip = np.ones(4)
    flip[2 * mode + 1] = -1.0
    return GaussianState(state.d * flip, state.cov * np.outer(flip, flip))
