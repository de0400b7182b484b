"""JSON run configuration: one document, one section per module.

Every section is optional; a command reads only the sections it needs. Unknown
keys are rejected so that typos surface as errors with a field path.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .lattice import LatticeGeometry
from .protocols import ScenarioConfig
from .system import ConditionThresholds, K_B, PhysicalParams
from .thermal import HeatConfig


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SystemSection(_Section):
    """Physical inputs (SI). Exactly one of each alternative pair must be given."""

    L: float = Field(gt=0)
    r: float = Field(ge=0, lt=1)
    M: float = Field(gt=0)
    omega_m: float = Field(gt=0)
    Q_m: float = Field(gt=0)
    m_atom: float = Field(gt=0)
    gamma_atom: float = Field(gt=0)
    Omega0: float = Field(gt=0)
    delta: float
    Delta: float
    finesse: Optional[float] = Field(default=None, gt=0)
    kappa: Optional[float] = Field(default=None, gt=0)
    omega_c: Optional[float] = Field(default=None, gt=0)
    wavelength: Optional[float] = Field(default=None, gt=0)
    nbar_m: Optional[float] = Field(default=None, ge=0)
    T: Optional[float] = Field(default=None, ge=0)
    P: Optional[float] = Field(default=None, ge=0)
    alpha: Optional[float] = Field(default=None, ge=0)
    theta: float = 1.0
    u: float = 1.0
    zeta: float = 0.5
    x_m: Optional[float] = None
    geometry_factor: float = 0.8
    Gamma_R: Optional[float] = Field(default=None, ge=0)
    thermal_link: float = Field(default=10e-9, gt=0, description="k_B kappa_th in W/K")
    margin: float = Field(default=10.0, gt=0)
    balance_tol: float = Field(default=0.2, gt=0)

    @model_validator(mode="after")
    def _pairs(self):
        for a, b in (("finesse", "kappa"), ("omega_c", "wavelength"), ("P", "alpha"), ("nbar_m", "T")):
            if (getattr(self, a) is None) == (getattr(self, b) is None):
                raise ValueError(f"exactly one of {a!r} and {b!r} must be given")
        if self.delta == 0 or self.Delta == 0:
            raise ValueError("detunings delta and Delta must be nonzero")
        return self

    def params(self) -> PhysicalParams:
        skip = {"thermal_link", "margin", "balance_tol"}
        return PhysicalParams(**{k: v for k, v in self.model_dump().items() if k not in skip})

    def thresholds(self) -> ConditionThresholds:
        return ConditionThresholds(margin=self.margin, balance_tol=self.balance_tol)

    @property
    def kappa_th(self) -> float:
        """Thermal link in 1/s."""
        return self.thermal_link / K_B


class LatticeSection(_Section):
    wavelength1: float = Field(default=852e-9, gt=0)
    n1: int = Field(default=124, gt=0)
    q: int = Field(default=5, gt=0)
    points_per_period: int = Field(default=64, ge=32)
    geometry_factor: float = 0.8
    criterion: Literal["theta2_over_xi", "theta"] = "theta2_over_xi"

    def geometry(self) -> LatticeGeometry:
        return LatticeGeometry.resonant(self.wavelength1, self.n1, self.q)


class ProtocolsSection(_Section):
    """Scenario parameters in units of the membrane frequency."""

    scenario: Literal["swap_coherent", "swap_squeezed", "swap_fock", "entangle", "cool_compare"] = "swap_coherent"
    f: float = Field(default=0.0, ge=0)
    G: float = Field(default=0.034, gt=0)
    omega_at: float = Field(default=1.0, gt=0)
    beta: tuple[float, float] = (1.0, 0.0)
    s0: float = Field(default=math.exp(-2.0), gt=0)
    duration: float = Field(default=2.0, gt=0)
    points: int = Field(default=401, ge=2)
    model: Literal["effective", "full"] = "effective"
    modulation: bool = False
    Gamma_c: Optional[float] = Field(default=None, ge=0)
    Gamma_m: Optional[float] = Field(default=None, ge=0)
    Gamma_at: Optional[float] = Field(default=None, ge=0)
    nbar_m: float = Field(default=50.0, gt=0)
    g_over_delta: float = Field(default=0.02, gt=0)
    kappa: float = Field(default=1.0, ge=0)
    step: float = Field(default=0.05, gt=0)

    def scenario_config(self) -> ScenarioConfig:
        d = self.model_dump()
        d["beta"] = complex(*self.beta)
        return ScenarioConfig(**d)


class CoolingSection(_Section):
    f: float = Field(ge=0)
    G: float = Field(gt=0)
    omega_m: float = Field(default=1.0, gt=0)
    Gamma_R: float = Field(gt=0)
    g_m: float = Field(gt=0)
    kappa: float = Field(gt=0)
    Gamma_m: float = Field(ge=0)


class ThermalSection(_Section):
    P_c: float = Field(default=850e-6, ge=0)
    finesse: float = Field(default=2e5, gt=0)
    thermal_link: float = Field(default=10e-9, gt=0)
    T0: float = Field(default=2.0, gt=0)
    k_th: float = Field(default=0.05, gt=0)
    side: float = Field(default=1e-3, gt=0)
    thickness: float = Field(default=50e-9, gt=0)
    waist: float = Field(default=10e-6, gt=0)
    grid: int = Field(default=400, ge=64)
    P_a: Optional[float] = Field(default=None, ge=0)
    tol: float = Field(default=1e-10, gt=0)

    @model_validator(mode="after")
    def _waist(self):
        if not self.waist < self.side / 2:
            raise ValueError("waist must be smaller than half the membrane side")
        return self

    def heat_config(self) -> HeatConfig:
        return HeatConfig(**self.model_dump())


class RunConfig(_Section):
    system: Optional[SystemSection] = None
    lattice: Optional[LatticeSection] = None
    protocols: Optional[ProtocolsSection] = None
    cooling: Optional[CoolingSection] = None
    thermal: Optional[ThermalSection] = None

    def require(self, name: str):
        section = getattr(self, name)
        if section is None:
            raise ConfigError(f"{name}: section is required for this command")
        return section


def _describe(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def parse_config(data: Any) -> RunConfig:
    """Validate a decoded JSON document, raising :class:`ConfigError` with field paths.

    >>> parse_config({"thermal": {"grid": 10}})
    Traceback (most recent call last):
    ...
    atom_membrane.config.ConfigError: thermal.grid: Input should be greater than or equal to 64
    """
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_describe(err)) from None


def load_config(path: str | Path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"<file>: {path} not found") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"<file>: invalid JSON at line {err.lineno}: {err.msg}") from None
    return parse_config(data)


def override(config: RunConfig, section: str, **values) -> RunConfig:
    """Apply CLI flag overrides (``None`` values are ignored) and revalidate."""
    data = config.model_dump(exclude_none=True)
    sec = dict(data.get(section, {}))
    sec.update({k: v for k, v in values.items() if v is not None})
    data[section] = sec
    return parse_config(data)
