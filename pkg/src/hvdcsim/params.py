"""Physical parameters of the onshore grid / HVDC link / offshore wind plant model.

Everything is per unit on a common MVA base. Inductances and capacitances are
per-unit reactance/susceptance at the base angular frequency, so every state
derivative carries an explicit omega_b factor and simulation time stays in
seconds.

Sign conventions, used consistently everywhere:
  * positive power flows wind plant -> offshore MMC -> DC line -> onshore
    MMC -> grid;
  * positive DC line current I_dc flows offshore -> onshore.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import ParameterError


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ParameterError(msg)


@dataclass(frozen=True)
class Bases:
    """Frequency and power bases. S_base is bookkeeping only."""

    f_0: float = 50.0          # Hz
    s_base_mva: float = 1000.0

    def __post_init__(self):
        _require(self.f_0 > 0, f"f_0 must be positive, got {self.f_0}")
        _require(self.s_base_mva > 0, f"s_base_mva must be positive, got {self.s_base_mva}")

    @property
    def omega_b(self) -> float:
        """Base angular frequency, rad/s (exactly 2*pi*f_0)."""
        return 2.0 * math.pi * self.f_0


@dataclass(frozen=True)
class OnshoreGridParams:
    """Equivalent synchronous machine, governor and Thevenin link of the main grid."""

    h_sys: float = 4.0      # inertia constant, s
    d_sys: float = 0.0      # damping, p.u. power per p.u. frequency
    r_droop: float = 0.05   # governor droop, p.u.
    t_gov: float = 0.5      # governor-turbine lag, s
    e_sys: float = 1.0      # grid voltage magnitude, p.u.
    x_eq_on: float = 0.06   # onshore equivalent reactance, p.u.

    def __post_init__(self):
        _require(self.h_sys > 0, f"h_sys must be positive, got {self.h_sys}")
        _require(self.r_droop > 0, f"r_droop must be positive, got {self.r_droop}")
        _require(self.t_gov > 0, f"t_gov must be positive, got {self.t_gov}")
        _require(self.x_eq_on > 0, f"x_eq_on must be positive, got {self.x_eq_on}")
        _require(self.e_sys > 0, f"e_sys must be positive, got {self.e_sys}")


@dataclass(frozen=True)
class MmcParams:
    """One MMC terminal: arm impedance, energy reference and voltage setpoints.

    The zero-sequence circulation branch is derived from the arm values
    (R_cir = 2 R_arm, L_cir = 2 L_arm) and exposed as read-only properties so
    the relation cannot drift.
    """

    r_arm: float = 0.025    # p.u.
    l_arm: float = 0.02     # p.u. reactance at omega_b
    k_cir: float = 3.0      # circulation current -> DC terminal current gain
    w_ref: float = 1.0      # internal energy reference, p.u.*s
    u_ac: float = 1.0       # AC terminal voltage magnitude, p.u. (held constant)
    u_dc_ref: float = 1.0   # DC terminal voltage reference, p.u.

    def __post_init__(self):
        _require(self.r_arm >= 0, f"r_arm must be non-negative, got {self.r_arm}")
        _require(self.l_arm > 0, f"l_arm must be positive, got {self.l_arm}")
        _require(self.k_cir > 0, f"k_cir must be positive, got {self.k_cir}")
        _require(self.w_ref > 0, f"w_ref must be positive, got {self.w_ref}")
        _require(self.u_ac > 0, f"u_ac must be positive, got {self.u_ac}")
        _require(self.u_dc_ref > 0, f"u_dc_ref must be positive, got {self.u_dc_ref}")

    @property
    def r_cir(self) -> float:
        return 2.0 * self.r_arm

    @property
    def l_cir(self) -> float:
        return 2.0 * self.l_arm


@dataclass(frozen=True)
class HvdcLineParams:
    """Pi-section DC line: series R-L, half the shunt capacitance per terminal."""

    r_dc: float = 0.01   # p.u.
    l_dc: float = 0.1    # p.u. reactance at omega_b
    c_dc: float = 8.0    # total p.u. susceptance at omega_b

    def __post_init__(self):
        _require(self.r_dc >= 0, f"r_dc must be non-negative, got {self.r_dc}")
        _require(self.l_dc > 0, f"l_dc must be positive, got {self.l_dc}")
        _require(self.c_dc > 0, f"c_dc must be positive, got {self.c_dc}")


@dataclass(frozen=True)
class OwppParams:
    """Aggregated offshore wind plant seen as one grid-side converter."""

    h_owpp: float = 0.0     # virtual inertia, s
    d_owpp: float = 20.0    # virtual damping / droop, p.u.
    u_owpp: float = 1.0     # terminal voltage magnitude, p.u.
    x_eq_off: float = 0.06  # offshore equivalent reactance, p.u.
    p_ref: float = 0.8      # pre-event wind power export, p.u.

    def __post_init__(self):
        _require(self.h_owpp >= 0, f"h_owpp must be non-negative, got {self.h_owpp}")
        _require(self.d_owpp >= 0, f"d_owpp must be non-negative, got {self.d_owpp}")
        _require(self.u_owpp > 0, f"u_owpp must be positive, got {self.u_owpp}")
        _require(self.x_eq_off > 0, f"x_eq_off must be positive, got {self.x_eq_off}")
        _require(0.0 <= self.p_ref <= 1.0, f"p_ref must be in [0, 1], got {self.p_ref}")


@dataclass(frozen=True)
class SystemParams:
    """Complete physical description of the AC-DC-AC system (no controller gains)."""

    bases: Bases = field(default_factory=Bases)
    grid: OnshoreGridParams = field(default_factory=OnshoreGridParams)
    mmc_on: MmcParams = field(default_factory=MmcParams)
    mmc_off: MmcParams = field(default_factory=MmcParams)
    line: HvdcLineParams = field(default_factory=HvdcLineParams)
    owpp: OwppParams = field(default_factory=OwppParams)

    def with_owpp_response(self, h_owpp: float, d_owpp: float) -> "SystemParams":
        """Copy with the wind-plant response pair replaced (scenario override)."""
        return replace(self, owpp=replace(self.owpp, h_owpp=h_owpp, d_owpp=d_owpp))
