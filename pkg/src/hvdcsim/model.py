"""Open-loop dynamic equations of the AC-DC-AC system and the composed
closed-loop derivative.

The building blocks (AC link power, swing/governor, MMC energy balance,
pi-line network) are exposed as plain functions; ``assemble_derivative``
composes them together with the controller outputs into one flat derivative
vector. The composition itself is evaluated by the jitted core so the exact
same expressions drive tests and production integration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _core
from ._core import (
    DERIVED_NAMES,
    NDERIVED,
    NPAR,
    NSTATE,
    STATE_NAMES,
)
from .controllers import (
    MODE_HOLISTIC,
    ControllerGains,
    ControllerState,
    effective_h_owpp,
)
from .errors import ParameterError, SimulationAbort
from .params import Bases, HvdcLineParams, MmcParams, OnshoreGridParams, SystemParams


@dataclass
class SimState:
    """Full dynamic state. Angles are in the synchronously rotating frame, so
    every angle derivative is omega_b times a frequency *deviation*."""

    theta_sys: float = 0.0
    df_sys: float = 0.0
    dp_m: float = 0.0
    theta_mmc_on: float = 0.0
    theta_mmc_off: float = 0.0
    w_on: float = 1.0
    w_off: float = 1.0
    u_dc_on: float = 1.0
    u_dc_off: float = 1.0
    i_dc: float = 0.0
    i_cir_on: float = 0.0
    i_cir_off: float = 0.0
    df_vsg: float = 0.0
    theta_owpp: float = 0.0
    ctrl: ControllerState = field(default_factory=ControllerState)

    def to_vector(self) -> np.ndarray:
        y = np.empty(NSTATE)
        y[_core.IX_TH_SYS] = self.theta_sys
        y[_core.IX_DF_SYS] = self.df_sys
        y[_core.IX_DP_M] = self.dp_m
        y[_core.IX_TH_ON] = self.theta_mmc_on
        y[_core.IX_TH_OFF] = self.theta_mmc_off
        y[_core.IX_W_ON] = self.w_on
        y[_core.IX_W_OFF] = self.w_off
        y[_core.IX_U_ON] = self.u_dc_on
        y[_core.IX_U_OFF] = self.u_dc_off
        y[_core.IX_I_DC] = self.i_dc
        y[_core.IX_ICIR_ON] = self.i_cir_on
        y[_core.IX_ICIR_OFF] = self.i_cir_off
        y[_core.IX_DF_VSG] = self.df_vsg
        y[_core.IX_TH_OWPP] = self.theta_owpp
        y[_core.IX_Z_F_ON] = self.ctrl.z_freq_on
        y[_core.IX_Z_U_ON] = self.ctrl.z_udc_on
        y[_core.IX_Q_ON] = self.ctrl.q_on
        y[_core.IX_Z_F_OFF] = self.ctrl.z_freq_off
        y[_core.IX_Z_U_OFF] = self.ctrl.z_udc_off
        y[_core.IX_Q_OFF] = self.ctrl.q_off
        return y

    @classmethod
    def from_vector(cls, y: np.ndarray) -> "SimState":
        ctrl = ControllerState(
            z_freq_on=y[_core.IX_Z_F_ON], z_udc_on=y[_core.IX_Z_U_ON],
            q_on=y[_core.IX_Q_ON], z_freq_off=y[_core.IX_Z_F_OFF],
            z_udc_off=y[_core.IX_Z_U_OFF], q_off=y[_core.IX_Q_OFF])
        return cls(
            theta_sys=y[_core.IX_TH_SYS], df_sys=y[_core.IX_DF_SYS],
            dp_m=y[_core.IX_DP_M], theta_mmc_on=y[_core.IX_TH_ON],
            theta_mmc_off=y[_core.IX_TH_OFF], w_on=y[_core.IX_W_ON],
            w_off=y[_core.IX_W_OFF], u_dc_on=y[_core.IX_U_ON],
            u_dc_off=y[_core.IX_U_OFF], i_dc=y[_core.IX_I_DC],
            i_cir_on=y[_core.IX_ICIR_ON], i_cir_off=y[_core.IX_ICIR_OFF],
            df_vsg=y[_core.IX_DF_VSG], theta_owpp=y[_core.IX_TH_OWPP],
            ctrl=ctrl)


@dataclass(frozen=True)
class DerivedSignals:
    """Algebraic output signals evaluated from one state."""

    p_ac_on: float
    p_ac_off: float
    p_dc_on: float
    p_dc_off: float
    i_dc_on: float
    i_dc_off: float
    u_sum0_on: float
    u_sum0_off: float
    u_hat_dc_on: float
    p_owpp: float
    df_on_mmc: float
    df_off_mmc: float


@dataclass(frozen=True)
class ModelContext:
    """Everything one run needs besides the state: physical parameters with
    resolved DC references, gains, and the initial operating point."""

    params: SystemParams          # mmc_off.u_dc_ref holds the *effective* reference
    gains: ControllerGains
    pvec: np.ndarray              # packed parameter vector for the jitted core
    u_dc_on_0: float
    u_dc_off_0: float
    i_dc_0: float
    p_ac_on_0: float
    u_sum0_on_0: float
    u_sum0_off_0: float


def pack_params(params: SystemParams, gains: ControllerGains, *,
                p_ac_on_0: float, ref_on: float, ref_off: float,
                quasi_static_cir: bool = False) -> np.ndarray:
    """Flatten parameters + gains + operating point into the core's layout."""
    g = gains
    P = np.zeros(NPAR)
    P[_core.IP_OMEGA_B] = params.bases.omega_b
    P[_core.IP_H_SYS] = params.grid.h_sys
    P[_core.IP_D_SYS] = params.grid.d_sys
    P[_core.IP_R_DROOP] = params.grid.r_droop
    P[_core.IP_T_GOV] = params.grid.t_gov
    P[_core.IP_E_SYS] = params.grid.e_sys
    P[_core.IP_X_ON] = params.grid.x_eq_on
    P[_core.IP_U_AC_ON] = params.mmc_on.u_ac
    P[_core.IP_U_AC_OFF] = params.mmc_off.u_ac
    P[_core.IP_X_OFF] = params.owpp.x_eq_off
    P[_core.IP_U_OWPP] = params.owpp.u_owpp
    P[_core.IP_R_CIR_ON] = params.mmc_on.r_cir
    P[_core.IP_L_CIR_ON] = params.mmc_on.l_cir
    P[_core.IP_K_CIR_ON] = params.mmc_on.k_cir
    P[_core.IP_W_REF_ON] = params.mmc_on.w_ref
    P[_core.IP_R_CIR_OFF] = params.mmc_off.r_cir
    P[_core.IP_L_CIR_OFF] = params.mmc_off.l_cir
    P[_core.IP_K_CIR_OFF] = params.mmc_off.k_cir
    P[_core.IP_W_REF_OFF] = params.mmc_off.w_ref
    P[_core.IP_R_DC] = params.line.r_dc
    P[_core.IP_L_DC] = params.line.l_dc
    P[_core.IP_C_HALF] = 0.5 * params.line.c_dc
    P[_core.IP_H_OWPP] = effective_h_owpp(params.owpp)
    P[_core.IP_D_OWPP] = params.owpp.d_owpp
    P[_core.IP_P_REF] = params.owpp.p_ref
    P[_core.IP_P_AC_ON_0] = p_ac_on_0
    P[_core.IP_MODE] = 1.0 if g.mode == MODE_HOLISTIC else 0.0
    P[_core.IP_REF_ON] = ref_on
    P[_core.IP_REF_OFF] = ref_off
    P[_core.IP_P1] = g.pd_freq_on.p
    P[_core.IP_D1] = g.pd_freq_on.d
    P[_core.IP_TAU1] = g.pd_freq_on.tau_d
    P[_core.IP_P2] = g.pd_udc_on.p
    P[_core.IP_D2] = g.pd_udc_on.d
    P[_core.IP_TAU2] = g.pd_udc_on.tau_d
    P[_core.IP_KP_ON] = g.pi_on.kp
    P[_core.IP_KI_ON] = g.pi_on.ki
    P[_core.IP_P3] = g.pd_freq_off.p
    P[_core.IP_D3] = g.pd_freq_off.d
    P[_core.IP_TAU3] = g.pd_freq_off.tau_d
    P[_core.IP_P4] = g.pd_udc_off.p
    P[_core.IP_D4] = g.pd_udc_off.d
    P[_core.IP_TAU4] = g.pd_udc_off.tau_d
    P[_core.IP_KP_OFF] = g.pi_off.kp
    P[_core.IP_KI_OFF] = g.pi_off.ki
    P[_core.IP_QUASI_STATIC_CIR] = 1.0 if quasi_static_cir else 0.0
    return P


_NO_CMD = np.zeros(4)


def ac_power_transfer(u1: float, u2: float, x: float, th1: float, th2: float) -> float:
    """Lossless power over a reactance: u1*u2*sin(th1 - th2)/x.

    Antisymmetric under swapping the two terminals.
    """
    if x <= 0.0:
        raise ParameterError(f"reactance must be positive, got {x}")
    return _core.ac_power(u1, u2, x, th1, th2)


def swing_derivatives(state: SimState, p_ac_on_dev: float, dp_dstb: float,
                      grid: OnshoreGridParams, bases: Bases) -> tuple[float, float, float]:
    """Onshore machine dynamics.

    ``p_ac_on_dev`` is the incremental HVDC infeed relative to the pre-event
    operating point; the electrical deviation on the machine is the load step
    minus that infeed. Returns (d theta_sys, d df_sys, d dp_m).
    """
    dp_e = dp_dstb - p_ac_on_dev
    d_theta = bases.omega_b * state.df_sys
    d_df = (state.dp_m - dp_e - grid.d_sys * state.df_sys) / (2.0 * grid.h_sys)
    d_dpm = (-state.df_sys / grid.r_droop - state.dp_m) / grid.t_gov
    return d_theta, d_df, d_dpm


def mmc_energy_derivative(p_ac: float, p_dc: float, side: str) -> float:
    """Internal-energy balance of one MMC.

    Onshore converts DC to AC (dW = P_dc - P_ac); offshore converts AC to DC
    (dW = P_ac - P_dc).
    """
    if side == "on":
        return p_dc - p_ac
    if side == "off":
        return p_ac - p_dc
    raise ParameterError(f"side must be 'on' or 'off', got {side!r}")


def dc_network_derivatives(state: SimState, u_sum0_on: float, u_sum0_off: float,
                           mmc_on: MmcParams, mmc_off: MmcParams,
                           line: HvdcLineParams, bases: Bases,
                           ) -> tuple[float, float, float, float, float]:
    """Circulation branches plus pi-section line.

    Returns (d u_dc_on, d u_dc_off, d i_dc, d i_cir_on, d i_cir_off). The
    offshore source injects into its terminal, the onshore source withdraws,
    and the line current flows offshore -> onshore.
    """
    wb = bases.omega_b
    c_half = 0.5 * line.c_dc
    idc_on = mmc_on.k_cir * state.i_cir_on
    idc_off = mmc_off.k_cir * state.i_cir_off
    d_icir_off = (wb / mmc_off.l_cir) * (
        u_sum0_off - state.u_dc_off - mmc_off.r_cir * state.i_cir_off)
    d_icir_on = (wb / mmc_on.l_cir) * (
        state.u_dc_on - u_sum0_on - mmc_on.r_cir * state.i_cir_on)
    d_u_off = (wb / c_half) * (idc_off - state.i_dc)
    d_u_on = (wb / c_half) * (state.i_dc - idc_on)
    d_i_dc = (wb / line.l_dc) * (state.u_dc_off - state.u_dc_on - line.r_dc * state.i_dc)
    return d_u_on, d_u_off, d_i_dc, d_icir_on, d_icir_off


def assemble_derivative(state: SimState, t: float, ctx: ModelContext,
                        dp_dstb: float = 0.0) -> np.ndarray:
    """Closed-loop derivative vector at one state (pure function of its inputs).

    The disturbance is the currently active load-step value; time is accepted
    for signature uniformity (the dynamics are time-invariant between events).
    A non-finite derivative entry raises immediately, naming the channel.
    """
    y = state.to_vector()
    out = np.empty(NSTATE)
    _core.rhs(y, dp_dstb, ctx.pvec, _NO_CMD, False, out)
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise SimulationAbort(
            f"non-finite derivative in channel {STATE_NAMES[bad]} at t={t}",
            channel=STATE_NAMES[bad], time=t)
    return out


def compute_derived(state: SimState, ctx: ModelContext) -> DerivedSignals:
    """Evaluate the algebraic output signals at one state."""
    y = state.to_vector()
    out = np.empty(NDERIVED)
    _core.derived_signals(y, ctx.pvec, _NO_CMD, False, out)
    return DerivedSignals(*out)
