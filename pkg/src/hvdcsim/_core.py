"""Jitted numerical core: closed-loop right-hand side, derived signals, RK4 loop.

Everything here is scalar float64 math over flat arrays so numba compiles it
once (disk-cached) and the same expressions back the public model API, the
block tests and the integrator.

State vector layout (20 entries)::

    0  theta_sys      onshore machine angle, rad (rotating frame)
    1  df_sys         onshore frequency deviation, p.u.
    2  dp_m           governor mechanical-power deviation, p.u.
    3  theta_mmc_on   onshore MMC AC angle, rad
    4  theta_mmc_off  offshore MMC AC angle, rad
    5  w_on           onshore MMC internal energy, p.u.*s
    6  w_off          offshore MMC internal energy, p.u.*s
    7  u_dc_on        onshore DC terminal voltage, p.u.
    8  u_dc_off       offshore DC terminal voltage, p.u.
    9  i_dc           DC line current, p.u. (offshore -> onshore positive)
    10 i_cir_on       onshore circulation current, p.u.
    11 i_cir_off      offshore circulation current, p.u.
    12 df_vsg         wind-plant virtual frequency deviation, p.u.
    13 theta_owpp     wind-plant angle, rad
    14 z_freq_on      filter state, onshore frequency PD
    15 z_udc_on       filter state, onshore DC-voltage PD
    16 q_on           integrator, onshore DC-voltage PI
    17 z_freq_off     filter state, offshore frequency PD
    18 z_udc_off      filter state, offshore DC-voltage PD
    19 q_off          integrator, offshore DC-voltage PI

Derived-signal layout (12 entries)::

    0 p_ac_on   1 p_ac_off   2 p_dc_on   3 p_dc_off
    4 i_dc_on   5 i_dc_off   6 u_sum0_on 7 u_sum0_off
    8 u_hat_dc_on            9 p_owpp (export deviation)
    10 df_on_mmc (formed onshore frequency deviation)
    11 df_off_mmc (formed offshore frequency deviation)
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# -- state indices ---------------------------------------------------------
IX_TH_SYS = 0
IX_DF_SYS = 1
IX_DP_M = 2
IX_TH_ON = 3
IX_TH_OFF = 4
IX_W_ON = 5
IX_W_OFF = 6
IX_U_ON = 7
IX_U_OFF = 8
IX_I_DC = 9
IX_ICIR_ON = 10
IX_ICIR_OFF = 11
IX_DF_VSG = 12
IX_TH_OWPP = 13
IX_Z_F_ON = 14
IX_Z_U_ON = 15
IX_Q_ON = 16
IX_Z_F_OFF = 17
IX_Z_U_OFF = 18
IX_Q_OFF = 19
NSTATE = 20

STATE_NAMES = (
    "theta_sys", "df_sys", "dP_m", "theta_mmc_on", "theta_mmc_off",
    "W_on", "W_off", "U_dc_on", "U_dc_off", "I_dc",
    "i_cir_on", "i_cir_off", "df_vsg", "theta_owpp",
    "ctrl_z_freq_on", "ctrl_z_udc_on", "ctrl_q_on",
    "ctrl_z_freq_off", "ctrl_z_udc_off", "ctrl_q_off",
)

# -- derived-signal indices ------------------------------------------------
ID_P_AC_ON = 0
ID_P_AC_OFF = 1
ID_P_DC_ON = 2
ID_P_DC_OFF = 3
ID_IDC_ON = 4
ID_IDC_OFF = 5
ID_USUM_ON = 6
ID_USUM_OFF = 7
ID_UHAT_ON = 8
ID_P_OWPP = 9
ID_DF_ON_MMC = 10
ID_DF_OFF_MMC = 11
NDERIVED = 12

DERIVED_NAMES = (
    "P_ac_on", "P_ac_off", "P_dc_on", "P_dc_off", "I_dc_on", "I_dc_off",
    "U_sum0_on", "U_sum0_off", "U_hat_dc_on", "P_owpp",
    "df_on_mmc", "df_off_mmc",
)

# -- parameter-vector indices ----------------------------------------------
IP_OMEGA_B = 0
IP_H_SYS = 1
IP_D_SYS = 2
IP_R_DROOP = 3
IP_T_GOV = 4
IP_E_SYS = 5
IP_X_ON = 6
IP_U_AC_ON = 7
IP_U_AC_OFF = 8
IP_X_OFF = 9
IP_U_OWPP = 10
IP_R_CIR_ON = 11
IP_L_CIR_ON = 12
IP_K_CIR_ON = 13
IP_W_REF_ON = 14
IP_R_CIR_OFF = 15
IP_L_CIR_OFF = 16
IP_K_CIR_OFF = 17
IP_W_REF_OFF = 18
IP_R_DC = 19
IP_L_DC = 20
IP_C_HALF = 21
IP_H_OWPP = 22
IP_D_OWPP = 23
IP_P_REF = 24
IP_P_AC_ON_0 = 25
IP_MODE = 26          # 0 energy-balancing, 1 holistic
IP_REF_ON = 27        # effective onshore DC voltage reference
IP_REF_OFF = 28       # effective offshore reference (shared one under holistic)
IP_P1 = 29
IP_D1 = 30
IP_TAU1 = 31
IP_P2 = 32
IP_D2 = 33
IP_TAU2 = 34
IP_KP_ON = 35
IP_KI_ON = 36
IP_P3 = 37
IP_D3 = 38
IP_TAU3 = 39
IP_P4 = 40
IP_D4 = 41
IP_TAU4 = 42
IP_KP_OFF = 43
IP_KI_OFF = 44
IP_QUASI_STATIC_CIR = 45
NPAR = 46

# integration abort codes
OK = 0
ABORT_NONFINITE = 1
ABORT_INVARIANT = 2


@njit(cache=True, nogil=True)
def ac_power(u1, u2, x, th1, th2):
    """Lossless AC power transfer u1*u2*sin(th1 - th2)/x."""
    return u1 * u2 * math.sin(th1 - th2) / x


@njit(cache=True, nogil=True)
def ctrl_eval(y, P):
    """Continuous controller outputs from the current state.

    Returns (df_on_mmc, df_off_mmc, u_sum0_on, u_sum0_off, e_on, e_off).
    """
    dw_on = y[IX_W_ON] - P[IP_W_REF_ON]
    dw_off = y[IX_W_OFF] - P[IP_W_REF_OFF]

    df_on = P[IP_P1] * dw_on + P[IP_D1] * (dw_on - y[IX_Z_F_ON]) / P[IP_TAU1]
    du_on = P[IP_P2] * dw_on + P[IP_D2] * (dw_on - y[IX_Z_U_ON]) / P[IP_TAU2]
    e_on = (P[IP_REF_ON] + du_on) - y[IX_U_ON]
    usum_on = P[IP_KP_ON] * e_on + P[IP_KI_ON] * y[IX_Q_ON]

    df_off = P[IP_P3] * dw_off + P[IP_D3] * (dw_off - y[IX_Z_F_OFF]) / P[IP_TAU3]
    du_off = P[IP_P4] * dw_off + P[IP_D4] * (dw_off - y[IX_Z_U_OFF]) / P[IP_TAU4]
    if P[IP_MODE] >= 0.5:  # holistic: regulate the estimated onshore terminal
        fb_off = y[IX_U_OFF] - P[IP_R_DC] * y[IX_I_DC]
    else:                  # energy-balancing: regulate own terminal
        fb_off = y[IX_U_OFF]
    e_off = (P[IP_REF_OFF] + du_off) - fb_off
    usum_off = P[IP_KP_OFF] * e_off + P[IP_KI_OFF] * y[IX_Q_OFF]

    return df_on, df_off, usum_on, usum_off, e_on, e_off


@njit(cache=True, nogil=True)
def rhs(y, dp_dstb, P, cmd, use_cmd, out):
    """Full closed-loop derivative; writes into ``out``.

    ``cmd`` = (df_on_mmc, df_off_mmc, u_sum0_on, u_sum0_off) is used instead
    of the live controller outputs when ``use_cmd`` is true (sample-and-hold
    controller operation); the controller states are then frozen here and
    advanced discretely by the caller.
    """
    omega_b = P[IP_OMEGA_B]

    if use_cmd:
        df_on = cmd[0]
        df_off = cmd[1]
        usum_on = cmd[2]
        usum_off = cmd[3]
        e_on = 0.0
        e_off = 0.0
    else:
        df_on, df_off, usum_on, usum_off, e_on, e_off = ctrl_eval(y, P)

    # AC links
    p_ac_on = ac_power(P[IP_U_AC_ON], P[IP_E_SYS], P[IP_X_ON],
                       y[IX_TH_ON], y[IX_TH_SYS])
    p_ac_off = ac_power(P[IP_U_OWPP], P[IP_U_AC_OFF], P[IP_X_OFF],
                        y[IX_TH_OWPP], y[IX_TH_OFF])

    # onshore machine: swing + governor; electrical deviation is the load step
    # minus the incremental HVDC infeed
    dp_e = dp_dstb - (p_ac_on - P[IP_P_AC_ON_0])
    out[IX_TH_SYS] = omega_b * y[IX_DF_SYS]
    out[IX_DF_SYS] = (y[IX_DP_M] - dp_e - P[IP_D_SYS] * y[IX_DF_SYS]) / (2.0 * P[IP_H_SYS])
    out[IX_DP_M] = (-y[IX_DF_SYS] / P[IP_R_DROOP] - y[IX_DP_M]) / P[IP_T_GOV]

    # MMC AC angles follow the formed frequencies (rotating frame)
    out[IX_TH_ON] = omega_b * df_on
    out[IX_TH_OFF] = omega_b * df_off

    # circulation branches and DC terminal currents
    if P[IP_QUASI_STATIC_CIR] >= 0.5:
        icir_on = (y[IX_U_ON] - usum_on) / P[IP_R_CIR_ON]
        icir_off = (usum_off - y[IX_U_OFF]) / P[IP_R_CIR_OFF]
        out[IX_ICIR_ON] = 0.0
        out[IX_ICIR_OFF] = 0.0
    else:
        icir_on = y[IX_ICIR_ON]
        icir_off = y[IX_ICIR_OFF]
        out[IX_ICIR_ON] = (omega_b / P[IP_L_CIR_ON]) * (
            y[IX_U_ON] - usum_on - P[IP_R_CIR_ON] * icir_on)
        out[IX_ICIR_OFF] = (omega_b / P[IP_L_CIR_OFF]) * (
            usum_off - y[IX_U_OFF] - P[IP_R_CIR_OFF] * icir_off)
    idc_on = P[IP_K_CIR_ON] * icir_on
    idc_off = P[IP_K_CIR_OFF] * icir_off

    # internal energies: onshore discharges to AC, offshore charges from AC
    p_dc_on = usum_on * idc_on
    p_dc_off = usum_off * idc_off
    out[IX_W_ON] = p_dc_on - p_ac_on
    out[IX_W_OFF] = p_ac_off - p_dc_off

    # pi-section line
    out[IX_U_ON] = (omega_b / P[IP_C_HALF]) * (y[IX_I_DC] - idc_on)
    out[IX_U_OFF] = (omega_b / P[IP_C_HALF]) * (idc_off - y[IX_I_DC])
    out[IX_I_DC] = (omega_b / P[IP_L_DC]) * (
        y[IX_U_OFF] - y[IX_U_ON] - P[IP_R_DC] * y[IX_I_DC])

    # wind-plant virtual synchronous generator
    out[IX_DF_VSG] = ((P[IP_P_REF] - p_ac_off) - P[IP_D_OWPP] * y[IX_DF_VSG]) / (
        2.0 * P[IP_H_OWPP])
    out[IX_TH_OWPP] = omega_b * y[IX_DF_VSG]

    # controller filter/integrator states (continuous representation)
    if use_cmd:
        out[IX_Z_F_ON] = 0.0
        out[IX_Z_U_ON] = 0.0
        out[IX_Q_ON] = 0.0
        out[IX_Z_F_OFF] = 0.0
        out[IX_Z_U_OFF] = 0.0
        out[IX_Q_OFF] = 0.0
    else:
        dw_on = y[IX_W_ON] - P[IP_W_REF_ON]
        dw_off = y[IX_W_OFF] - P[IP_W_REF_OFF]
        out[IX_Z_F_ON] = (dw_on - y[IX_Z_F_ON]) / P[IP_TAU1]
        out[IX_Z_U_ON] = (dw_on - y[IX_Z_U_ON]) / P[IP_TAU2]
        out[IX_Q_ON] = e_on
        out[IX_Z_F_OFF] = (dw_off - y[IX_Z_F_OFF]) / P[IP_TAU3]
        out[IX_Z_U_OFF] = (dw_off - y[IX_Z_U_OFF]) / P[IP_TAU4]
        out[IX_Q_OFF] = e_off


@njit(cache=True, nogil=True)
def derived_signals(y, P, cmd, use_cmd, out):
    """Output channels that are algebraic functions of the state."""
    if use_cmd:
        df_on = cmd[0]
        df_off = cmd[1]
        usum_on = cmd[2]
        usum_off = cmd[3]
    else:
        df_on, df_off, usum_on, usum_off, _, _ = ctrl_eval(y, P)

    p_ac_on = ac_power(P[IP_U_AC_ON], P[IP_E_SYS], P[IP_X_ON],
                       y[IX_TH_ON], y[IX_TH_SYS])
    p_ac_off = ac_power(P[IP_U_OWPP], P[IP_U_AC_OFF], P[IP_X_OFF],
                        y[IX_TH_OWPP], y[IX_TH_OFF])
    if P[IP_QUASI_STATIC_CIR] >= 0.5:
        icir_on = (y[IX_U_ON] - usum_on) / P[IP_R_CIR_ON]
        icir_off = (usum_off - y[IX_U_OFF]) / P[IP_R_CIR_OFF]
    else:
        icir_on = y[IX_ICIR_ON]
        icir_off = y[IX_ICIR_OFF]
    idc_on = P[IP_K_CIR_ON] * icir_on
    idc_off = P[IP_K_CIR_OFF] * icir_off

    out[ID_P_AC_ON] = p_ac_on
    out[ID_P_AC_OFF] = p_ac_off
    out[ID_P_DC_ON] = usum_on * idc_on
    out[ID_P_DC_OFF] = usum_off * idc_off
    out[ID_IDC_ON] = idc_on
    out[ID_IDC_OFF] = idc_off
    out[ID_USUM_ON] = usum_on
    out[ID_USUM_OFF] = usum_off
    out[ID_UHAT_ON] = y[IX_U_OFF] - P[IP_R_DC] * y[IX_I_DC]
    out[ID_P_OWPP] = p_ac_off - P[IP_P_REF]
    out[ID_DF_ON_MMC] = df_on
    out[ID_DF_OFF_MMC] = df_off


@njit(cache=True, nogil=True)
def ctrl_discrete_update(y, P, dt_c, cmd):
    """Backward-Euler update of the controller states at one sample instant.

    Writes new filter/integrator values into ``y`` and the held commands into
    ``cmd``. Mirrors ctrl_eval() exactly in the dt_c -> 0 limit.
    """
    dw_on = y[IX_W_ON] - P[IP_W_REF_ON]
    dw_off = y[IX_W_OFF] - P[IP_W_REF_OFF]

    z = (P[IP_TAU1] * y[IX_Z_F_ON] + dt_c * dw_on) / (P[IP_TAU1] + dt_c)
    y[IX_Z_F_ON] = z
    df_on = P[IP_P1] * dw_on + P[IP_D1] * (dw_on - z) / P[IP_TAU1]

    z = (P[IP_TAU2] * y[IX_Z_U_ON] + dt_c * dw_on) / (P[IP_TAU2] + dt_c)
    y[IX_Z_U_ON] = z
    du_on = P[IP_P2] * dw_on + P[IP_D2] * (dw_on - z) / P[IP_TAU2]

    e_on = (P[IP_REF_ON] + du_on) - y[IX_U_ON]
    y[IX_Q_ON] = y[IX_Q_ON] + dt_c * e_on
    usum_on = P[IP_KP_ON] * e_on + P[IP_KI_ON] * y[IX_Q_ON]

    z = (P[IP_TAU3] * y[IX_Z_F_OFF] + dt_c * dw_off) / (P[IP_TAU3] + dt_c)
    y[IX_Z_F_OFF] = z
    df_off = P[IP_P3] * dw_off + P[IP_D3] * (dw_off - z) / P[IP_TAU3]

    z = (P[IP_TAU4] * y[IX_Z_U_OFF] + dt_c * dw_off) / (P[IP_TAU4] + dt_c)
    y[IX_Z_U_OFF] = z
    du_off = P[IP_P4] * dw_off + P[IP_D4] * (dw_off - z) / P[IP_TAU4]

    if P[IP_MODE] >= 0.5:
        fb_off = y[IX_U_OFF] - P[IP_R_DC] * y[IX_I_DC]
    else:
        fb_off = y[IX_U_OFF]
    e_off = (P[IP_REF_OFF] + du_off) - fb_off
    y[IX_Q_OFF] = y[IX_Q_OFF] + dt_c * e_off
    usum_off = P[IP_KP_OFF] * e_off + P[IP_KI_OFF] * y[IX_Q_OFF]

    cmd[0] = df_on
    cmd[1] = df_off
    cmd[2] = usum_on
    cmd[3] = usum_off


@njit(cache=True, nogil=True)
def integrate_loop(y0, P, dp_dstb, k_switch, n_steps, dt, dec, ctrl_dec,
                   out_states, out_derived):
    """Fixed-step classical RK4 over n_steps; records every ``dec``-th point.

    The disturbance is held constant over each whole step and switches on at
    grid index ``k_switch``. Returns (status, abort_step, abort_state_index);
    status 0 means the horizon completed.
    """
    y = y0.copy()
    k1 = np.empty(NSTATE)
    k2 = np.empty(NSTATE)
    k3 = np.empty(NSTATE)
    k4 = np.empty(NSTATE)
    yt = np.empty(NSTATE)
    cmd = np.zeros(4)
    use_cmd = ctrl_dec > 1

    if use_cmd:
        # establish held commands from the initial state without advancing
        ctrl_discrete_update(y, P, 0.0, cmd)

    derived_signals(y, P, cmd, use_cmd, out_derived[0])
    out_states[0] = y
    row = 1

    half = 0.5 * dt
    sixth = dt / 6.0

    for k in range(n_steps):
        if use_cmd and k % ctrl_dec == 0:
            ctrl_discrete_update(y, P, ctrl_dec * dt, cmd)

        dp = dp_dstb if k >= k_switch else 0.0

        rhs(y, dp, P, cmd, use_cmd, k1)
        for j in range(NSTATE):
            yt[j] = y[j] + half * k1[j]
        rhs(yt, dp, P, cmd, use_cmd, k2)
        for j in range(NSTATE):
            yt[j] = y[j] + half * k2[j]
        rhs(yt, dp, P, cmd, use_cmd, k3)
        for j in range(NSTATE):
            yt[j] = y[j] + dt * k3[j]
        rhs(yt, dp, P, cmd, use_cmd, k4)
        for j in range(NSTATE):
            y[j] = y[j] + sixth * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])

        for j in range(NSTATE):
            if not math.isfinite(y[j]):
                return ABORT_NONFINITE, k + 1, j
        if y[IX_U_ON] <= 0.0:
            return ABORT_INVARIANT, k + 1, IX_U_ON
        if y[IX_U_OFF] <= 0.0:
            return ABORT_INVARIANT, k + 1, IX_U_OFF
        if y[IX_W_ON] <= 0.0:
            return ABORT_INVARIANT, k + 1, IX_W_ON
        if y[IX_W_OFF] <= 0.0:
            return ABORT_INVARIANT, k + 1, IX_W_OFF

        if (k + 1) % dec == 0:
            derived_signals(y, P, cmd, use_cmd, out_derived[row])
            out_states[row] = y
            row += 1

    return OK, n_steps, -1
