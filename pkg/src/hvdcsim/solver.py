"""Steady-state initialization and fixed-step time integration.

Initialization solves the pre-event power flow by a small fixed-point
iteration (line current against the voltage chain including circulation-branch
losses), back-solves the AC angles, and seeds the controller integrators so
the closed loop starts exactly at rest. Integration is classical RK4 on a
fixed grid; the load step switches on at the first grid point at or after the
event time so runs are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _core
from .controllers import (
    MODE_ENERGY_BALANCING,
    MODE_HOLISTIC,
    ControllerGains,
    ControllerState,
)
from .errors import InitError, ParameterError, SimulationAbort, TransferCapabilityError
from .model import ModelContext, SimState, pack_params
from .params import SystemParams

DT_MAX = 1e-3  # s; the circulation and DC-voltage loops are stiff beyond this


@dataclass(frozen=True)
class Scenario:
    """One disturbance experiment: what happens, when, and how it is solved."""

    control_mode: str = MODE_HOLISTIC
    dp_dstb: float = 0.1        # p.u., positive = load increase
    t_dstb: float = 1.0         # s
    t_end: float = 30.0         # s
    dt: float = 2e-4            # s
    h_owpp: float | None = None  # scenario override of the wind-plant inertia
    d_owpp: float | None = None  # scenario override of the wind-plant droop
    output_decimation: int = 10
    ctrl_decimation: int = 1    # >1 = sample-and-hold controller updates
    quasi_static_cir: bool = False

    def __post_init__(self):
        if not (0.0 < self.dt <= DT_MAX):
            raise ParameterError(f"dt must be in (0, {DT_MAX}] s, got {self.dt}")
        if not (self.t_dstb < self.t_end):
            raise ParameterError("t_dstb must be before t_end")
        if self.output_decimation < 1:
            raise ParameterError("output_decimation must be >= 1")
        if self.ctrl_decimation < 1:
            raise ParameterError("ctrl_decimation must be >= 1")
        if self.control_mode not in (MODE_ENERGY_BALANCING, MODE_HOLISTIC):
            raise ParameterError(f"unknown control mode {self.control_mode!r}")

    def resolve_owpp(self, params: SystemParams) -> SystemParams:
        """Apply the scenario's wind-plant response overrides."""
        h = params.owpp.h_owpp if self.h_owpp is None else self.h_owpp
        d = params.owpp.d_owpp if self.d_owpp is None else self.d_owpp
        return params.with_owpp_response(h, d)


def scenario_preset(name: str, **overrides) -> Scenario:
    """Canned experiment definitions: droop-only 'fcr' or inertia-only 'inertia'."""
    if name == "fcr":
        base = dict(h_owpp=0.0, d_owpp=20.0, t_end=30.0)
    elif name == "inertia":
        base = dict(h_owpp=4.0, d_owpp=0.0, t_end=60.0)
    else:
        raise ParameterError(f"unknown scenario preset {name!r}")
    base.update(overrides)
    return Scenario(**base)


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled run output: every state plus every derived channel."""

    t: np.ndarray
    channels: dict[str, np.ndarray]
    control_mode: str
    scenario: Scenario
    h_owpp: float  # effective wind-plant response used in the run
    d_owpp: float

    def column(self, name: str) -> np.ndarray:
        return self.channels[name]

    def tail_mean(self, name: str, frac: float = 0.1) -> float:
        """Mean of a channel over the final ``frac`` of the horizon."""
        t0 = self.t[-1] - frac * self.t[-1]
        return float(np.mean(self.channels[name][self.t >= t0]))


def _arcsin_angle(p: float, u1: float, u2: float, x: float, link: str) -> float:
    arg = p * x / (u1 * u2)
    if abs(arg) > 1.0:
        raise TransferCapabilityError(
            f"{link} link cannot carry {p} p.u. (|sin| argument {arg:.3f} > 1)")
    return math.asin(arg)


def build_context(params: SystemParams, gains: ControllerGains,
                  quasi_static_cir: bool = False) -> tuple[ModelContext, SimState]:
    """Solve the pre-event operating point and freeze it into a run context.

    The onshore terminal sits at its reference; the line current is the fixed
    point of I = P_ref / (U_on + (R_dc + R_cir,off/K_cir) I); the offshore
    terminal rides the ohmic drop above the onshore one. Controller
    integrators are seeded with the steady additive-voltage commands.
    """
    mode = gains.mode
    u_on0 = params.mmc_on.u_dc_ref
    p_ref = params.owpp.p_ref

    r_loss = params.line.r_dc + params.mmc_off.r_cir / params.mmc_off.k_cir
    i_dc = p_ref / u_on0
    converged = False
    for _ in range(100):
        i_new = p_ref / (u_on0 + r_loss * i_dc)
        if abs(i_new - i_dc) < 1e-15:
            i_dc = i_new
            converged = True
            break
        i_dc = i_new
    if not converged:
        raise InitError("line-current fixed point did not converge in 100 iterations")

    u_off0 = u_on0 + params.line.r_dc * i_dc
    icir_on = i_dc / params.mmc_on.k_cir
    icir_off = i_dc / params.mmc_off.k_cir
    usum_on0 = u_on0 - params.mmc_on.r_cir * icir_on
    usum_off0 = u_off0 + params.mmc_off.r_cir * icir_off
    p_ac_on0 = usum_on0 * i_dc
    p_ac_off0 = p_ref

    theta_mmc_on = _arcsin_angle(p_ac_on0, params.mmc_on.u_ac, params.grid.e_sys,
                                 params.grid.x_eq_on, "onshore")
    theta_owpp = _arcsin_angle(p_ac_off0, params.owpp.u_owpp, params.mmc_off.u_ac,
                               params.owpp.x_eq_off, "offshore")

    if mode == MODE_HOLISTIC:
        ref_on = params.mmc_on.u_dc_ref
        ref_off = ref_on  # shared reference; offshore regulates the estimate
    else:
        ref_on = params.mmc_on.u_dc_ref
        ref_off = u_off0  # own terminal incl. the dispatch-induced line drop
    params_eff = replace(params, mmc_off=replace(params.mmc_off, u_dc_ref=ref_off))

    if gains.pi_on.ki <= 0.0 or gains.pi_off.ki <= 0.0:
        raise ParameterError(
            "integral gains must be positive to hold the DC operating point")

    state = SimState(
        theta_sys=0.0, df_sys=0.0, dp_m=0.0,
        theta_mmc_on=theta_mmc_on, theta_mmc_off=0.0,
        w_on=params.mmc_on.w_ref, w_off=params.mmc_off.w_ref,
        u_dc_on=u_on0, u_dc_off=u_off0, i_dc=i_dc,
        i_cir_on=icir_on, i_cir_off=icir_off,
        df_vsg=0.0, theta_owpp=theta_owpp,
        ctrl=ControllerState(
            q_on=usum_on0 / gains.pi_on.ki,
            q_off=usum_off0 / gains.pi_off.ki))

    pvec = pack_params(params_eff, gains, p_ac_on_0=p_ac_on0,
                       ref_on=ref_on, ref_off=ref_off,
                       quasi_static_cir=quasi_static_cir)
    ctx = ModelContext(params=params_eff, gains=gains, pvec=pvec,
                       u_dc_on_0=u_on0, u_dc_off_0=u_off0, i_dc_0=i_dc,
                       p_ac_on_0=p_ac_on0, u_sum0_on_0=usum_on0,
                       u_sum0_off_0=usum_off0)

    residual = np.empty(_core.NSTATE)
    _core.rhs(state.to_vector(), 0.0, pvec, np.zeros(4), False, residual)
    res = float(np.max(np.abs(residual)))
    if res >= 1e-9:
        raise InitError(f"initialized state is not an equilibrium (residual {res:.2e})")

    return ctx, state


def init_steady_state(params: SystemParams, gains: ControllerGains) -> SimState:
    """Pre-event equilibrium of the closed loop (derivative below 1e-9)."""
    _, state = build_context(params, gains)
    return state


_ABORT_LABEL = {_core.ABORT_NONFINITE: "non-finite value",
                _core.ABORT_INVARIANT: "invariant violation"}


def integrate(scenario: Scenario, params: SystemParams,
              gains: ControllerGains) -> Trajectory:
    """Run one disturbance scenario from the self-initialized equilibrium."""
    params_eff = scenario.resolve_owpp(params)
    gains_eff = gains.with_mode(scenario.control_mode)
    ctx, state0 = build_context(params_eff, gains_eff,
                                quasi_static_cir=scenario.quasi_static_cir)

    dt = scenario.dt
    dec = scenario.output_decimation
    n_raw = int(math.ceil(scenario.t_end / dt - 1e-9))
    n_steps = dec * int(math.ceil(n_raw / dec))
    k_switch = int(math.ceil(scenario.t_dstb / dt - 1e-9))
    rows = n_steps // dec + 1

    out_states = np.empty((rows, _core.NSTATE))
    out_derived = np.empty((rows, _core.NDERIVED))
    status, k_abort, idx = _core.integrate_loop(
        state0.to_vector(), ctx.pvec, scenario.dp_dstb, k_switch, n_steps,
        dt, dec, scenario.ctrl_decimation, out_states, out_derived)
    if status != _core.OK:
        name = _core.STATE_NAMES[idx] if idx >= 0 else "?"
        raise SimulationAbort(
            f"{_ABORT_LABEL[status]} in channel {name} at t={k_abort * dt:.6f} s",
            channel=name, time=k_abort * dt)

    t = np.arange(rows) * (dec * dt)
    channels: dict[str, np.ndarray] = {}
    for j, name in enumerate(_core.STATE_NAMES):
        channels[name] = out_states[:, j].copy()
    for j, name in enumerate(_core.DERIVED_NAMES):
        channels[name] = out_derived[:, j].copy()

    return Trajectory(t=t, channels=channels, control_mode=scenario.control_mode,
                      scenario=scenario, h_owpp=params_eff.owpp.h_owpp,
                      d_owpp=params_eff.owpp.d_owpp)
