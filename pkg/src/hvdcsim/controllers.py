"""Grid-forming control stacks for the two MMC terminals and the wind plant.

Three blocks are implemented:

  * energy-balancing dual-port control: per MMC side, one filtered PD on the
    internal-energy deviation forms the AC frequency, a second PD on the same
    deviation offsets the local DC-voltage reference, and a PI drives the
    zero-sequence additive voltage to regulate the side's own DC terminal;
  * holistic control: identical structure, but both sides share one DC
    voltage reference and the offshore PI regulates an ohmic-drop estimate of
    the *onshore* terminal voltage instead of its own terminal;
  * wind-plant virtual synchronous generator: swing emulation with virtual
    inertia and droop acting on the power exported into the offshore link.

The continuous-time versions of these blocks live inside the jitted system
right-hand side (the filter and integrator states are part of the ODE state);
the discrete steps here use a backward-Euler discretization and back the
sample-and-hold controller option and the block-level tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ParameterError
from .params import Bases, OwppParams, SystemParams

MODE_ENERGY_BALANCING = "energy_balancing"
MODE_HOLISTIC = "holistic"

# Substituted for h_owpp = 0 so the swing stays a (fast) ODE instead of an
# algebraic droop; halving it must not move any reported metric noticeably.
H_OWPP_MIN = 0.01


@dataclass(frozen=True)
class PdGains:
    """Proportional gain plus filtered derivative d*s/(tau_d*s + 1)."""

    p: float
    d: float = 0.0
    tau_d: float = 0.01  # s

    def __post_init__(self):
        if self.d != 0.0 and self.tau_d <= 0.0:
            raise ParameterError("tau_d must be positive when a derivative gain is set")
        if self.tau_d <= 0.0:
            # the filter state is always integrated, so keep the pole real
            raise ParameterError("tau_d must be positive")


@dataclass(frozen=True)
class PiGains:
    kp: float
    ki: float  # 1/s

    def __post_init__(self):
        if self.ki < 0.0:
            raise ParameterError(f"ki must be non-negative, got {self.ki}")


@dataclass(frozen=True)
class ControllerGains:
    """Full gain set for one control mode.

    Onshore blocks: pd_freq_on (P1, D1), pd_udc_on (P2, D2), pi_on (P5, I1).
    Offshore blocks: pd_freq_off (P3, D3), pd_udc_off (P4, D4), pi_off (P6, I2).
    """

    mode: str = MODE_HOLISTIC
    pd_freq_on: PdGains = field(default_factory=lambda: PdGains(p=1.0, d=0.025))
    pd_udc_on: PdGains = field(default_factory=lambda: PdGains(p=1.0, d=0.025))
    pi_on: PiGains = field(default_factory=lambda: PiGains(kp=11.914, ki=2382.9))
    pd_freq_off: PdGains = field(default_factory=lambda: PdGains(p=0.33, d=0.0))
    pd_udc_off: PdGains = field(default_factory=lambda: PdGains(p=0.33, d=0.025))
    pi_off: PiGains = field(default_factory=lambda: PiGains(kp=11.914, ki=2382.9))

    def __post_init__(self):
        if self.mode not in (MODE_ENERGY_BALANCING, MODE_HOLISTIC):
            raise ParameterError(f"unknown control mode {self.mode!r}")
        for name, g in (("P1", self.pd_freq_on.p), ("P3", self.pd_freq_off.p),
                        ("P4", self.pd_udc_off.p)):
            if g == 0.0:
                raise ParameterError(f"{name} must be non-zero")

    @property
    def k_1(self) -> float:
        """Steady gain from onshore frequency deviation to onshore DC voltage deviation."""
        return self.pd_udc_on.p / self.pd_freq_on.p

    @property
    def k_2(self) -> float:
        """Steady gain from offshore DC voltage deviation to offshore frequency deviation."""
        return self.pd_freq_off.p / self.pd_udc_off.p

    @property
    def sync_condition_ok(self) -> bool:
        """True when the proportional gains satisfy the frequency-sync tuning
        P2/P1 = P4/P3 within 1e-9 relative."""
        lhs = self.pd_udc_on.p / self.pd_freq_on.p
        rhs = self.pd_udc_off.p / self.pd_freq_off.p
        return abs(lhs - rhs) <= 1e-9 * max(abs(lhs), abs(rhs))

    def with_mode(self, mode: str) -> "ControllerGains":
        return replace(self, mode=mode)


def table_gains(mode: str = MODE_HOLISTIC) -> ControllerGains:
    """Default gain set (the published tuning) for either control mode.

    The energy-balancing stack reuses the same numbers; the two modes then
    differ only in their DC references and in the offshore feedback signal.
    """
    return ControllerGains(mode=mode)


@dataclass
class ControllerState:
    """Derivative-filter and integrator states of both MMC controllers."""

    z_freq_on: float = 0.0
    z_udc_on: float = 0.0
    q_on: float = 0.0
    z_freq_off: float = 0.0
    z_udc_off: float = 0.0
    q_off: float = 0.0

    def copy(self) -> "ControllerState":
        return ControllerState(self.z_freq_on, self.z_udc_on, self.q_on,
                               self.z_freq_off, self.z_udc_off, self.q_off)


def pd_step(x: float, z: float, gains: PdGains, dt: float) -> tuple[float, float]:
    """One backward-Euler step of the filtered PD block.

    Returns (output, new filter state). Continuous model: zdot = (x - z)/tau,
    y = p*x + d*(x - z)/tau.
    """
    z_new = (gains.tau_d * z + dt * x) / (gains.tau_d + dt)
    y = gains.p * x + gains.d * (x - z_new) / gains.tau_d
    return y, z_new


def pi_step(e: float, q: float, gains: PiGains, dt: float) -> tuple[float, float]:
    """One backward-Euler step of the PI block. Returns (output, new integrator)."""
    q_new = q + dt * e
    return gains.kp * e + gains.ki * q_new, q_new


def estimate_onshore_dc_voltage(u_dc_off: float, i_dc: float, r_dc: float) -> float:
    """Onshore terminal DC voltage as seen from offshore: only the resistive
    line drop is compensated (current taken positive offshore -> onshore)."""
    return u_dc_off - r_dc * i_dc


def _dual_port_step(state, side: str, params: SystemParams, gains: ControllerGains,
                    dt: float, holistic: bool) -> tuple[float, float]:
    """Shared PD/PD/PI step for one MMC side; updates state.ctrl in place."""
    ctrl = state.ctrl
    if side == "on":
        mmc = params.mmc_on
        dw = state.w_on - mmc.w_ref
        f_dev, ctrl.z_freq_on = pd_step(dw, ctrl.z_freq_on, gains.pd_freq_on, dt)
        du_ref, ctrl.z_udc_on = pd_step(dw, ctrl.z_udc_on, gains.pd_udc_on, dt)
        err = (mmc.u_dc_ref + du_ref) - state.u_dc_on
        u_sum0, ctrl.q_on = pi_step(err, ctrl.q_on, gains.pi_on, dt)
    else:
        mmc = params.mmc_off
        dw = state.w_off - mmc.w_ref
        f_dev, ctrl.z_freq_off = pd_step(dw, ctrl.z_freq_off, gains.pd_freq_off, dt)
        du_ref, ctrl.z_udc_off = pd_step(dw, ctrl.z_udc_off, gains.pd_udc_off, dt)
        if holistic:
            feedback = estimate_onshore_dc_voltage(state.u_dc_off, state.i_dc,
                                                   params.line.r_dc)
        else:
            feedback = state.u_dc_off
        err = (mmc.u_dc_ref + du_ref) - feedback
        u_sum0, ctrl.q_off = pi_step(err, ctrl.q_off, gains.pi_off, dt)
    return 1.0 + f_dev, u_sum0


def energy_balancing_step(state, side: str, params: SystemParams,
                          gains: ControllerGains, dt: float) -> tuple[float, float]:
    """Discrete energy-balancing controller step for one side.

    Returns (formed frequency f* in p.u., commanded additive voltage). Each
    side's PI regulates its own DC terminal against its own reference.
    """
    if gains.mode != MODE_ENERGY_BALANCING:
        raise ParameterError("energy_balancing_step requires energy-balancing mode gains")
    return _dual_port_step(state, side, params, gains, dt, holistic=False)


def holistic_step_onshore(state, params: SystemParams, gains: ControllerGains,
                          dt: float) -> tuple[float, float]:
    """Discrete holistic controller step, onshore side (regulates its own terminal)."""
    if gains.mode != MODE_HOLISTIC:
        raise ParameterError("holistic_step_onshore requires holistic mode gains")
    return _dual_port_step(state, "on", params, gains, dt, holistic=True)


def holistic_step_offshore(state, params: SystemParams, gains: ControllerGains,
                           dt: float) -> tuple[float, float]:
    """Discrete holistic controller step, offshore side.

    The PI regulates the estimated onshore terminal voltage against the shared
    reference, which ties the offshore energy (and hence frequency) to the
    onshore voltage deviation through the whole DC line.
    """
    if gains.mode != MODE_HOLISTIC:
        raise ParameterError("holistic_step_offshore requires holistic mode gains")
    return _dual_port_step(state, "off", params, gains, dt, holistic=True)


def effective_h_owpp(owpp: OwppParams) -> float:
    """Virtual inertia actually used by the swing ODE (floored at H_OWPP_MIN)."""
    if owpp.h_owpp == 0.0 and owpp.d_owpp == 0.0:
        raise ParameterError(
            "wind plant response needs h_owpp or d_owpp non-zero")
    return max(owpp.h_owpp, H_OWPP_MIN)


def vsg_derivatives(df_vsg: float, p_out: float, owpp: OwppParams,
                    bases: Bases) -> tuple[float, float]:
    """Continuous virtual-synchronous-generator dynamics of the wind plant.

    2 H d(df)/dt = (P_ref - P_out) - D df, with P_out the power delivered
    into the offshore link; the angle advances at omega_b * df in the
    rotating reference frame. Returns (d df_vsg / dt, d theta_owpp / dt).
    """
    h_eff = effective_h_owpp(owpp)
    d_df = ((owpp.p_ref - p_out) - owpp.d_owpp * df_vsg) / (2.0 * h_eff)
    d_theta = bases.omega_b * df_vsg
    return d_df, d_theta
