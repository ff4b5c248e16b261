"""Closed-form steady-state relations between onshore and offshore frequency
deviations, an independent numerical oracle for them, and the scenario
figures of merit.

The closed forms come from the quasi-static balance between the line-drop
power deviation at the offshore DC terminal and the wind plant's droop (or
zero, for inertia-only) response, combined with the proportional couplings
frequency <-> energy <-> DC voltage imposed by the dual-port controllers in
steady state. The oracle solves the same simultaneous system by plain
bisection so the algebra of the closed forms is checked against an
independent root, not against itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormulaDomainError, OracleError, ParameterError, SingularFormulaError
from .model import ModelContext
from .params import SystemParams
from .solver import Scenario, Trajectory


@dataclass(frozen=True)
class OperatingPoint:
    """Pre-event DC-side operating point (the 'subscript 0' values)."""

    u_dc_on_0: float
    u_dc_off_0: float
    i_dc_0: float
    p_0: float
    theta_mmc_on_0: float = 0.0
    theta_owpp_0: float = 0.0

    @classmethod
    def from_context(cls, ctx: ModelContext) -> "OperatingPoint":
        op = cls(u_dc_on_0=ctx.u_dc_on_0, u_dc_off_0=ctx.u_dc_off_0,
                 i_dc_0=ctx.i_dc_0, p_0=ctx.params.owpp.p_ref)
        drop = ctx.u_dc_off_0 - ctx.u_dc_on_0 - ctx.params.line.r_dc * ctx.i_dc_0
        if abs(drop) > 1e-12:
            raise ParameterError(f"operating point violates the line drop law by {drop:.2e}")
        return op


@dataclass(frozen=True)
class ClosedFormInputs:
    """Everything the steady-state frequency relations depend on."""

    k_1: float          # onshore frequency -> DC voltage proportional gain
    k_2: float          # offshore DC voltage -> frequency proportional gain
    r_dc: float
    d_owpp: float
    op: OperatingPoint

    def beta_1(self, df_on: float) -> float:
        """Linear coefficient of the droop-response quadratic."""
        return (-self.k_1 * df_on + self.k_2 * self.r_dc * self.d_owpp
                + 2.0 * self.op.u_dc_off_0 - self.op.u_dc_on_0)

    def beta_2(self, df_on: float) -> float:
        """Same coefficient with the droop term removed (inertia-only case)."""
        return -self.k_1 * df_on + 2.0 * self.op.u_dc_off_0 - self.op.u_dc_on_0


def offshore_power_deviation(u_on_prime: float, u_off_prime: float,
                             op: OperatingPoint, r_dc: float) -> float:
    """Change of the power injected at the offshore DC terminal when the two
    terminal voltages move from the operating point to the primed values,
    holding the resistive line law and ignoring converter-loss variation."""
    if r_dc <= 0.0:
        raise SingularFormulaError(f"closed form singular at r_dc = {r_dc}")
    return (u_off_prime * (u_off_prime - u_on_prime)
            - op.u_dc_off_0 * (op.u_dc_off_0 - op.u_dc_on_0)) / r_dc


def _quadratic_root(df_on: float, beta: float, inputs: ClosedFormInputs) -> float:
    disc = beta * beta + 4.0 * inputs.k_1 * df_on * inputs.op.u_dc_off_0
    if disc < 0.0:
        raise FormulaDomainError(
            f"negative discriminant {disc:.3e} (df_on={df_on}, beta={beta})")
    return inputs.k_2 * (-beta + math.sqrt(disc)) / 2.0


def closed_form_fcr(df_on: float, inputs: ClosedFormInputs) -> float:
    """Steady-state offshore frequency deviation during droop (FCR) delivery."""
    if inputs.r_dc <= 0.0:
        raise SingularFormulaError(f"closed form singular at r_dc = {inputs.r_dc}")
    if inputs.d_owpp <= 0.0:
        raise FormulaDomainError("droop response requires d_owpp > 0")
    return _quadratic_root(df_on, inputs.beta_1(df_on), inputs)


def closed_form_inertia(df_on: float, inputs: ClosedFormInputs) -> float:
    """Quasi-static offshore frequency deviation for inertia-only delivery
    (zero net steady power from the wind plant)."""
    if inputs.r_dc <= 0.0:
        raise SingularFormulaError(f"closed form singular at r_dc = {inputs.r_dc}")
    return _quadratic_root(df_on, inputs.beta_2(df_on), inputs)


def brute_force_steady_state(df_on: float, inputs: ClosedFormInputs,
                             mode: str = "fcr", bracket: float = 0.1) -> float:
    """Bisection root of the simultaneous steady-state system.

    The system couples the proportional controller relations (onshore voltage
    from df_on, offshore voltage from the unknown df_off), the line-drop power
    deviation, and the wind-plant response (droop, or zero power for
    inertia-only). Kept deliberately independent of the closed forms: only the
    raw balance equation is evaluated here.
    """
    if inputs.r_dc <= 0.0:
        raise SingularFormulaError(f"oracle system singular at r_dc = {inputs.r_dc}")
    if mode not in ("fcr", "inertia"):
        raise ParameterError(f"mode must be 'fcr' or 'inertia', got {mode!r}")

    def residual(df_off: float) -> float:
        u_on_prime = inputs.op.u_dc_on_0 + inputs.k_1 * df_on
        u_off_prime = inputs.op.u_dc_off_0 + df_off / inputs.k_2
        dp = offshore_power_deviation(u_on_prime, u_off_prime, inputs.op, inputs.r_dc)
        if mode == "fcr":
            return dp + inputs.d_owpp * df_off
        return dp

    a, b = -bracket, bracket
    fa, fb = residual(a), residual(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise OracleError(
            f"no sign change on [{a}, {b}] (f(a)={fa:.3e}, f(b)={fb:.3e})")
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        fm = residual(mid)
        if fm == 0.0:
            return mid
        if fa * fm < 0.0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def smoothed_rate(t: np.ndarray, x: np.ndarray, window_s: float = 0.1) -> np.ndarray:
    """Centered moving-average smoothing followed by a centered difference.

    The padding repeats the edge samples so a settled signal has zero rate at
    the boundaries.
    """
    dt = t[1] - t[0]
    n = max(1, int(round(window_s / dt)))
    if n % 2 == 0:
        n += 1
    h = n // 2
    xs = np.convolve(np.pad(x, h, mode="edge"), np.ones(n) / n, mode="valid")
    return np.gradient(xs, t)


def requirement_channel(t: np.ndarray, f_sys: np.ndarray, h_owpp: float,
                        d_owpp: float, window_s: float = 0.1) -> np.ndarray:
    """Correct-service power reference defined by the onshore frequency:
    droop part -D*df plus inertial part -2H*d(df)/dt (smoothed rate)."""
    df = f_sys - 1.0
    req = -d_owpp * df
    if h_owpp != 0.0:
        req = req - 2.0 * h_owpp * smoothed_rate(t, df, window_s)
    return req


@dataclass(frozen=True)
class Metrics:
    """Comparison figures of merit for one scenario run."""

    max_freq_discrepancy_pct: float
    steady_state_sync_error_pct: float
    power_tracking_error_pct: float
    frequency_nadir: float
    max_rocof: float
    oscillation_envelope: float

    def to_dict(self) -> dict:
        return {
            "max_freq_discrepancy_pct": self.max_freq_discrepancy_pct,
            "steady_state_sync_error_pct": self.steady_state_sync_error_pct,
            "power_tracking_error_pct": self.power_tracking_error_pct,
            "frequency_nadir": self.frequency_nadir,
            "max_rocof": self.max_rocof,
            "oscillation_envelope": self.oscillation_envelope,
        }

    def one_line(self) -> str:
        return (f"disc={self.max_freq_discrepancy_pct:.3f}% "
                f"sync={self.steady_state_sync_error_pct:.4f}% "
                f"track={self.power_tracking_error_pct:.3f}% "
                f"nadir={self.frequency_nadir:.6f} "
                f"rocof={self.max_rocof:.5f} "
                f"envelope={self.oscillation_envelope:.6f}")


_TINY = 1e-12

# metrics are evaluated on a fixed 1 ms grid so they do not depend on the
# run's output decimation (channels are linearly resampled onto it)
METRIC_GRID_DT = 1e-3


def compute_metrics(traj: Trajectory, scenario: Scenario,
                    params: SystemParams) -> Metrics:
    """Evaluate the comparison metrics on one trajectory.

    Steady-state values are tail averages over the final 10% of the horizon;
    the requirement channel is defined by the onshore frequency and the
    scenario's wind-plant response pair.
    """
    t_raw = traj.t
    if t_raw[-1] - scenario.t_dstb < 10.0:
        raise ParameterError("horizon too short: need >= 10 s after the event")
    owpp = scenario.resolve_owpp(params).owpp

    n = int(math.floor(t_raw[-1] / METRIC_GRID_DT + 1e-9))
    t = np.arange(n + 1) * METRIC_GRID_DT
    df_on = np.interp(t, t_raw, traj.column("df_sys"))
    df_off = np.interp(t, t_raw, traj.column("df_off_mmc"))
    p_owpp = np.interp(t, t_raw, traj.column("P_owpp"))

    amp = float(np.max(np.abs(df_on)))
    if amp < _TINY:
        disc = 0.0
    else:
        disc = 100.0 * float(np.max(np.abs(df_on - df_off))) / amp

    tail = t >= t[-1] - 0.1 * t[-1]
    df_on_ss = float(np.mean(df_on[tail]))
    df_off_ss = float(np.mean(df_off[tail]))
    if abs(df_on_ss) < _TINY:
        sync = 0.0
    else:
        sync = 100.0 * abs(df_off_ss - df_on_ss) / abs(df_on_ss)

    req = requirement_channel(t, 1.0 + df_on, owpp.h_owpp, owpp.d_owpp)
    post = t >= scenario.t_dstb
    req_amp = float(np.max(np.abs(req)))
    if req_amp < _TINY:
        track = 0.0
    else:
        track = 100.0 * float(np.max(np.abs((p_owpp - req)[post]))) / req_amp

    nadir = float(np.min(1.0 + df_on))
    rocof = float(np.max(np.abs(smoothed_rate(t, df_on))))

    window = t > scenario.t_dstb + 2.0
    envelope = float(np.max(np.abs((p_owpp - req)[window]))) if window.any() else 0.0
    if req_amp < _TINY and amp < _TINY:
        envelope = 0.0 if envelope < _TINY else envelope

    return Metrics(max_freq_discrepancy_pct=disc,
                   steady_state_sync_error_pct=sync,
                   power_tracking_error_pct=track,
                   frequency_nadir=nadir,
                   max_rocof=rocof,
                   oscillation_envelope=envelope)
