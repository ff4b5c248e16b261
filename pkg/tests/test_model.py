"""Block-level model equations and the composed closed-loop derivative."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hvdcsim import (
    Bases,
    ControllerGains,
    MODE_ENERGY_BALANCING,
    MODE_HOLISTIC,
    OnshoreGridParams,
    PdGains,
    PiGains,
    SimState,
    SystemParams,
    table_gains,
)
from hvdcsim import _core
from hvdcsim.errors import ParameterError
from hvdcsim.model import (
    ac_power_transfer,
    assemble_derivative,
    compute_derived,
    dc_network_derivatives,
    mmc_energy_derivative,
    swing_derivatives,
)
from hvdcsim.solver import build_context

# frozen independent evaluation (40-digit arithmetic) of the sine formula
AC_POWER_PIN = 0.3326449442672314

st_voltage = st.floats(0.1, 2.0)
st_reactance = st.floats(0.01, 5.0)
st_angle = st.floats(-math.pi, math.pi)
st_power = st.floats(-2.0, 2.0)


class TestAcPowerTransfer:
    def test_half_sine(self):
        assert ac_power_transfer(1.0, 1.0, 0.5, math.pi / 6, 0.0) == pytest.approx(
            1.0, abs=1e-15)

    def test_zero_angle_difference(self):
        assert ac_power_transfer(1.0, 1.0, 0.3, 0.0, 0.0) == 0.0

    def test_regression_pin(self):
        got = ac_power_transfer(1.02, 0.98, 0.3, 0.15, 0.05)
        assert got == pytest.approx(AC_POWER_PIN, rel=1e-15)

    @pytest.mark.parametrize("bad_x", [0.0, -0.3])
    def test_invalid_reactance(self, bad_x):
        with pytest.raises(ParameterError):
            ac_power_transfer(1.0, 1.0, bad_x, 0.1, 0.0)

    @given(u1=st_voltage, u2=st_voltage, x=st_reactance, a=st_angle, b=st_angle)
    def test_antisymmetry(self, u1, u2, x, a, b):
        p1 = ac_power_transfer(u1, u2, x, a, b)
        p2 = ac_power_transfer(u2, u1, x, b, a)
        assert abs(p1 + p2) <= 1e-15 * (1.0 + abs(p1))


class TestSwingDerivatives:
    def test_equilibrium(self):
        grid, bases = OnshoreGridParams(), Bases()
        assert swing_derivatives(SimState(), 0.0, 0.0, grid, bases) == (0.0, 0.0, 0.0)

    def test_disturbance_only(self):
        # load step 0.1 on a 4 s machine: acceleration is -0.1/8
        grid, bases = OnshoreGridParams(h_sys=4.0), Bases()
        _, d_df, _ = swing_derivatives(SimState(), 0.0, 0.1, grid, bases)
        assert d_df == pytest.approx(-0.0125, rel=1e-15)

    def test_general_composition(self):
        grid, bases = OnshoreGridParams(d_sys=0.7), Bases()
        st_ = SimState(df_sys=0.002, dp_m=-0.01)
        d_th, d_df, d_pm = swing_derivatives(st_, 0.03, 0.1, grid, bases)
        assert d_th == pytest.approx(bases.omega_b * 0.002, rel=1e-15)
        assert d_df == pytest.approx(
            (-0.01 - (0.1 - 0.03) - 0.7 * 0.002) / 8.0, rel=1e-14)
        assert d_pm == pytest.approx((-0.002 / 0.05 + 0.01) / 0.5, rel=1e-14)


class TestMmcEnergyDerivative:
    @pytest.mark.parametrize("side", ["on", "off"])
    def test_balanced(self, side):
        assert mmc_energy_derivative(0.5, 0.5, side) == 0.0

    def test_onshore_surplus_dc_charges(self):
        assert mmc_energy_derivative(0.5, 0.6, "on") == pytest.approx(0.1, abs=1e-15)

    def test_offshore_surplus_ac_charges(self):
        assert mmc_energy_derivative(0.6, 0.5, "off") == pytest.approx(0.1, abs=1e-15)

    def test_bad_side(self):
        with pytest.raises(ParameterError):
            mmc_energy_derivative(0.1, 0.1, "onshore")

    @given(p=st_power, side=st.sampled_from(["on", "off"]))
    def test_exact_conservation(self, p, side):
        assert mmc_energy_derivative(p, p, side) == 0.0


class TestDcNetworkDerivatives:
    def test_all_zero(self, default_params):
        p = default_params
        state = SimState(u_dc_on=0.0, u_dc_off=0.0, i_dc=0.0,
                         i_cir_on=0.0, i_cir_off=0.0)
        derivs = dc_network_derivatives(state, 0.0, 0.0, p.mmc_on, p.mmc_off,
                                        p.line, p.bases)
        assert derivs == (0.0, 0.0, 0.0, 0.0, 0.0)

    def test_constructed_steady_state(self, default_params):
        # consistent levels: equal currents, ohmic drops everywhere
        p = default_params
        i = 0.6
        u_on = 1.0
        u_off = u_on + p.line.r_dc * i
        icir = i / p.mmc_on.k_cir
        usum_on = u_on - p.mmc_on.r_cir * icir
        usum_off = u_off + p.mmc_off.r_cir * icir
        state = SimState(u_dc_on=u_on, u_dc_off=u_off, i_dc=i,
                         i_cir_on=icir, i_cir_off=icir)
        derivs = dc_network_derivatives(state, usum_on, usum_off, p.mmc_on,
                                        p.mmc_off, p.line, p.bases)
        assert np.max(np.abs(derivs)) < 1e-10

    def test_line_equation(self, default_params):
        p = default_params
        state = SimState(u_dc_on=0.99, u_dc_off=1.02, i_dc=0.5)
        _, _, d_i_dc, _, _ = dc_network_derivatives(
            state, 1.0, 1.0, p.mmc_on, p.mmc_off, p.line, p.bases)
        expected = p.bases.omega_b / p.line.l_dc * (1.02 - 0.99 - p.line.r_dc * 0.5)
        assert d_i_dc == pytest.approx(expected, rel=1e-14)


def _rhs_vec(ctx, state, dp=0.0):
    out = np.empty(_core.NSTATE)
    _core.rhs(state.to_vector(), dp, ctx.pvec, np.zeros(4), False, out)
    return out


class TestAssembleDerivative:
    @pytest.mark.parametrize("mode", [MODE_ENERGY_BALANCING, MODE_HOLISTIC])
    def test_equilibrium_residual(self, default_params, mode):
        params = default_params.with_owpp_response(0.0, 20.0)
        ctx, state = build_context(params, table_gains(mode))
        d = assemble_derivative(state, 0.0, ctx)
        assert np.max(np.abs(d)) < 1e-9

    def test_disturbance_jump(self, default_params, eb_gains):
        params = default_params.with_owpp_response(0.0, 20.0)
        ctx, state = build_context(params, eb_gains)
        d0 = assemble_derivative(state, 0.0, ctx, dp_dstb=0.0)
        d1 = assemble_derivative(state, 0.0, ctx, dp_dstb=0.1)
        jump = d1 - d0
        expected = np.zeros(_core.NSTATE)
        expected[_core.IX_DF_SYS] = -0.1 / (2.0 * params.grid.h_sys)
        assert np.allclose(jump, expected, rtol=0, atol=1e-16)

    def test_matches_component_operations(self, default_params, eb_gains):
        """The fused core must agree with the public block functions."""
        params = default_params.with_owpp_response(0.0, 20.0)
        ctx, state0 = build_context(params, eb_gains)
        rng = np.random.default_rng(7)
        y = state0.to_vector() + rng.normal(scale=1e-3, size=_core.NSTATE)
        state = SimState.from_vector(y)
        d = _rhs_vec(ctx, state, dp=0.05)
        der = compute_derived(state, ctx)

        p_ac_on = ac_power_transfer(params.mmc_on.u_ac, params.grid.e_sys,
                                    params.grid.x_eq_on, state.theta_mmc_on,
                                    state.theta_sys)
        d_th, d_df, d_pm = swing_derivatives(
            state, p_ac_on - ctx.p_ac_on_0, 0.05, params.grid, params.bases)
        assert d[_core.IX_TH_SYS] == pytest.approx(d_th, rel=1e-12)
        assert d[_core.IX_DF_SYS] == pytest.approx(d_df, rel=1e-12)
        assert d[_core.IX_DP_M] == pytest.approx(d_pm, rel=1e-12)

        assert d[_core.IX_W_ON] == pytest.approx(
            mmc_energy_derivative(der.p_ac_on, der.p_dc_on, "on"), rel=1e-12)
        assert d[_core.IX_W_OFF] == pytest.approx(
            mmc_energy_derivative(der.p_ac_off, der.p_dc_off, "off"), rel=1e-12)

        du_on, du_off, di, dc_on, dc_off = dc_network_derivatives(
            state, der.u_sum0_on, der.u_sum0_off, ctx.params.mmc_on,
            ctx.params.mmc_off, ctx.params.line, ctx.params.bases)
        assert d[_core.IX_U_ON] == pytest.approx(du_on, rel=1e-12)
        assert d[_core.IX_U_OFF] == pytest.approx(du_off, rel=1e-12)
        assert d[_core.IX_I_DC] == pytest.approx(di, rel=1e-12)
        assert d[_core.IX_ICIR_ON] == pytest.approx(dc_on, rel=1e-12)
        assert d[_core.IX_ICIR_OFF] == pytest.approx(dc_off, rel=1e-12)

    def test_lossless_link_single_formula(self, default_params, eb_gains):
        # the wind-plant output deviation IS the offshore link power minus the
        # dispatch, evaluated once
        params = default_params.with_owpp_response(0.0, 20.0)
        ctx, state0 = build_context(params, eb_gains)
        rng = np.random.default_rng(3)
        state = SimState.from_vector(
            state0.to_vector() + rng.normal(scale=1e-3, size=_core.NSTATE))
        der = compute_derived(state, ctx)
        assert der.p_owpp == der.p_ac_off - params.owpp.p_ref


def _expected_adjacency(mode: str, d_sys_nonzero: bool) -> set[tuple[int, int]]:
    c = _core
    adj = {
        c.IX_TH_SYS: {c.IX_DF_SYS},
        c.IX_DF_SYS: {c.IX_DP_M, c.IX_TH_ON, c.IX_TH_SYS},
        c.IX_DP_M: {c.IX_DF_SYS, c.IX_DP_M},
        c.IX_TH_ON: {c.IX_W_ON, c.IX_Z_F_ON},
        c.IX_TH_OFF: {c.IX_W_OFF, c.IX_Z_F_OFF},
        c.IX_W_ON: {c.IX_TH_ON, c.IX_TH_SYS, c.IX_W_ON, c.IX_Z_U_ON,
                    c.IX_U_ON, c.IX_Q_ON, c.IX_ICIR_ON},
        c.IX_W_OFF: {c.IX_TH_OWPP, c.IX_TH_OFF, c.IX_W_OFF, c.IX_Z_U_OFF,
                     c.IX_U_OFF, c.IX_Q_OFF, c.IX_ICIR_OFF},
        c.IX_U_ON: {c.IX_I_DC, c.IX_ICIR_ON},
        c.IX_U_OFF: {c.IX_ICIR_OFF, c.IX_I_DC},
        c.IX_I_DC: {c.IX_U_OFF, c.IX_U_ON, c.IX_I_DC},
        c.IX_ICIR_ON: {c.IX_U_ON, c.IX_W_ON, c.IX_Z_U_ON, c.IX_Q_ON,
                       c.IX_ICIR_ON},
        c.IX_ICIR_OFF: {c.IX_W_OFF, c.IX_Z_U_OFF, c.IX_U_OFF, c.IX_Q_OFF,
                        c.IX_ICIR_OFF},
        c.IX_DF_VSG: {c.IX_TH_OWPP, c.IX_TH_OFF, c.IX_DF_VSG},
        c.IX_TH_OWPP: {c.IX_DF_VSG},
        c.IX_Z_F_ON: {c.IX_W_ON, c.IX_Z_F_ON},
        c.IX_Z_U_ON: {c.IX_W_ON, c.IX_Z_U_ON},
        c.IX_Q_ON: {c.IX_W_ON, c.IX_Z_U_ON, c.IX_U_ON},
        c.IX_Z_F_OFF: {c.IX_W_OFF, c.IX_Z_F_OFF},
        c.IX_Z_U_OFF: {c.IX_W_OFF, c.IX_Z_U_OFF},
        c.IX_Q_OFF: {c.IX_W_OFF, c.IX_Z_U_OFF, c.IX_U_OFF},
    }
    if d_sys_nonzero:
        adj[c.IX_DF_SYS] = adj[c.IX_DF_SYS] | {c.IX_DF_SYS}
    if mode == MODE_HOLISTIC:
        # the offshore regulator watches the far terminal through the line
        for row in (c.IX_W_OFF, c.IX_ICIR_OFF, c.IX_Q_OFF):
            adj[row] = adj[row] | {c.IX_I_DC}
    return {(i, j) for i, cols in adj.items() for j in cols}


@pytest.mark.parametrize("mode", [MODE_ENERGY_BALANCING, MODE_HOLISTIC])
def test_jacobian_sparsity_matches_block_diagram(mode):
    """Finite-difference Jacobian nonzero pattern equals the declared coupling
    structure of the block diagram (all derivative gains active)."""
    gains = ControllerGains(
        mode=mode,
        pd_freq_on=PdGains(p=1.0, d=0.025), pd_udc_on=PdGains(p=1.0, d=0.025),
        pi_on=PiGains(kp=11.914, ki=2382.9),
        pd_freq_off=PdGains(p=0.33, d=0.025), pd_udc_off=PdGains(p=0.33, d=0.025),
        pi_off=PiGains(kp=11.914, ki=2382.9))
    params = SystemParams(grid=OnshoreGridParams(d_sys=0.4))
    params = params.with_owpp_response(2.0, 5.0)
    ctx, state0 = build_context(params, gains)

    rng = np.random.default_rng(11)
    y0 = state0.to_vector() + rng.uniform(0.01, 0.03, size=_core.NSTATE)
    n = _core.NSTATE
    J = np.zeros((n, n))
    out_p, out_m, cmd = np.empty(n), np.empty(n), np.zeros(4)
    for j in range(n):
        yp, ym = y0.copy(), y0.copy()
        h = 1e-6 * max(1.0, abs(y0[j]))
        yp[j] += h
        ym[j] -= h
        _core.rhs(yp, 0.0, ctx.pvec, cmd, False, out_p)
        _core.rhs(ym, 0.0, ctx.pvec, cmd, False, out_m)
        J[:, j] = (out_p - out_m) / (2.0 * h)

    pattern = {(i, j) for i in range(n) for j in range(n) if abs(J[i, j]) > 1e-9}
    assert pattern == _expected_adjacency(mode, d_sys_nonzero=True)
