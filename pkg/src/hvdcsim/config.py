"""Strict TOML configuration: every key is known, every unknown key is fatal.

Resolution order for one run: package defaults, then the scenario preset
(``--scenario`` flag or ``[scenario].name``), then explicit file values, then
the ``--control`` flag. The fully resolved state can be serialized back to
TOML; re-running from that file reproduces the run exactly.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .controllers import (
    MODE_ENERGY_BALANCING,
    MODE_HOLISTIC,
    ControllerGains,
    PdGains,
    PiGains,
    table_gains,
)
from .errors import ConfigError, ParameterError
from .params import (
    Bases,
    HvdcLineParams,
    MmcParams,
    OnshoreGridParams,
    OwppParams,
    SystemParams,
)
from .solver import Scenario, scenario_preset

_GAIN_KEYS = ("p1", "d1", "p2", "d2", "p5", "i1", "p3", "d3", "p4", "d4",
              "p6", "i2", "tau_d")

# schema nodes: set = table of scalar keys; dict = nested table; None = scalar
_SCHEMA = {
    "bases": {"f_0", "s_base_mva"},
    "grid": {"h_sys", "d_sys", "r_droop", "t_gov", "e_sys", "x_eq_on"},
    "mmc": {"on": {"r_arm", "l_arm", "k_cir", "w_ref", "u_ac", "u_dc_ref"},
            "off": {"r_arm", "l_arm", "k_cir", "w_ref", "u_ac", "u_dc_ref"}},
    "line": {"r_dc", "l_dc", "c_dc"},
    "owpp": {"h_owpp", "d_owpp", "u_owpp", "x_eq_off", "p_ref"},
    "control": {"mode": None,
                "energy_balancing": set(_GAIN_KEYS),
                "holistic": set(_GAIN_KEYS)},
    "scenario": {"name", "dp_dstb", "t_dstb", "t_end", "dt",
                 "output_decimation", "ctrl_decimation", "quasi_static_cir",
                 "h_owpp", "d_owpp"},
}


def _check_keys(data: dict, schema, path: str = "") -> None:
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if isinstance(schema, set):
            if key not in schema:
                raise ConfigError(f"unknown config key {where!r}")
            continue
        if key not in schema:
            raise ConfigError(f"unknown config key {where!r}")
        sub = schema[key]
        if sub is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"config key {where!r} must be a table")
        _check_keys(value, sub, where)


def _check_leaf_types(data: dict, path: str = "") -> None:
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if isinstance(value, dict):
            _check_leaf_types(value, where)
        elif isinstance(value, bool):
            continue
        elif isinstance(value, (int, float, str)):
            continue
        else:
            raise ConfigError(f"config key {where!r} has unsupported type "
                              f"{type(value).__name__}")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved inputs of one simulation run."""

    params: SystemParams
    gains: ControllerGains
    scenario: Scenario

    @property
    def control_mode(self) -> str:
        return self.scenario.control_mode


def _gains_from_section(sec: dict, mode: str) -> ControllerGains:
    base = table_gains(mode)
    tau = float(sec.get("tau_d", base.pd_freq_on.tau_d))

    def pd(pkey, dkey, default):
        return PdGains(p=float(sec.get(pkey, default.p)),
                       d=float(sec.get(dkey, default.d)), tau_d=tau)

    return ControllerGains(
        mode=mode,
        pd_freq_on=pd("p1", "d1", base.pd_freq_on),
        pd_udc_on=pd("p2", "d2", base.pd_udc_on),
        pi_on=PiGains(kp=float(sec.get("p5", base.pi_on.kp)),
                      ki=float(sec.get("i1", base.pi_on.ki))),
        pd_freq_off=pd("p3", "d3", base.pd_freq_off),
        pd_udc_off=pd("p4", "d4", base.pd_udc_off),
        pi_off=PiGains(kp=float(sec.get("p6", base.pi_off.kp)),
                       ki=float(sec.get("i2", base.pi_off.ki))),
    )


def load_config(path: str | Path | None = None,
                control: str | None = None,
                scenario_name: str | None = None) -> RunConfig:
    """Build a RunConfig from an optional TOML file plus CLI selectors."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config parse error in {path}: {exc}") from exc
    _check_keys(data, _SCHEMA)
    _check_leaf_types(data)

    try:
        params = SystemParams(
            bases=Bases(**data.get("bases", {})),
            grid=OnshoreGridParams(**data.get("grid", {})),
            mmc_on=MmcParams(**data.get("mmc", {}).get("on", {})),
            mmc_off=MmcParams(**data.get("mmc", {}).get("off", {})),
            line=HvdcLineParams(**data.get("line", {})),
            owpp=OwppParams(**data.get("owpp", {})),
        )
    except TypeError as exc:
        raise ConfigError(f"bad parameter section: {exc}") from exc

    ctrl_sec = data.get("control", {})
    mode = control or ctrl_sec.get("mode") or MODE_HOLISTIC
    if mode not in (MODE_ENERGY_BALANCING, MODE_HOLISTIC):
        raise ConfigError(f"unknown control mode {mode!r}")
    gains = _gains_from_section(ctrl_sec.get(mode, {}), mode)

    scen_sec = dict(data.get("scenario", {}))
    preset = scenario_name or scen_sec.pop("name", None)
    scen_kwargs = {k: v for k, v in scen_sec.items()}
    scen_kwargs["control_mode"] = mode
    try:
        if preset is not None:
            scenario = scenario_preset(preset, **scen_kwargs)
        else:
            scenario = Scenario(**scen_kwargs)
    except (TypeError, ParameterError) as exc:
        raise ConfigError(f"bad scenario section: {exc}") from exc

    return RunConfig(params=params, gains=gains, scenario=scenario)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    return repr(float(v)) if isinstance(v, float) else str(v)


def dump_config(cfg: RunConfig) -> str:
    """Serialize the effective configuration back to TOML."""
    p, g, s = cfg.params, cfg.gains, cfg.scenario
    lines: list[str] = []

    def section(name: str, pairs: list[tuple[str, object]]):
        lines.append(f"[{name}]")
        for k, v in pairs:
            lines.append(f"{k} = {_fmt(v)}")
        lines.append("")

    section("bases", [("f_0", p.bases.f_0), ("s_base_mva", p.bases.s_base_mva)])
    section("grid", [("h_sys", p.grid.h_sys), ("d_sys", p.grid.d_sys),
                     ("r_droop", p.grid.r_droop), ("t_gov", p.grid.t_gov),
                     ("e_sys", p.grid.e_sys), ("x_eq_on", p.grid.x_eq_on)])
    for side, mmc in (("on", p.mmc_on), ("off", p.mmc_off)):
        section(f"mmc.{side}", [("r_arm", mmc.r_arm), ("l_arm", mmc.l_arm),
                                ("k_cir", mmc.k_cir), ("w_ref", mmc.w_ref),
                                ("u_ac", mmc.u_ac), ("u_dc_ref", mmc.u_dc_ref)])
    section("line", [("r_dc", p.line.r_dc), ("l_dc", p.line.l_dc),
                     ("c_dc", p.line.c_dc)])
    section("owpp", [("h_owpp", p.owpp.h_owpp), ("d_owpp", p.owpp.d_owpp),
                     ("u_owpp", p.owpp.u_owpp), ("x_eq_off", p.owpp.x_eq_off),
                     ("p_ref", p.owpp.p_ref)])
    section("control", [("mode", g.mode)])
    section(f"control.{g.mode}", [
        ("p1", g.pd_freq_on.p), ("d1", g.pd_freq_on.d),
        ("p2", g.pd_udc_on.p), ("d2", g.pd_udc_on.d),
        ("p5", g.pi_on.kp), ("i1", g.pi_on.ki),
        ("p3", g.pd_freq_off.p), ("d3", g.pd_freq_off.d),
        ("p4", g.pd_udc_off.p), ("d4", g.pd_udc_off.d),
        ("p6", g.pi_off.kp), ("i2", g.pi_off.ki),
        ("tau_d", g.pd_freq_on.tau_d)])
    scen_pairs: list[tuple[str, object]] = [
        ("dp_dstb", s.dp_dstb), ("t_dstb", s.t_dstb), ("t_end", s.t_end),
        ("dt", s.dt), ("output_decimation", s.output_decimation),
        ("ctrl_decimation", s.ctrl_decimation),
        ("quasi_static_cir", s.quasi_static_cir)]
    if s.h_owpp is not None:
        scen_pairs.append(("h_owpp", s.h_owpp))
    if s.d_owpp is not None:
        scen_pairs.append(("d_owpp", s.d_owpp))
    section("scenario", scen_pairs)
    return "\n".join(lines)
