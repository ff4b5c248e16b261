"""Command-line front end: run / compare / steady-state / sweep.

Files written are CSV trajectories (fixed 16-column schema, 9 significant
digits) and JSON metric summaries (full double precision). Batch commands run
their independent scenarios in worker threads; the jitted core releases the
GIL, and every run owns its output files, so results are byte-stable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analysis import (
    ClosedFormInputs,
    OperatingPoint,
    brute_force_steady_state,
    closed_form_fcr,
    closed_form_inertia,
    compute_metrics,
)
from .config import RunConfig, dump_config, load_config
from .controllers import MODE_ENERGY_BALANCING, MODE_HOLISTIC, PdGains
from .errors import (
    ConfigError,
    FormulaDomainError,
    InitError,
    OracleError,
    ParameterError,
    SimulationAbort,
)
from .solver import Scenario, Trajectory, build_context, integrate, scenario_preset

CSV_COLUMNS = ("t", "f_sys", "f_off_mmc", "f_vsg", "U_dc_on", "U_dc_off",
               "U_hat_dc_on", "I_dc", "W_on", "W_off", "P_ac_on", "P_ac_off",
               "P_owpp", "P_m", "U_sum0_on", "U_sum0_off")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIM = 3
EXIT_IO = 4
EXIT_DOMAIN = 5


def _csv_series(traj: Trajectory) -> dict[str, np.ndarray]:
    ch = traj.channels
    return {
        "t": traj.t,
        "f_sys": 1.0 + ch["df_sys"],
        "f_off_mmc": 1.0 + ch["df_off_mmc"],
        "f_vsg": 1.0 + ch["df_vsg"],
        "U_dc_on": ch["U_dc_on"],
        "U_dc_off": ch["U_dc_off"],
        "U_hat_dc_on": ch["U_hat_dc_on"],
        "I_dc": ch["I_dc"],
        "W_on": ch["W_on"],
        "W_off": ch["W_off"],
        "P_ac_on": ch["P_ac_on"],
        "P_ac_off": ch["P_ac_off"],
        "P_owpp": ch["P_owpp"],
        "P_m": ch["dP_m"],
        "U_sum0_on": ch["U_sum0_on"],
        "U_sum0_off": ch["U_sum0_off"],
    }


def write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    series = _csv_series(traj)
    cols = [series[name] for name in CSV_COLUMNS]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for i in range(len(traj.t)):
            fh.write(",".join(f"{col[i]:.9g}" for col in cols) + "\n")


def _run_payload(cfg: RunConfig, traj: Trajectory, csv_name: str) -> dict:
    metrics = compute_metrics(traj, traj.scenario, cfg.params)
    tail = traj.t >= traj.t[-1] - 0.1 * traj.t[-1]
    return {
        "control_mode": traj.control_mode,
        "scenario": {
            "dp_dstb": traj.scenario.dp_dstb,
            "t_dstb": traj.scenario.t_dstb,
            "t_end": traj.scenario.t_end,
            "dt": traj.scenario.dt,
            "output_decimation": traj.scenario.output_decimation,
            "h_owpp": traj.h_owpp,
            "d_owpp": traj.d_owpp,
        },
        "k_1": cfg.gains.k_1,
        "k_2": cfg.gains.k_2,
        "df_on_ss": float(np.mean(traj.column("df_sys")[tail])),
        "df_off_ss": float(np.mean(traj.column("df_off_mmc")[tail])),
        "trajectory_csv": csv_name,
        "metrics": metrics.to_dict(),
    }


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _threads(n_tasks: int) -> int:
    env = os.environ.get("HVDCSIM_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError as exc:
            raise ConfigError(f"HVDCSIM_THREADS must be an integer, got {env!r}") from exc
        return max(1, min(cap, n_tasks))
    return max(1, min(4, n_tasks))


def cmd_run(args) -> int:
    cfg = load_config(args.config, control=args.control, scenario_name=args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    traj = integrate(cfg.scenario, cfg.params, cfg.gains)
    write_trajectory_csv(out / "trajectory.csv", traj)
    payload = _run_payload(cfg, traj, "trajectory.csv")
    _write_json(out / "metrics.json", payload)
    (out / "effective_config.toml").write_text(dump_config(cfg))
    m = compute_metrics(traj, traj.scenario, cfg.params)
    print(f"{traj.control_mode}: {m.one_line()}")
    return EXIT_OK


def cmd_compare(args) -> int:
    matrix = [(mode, scen)
              for mode in (MODE_ENERGY_BALANCING, MODE_HOLISTIC)
              for scen in ("fcr", "inertia")]

    def one(task):
        mode, scen = task
        cfg = load_config(args.config, control=mode, scenario_name=scen)
        traj = integrate(cfg.scenario, cfg.params, cfg.gains)
        return cfg, traj

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=_threads(len(matrix))) as pool:
        results = list(pool.map(one, matrix))

    runs: dict[str, dict] = {}
    for (mode, scen), (cfg, traj) in zip(matrix, results):
        key = f"{mode}_{scen}"
        csv_name = f"trajectory_{key}.csv"
        write_trajectory_csv(out / csv_name, traj)
        payload = _run_payload(cfg, traj, csv_name)
        _write_json(out / f"metrics_{key}.json", payload)
        runs[key] = payload

    def met(key, name):
        return runs[key]["metrics"][name]

    orderings = {
        "fcr_eb_discrepancy_positive":
            met("energy_balancing_fcr", "max_freq_discrepancy_pct") > 0.0,
        "fcr_eb_offshore_deviation_reduced":
            abs(runs["energy_balancing_fcr"]["df_off_ss"])
            < abs(runs["energy_balancing_fcr"]["df_on_ss"]),
        "fcr_holistic_sync_error_smaller":
            met("holistic_fcr", "steady_state_sync_error_pct")
            < met("energy_balancing_fcr", "steady_state_sync_error_pct"),
        "fcr_holistic_tracking_better":
            met("holistic_fcr", "power_tracking_error_pct")
            < met("energy_balancing_fcr", "power_tracking_error_pct"),
        "inertia_discrepancy_below_fcr_eb":
            max(met("energy_balancing_inertia", "max_freq_discrepancy_pct"),
                met("holistic_inertia", "max_freq_discrepancy_pct"))
            < met("energy_balancing_fcr", "max_freq_discrepancy_pct"),
        "inertia_holistic_envelope_not_worse":
            met("holistic_inertia", "oscillation_envelope")
            <= met("energy_balancing_inertia", "oscillation_envelope"),
    }
    _write_json(out / "comparison.json", {"runs": runs, "orderings": orderings})
    for name, ok in orderings.items():
        print(f"ordering {name}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK


def cmd_steady_state(args) -> int:
    cfg = load_config(args.config, control=args.control, scenario_name=args.scenario)
    params = cfg.scenario.resolve_owpp(cfg.params)
    ctx, _ = build_context(params, cfg.gains)
    inputs = ClosedFormInputs(k_1=cfg.gains.k_1, k_2=cfg.gains.k_2,
                              r_dc=params.line.r_dc, d_owpp=params.owpp.d_owpp,
                              op=OperatingPoint.from_context(ctx))
    df_on = args.df_on
    rows = []
    for label, closed_form, mode in (("fcr", closed_form_fcr, "fcr"),
                                     ("inertia", closed_form_inertia, "inertia")):
        cf = closed_form(df_on, inputs)
        oc = brute_force_steady_state(df_on, inputs, mode=mode)
        rows.append((label, cf, oc))
        print(f"closed_form_{label:7s} = {cf: .15e}")
        print(f"oracle_{label:13s} = {oc: .15e}")
        print(f"difference_{label:9s} = {abs(cf - oc):.3e}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "steady_state.json", {
            "df_on": df_on,
            "results": {label: {"closed_form": cf, "oracle": oc,
                                "difference": abs(cf - oc)}
                        for label, cf, oc in rows}})
    return EXIT_OK


_SWEEP_PARAMETERS = ("R_dc", "D_OWPP", "H_OWPP", "P_4")


def _apply_sweep_value(cfg: RunConfig, parameter: str, value: float) -> RunConfig:
    if parameter == "R_dc":
        params = replace(cfg.params, line=replace(cfg.params.line, r_dc=value))
        return replace(cfg, params=params)
    if parameter == "D_OWPP":
        return replace(cfg, scenario=replace(cfg.scenario, d_owpp=value))
    if parameter == "H_OWPP":
        return replace(cfg, scenario=replace(cfg.scenario, h_owpp=value))
    if parameter == "P_4":
        old = cfg.gains.pd_udc_off
        gains = replace(cfg.gains, pd_udc_off=PdGains(p=value, d=old.d, tau_d=old.tau_d))
        return replace(cfg, gains=gains)
    raise ConfigError(f"unknown sweep parameter {parameter!r}; "
                      f"choose one of {', '.join(_SWEEP_PARAMETERS)}")


def cmd_sweep(args) -> int:
    if args.parameter not in _SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {args.parameter!r}; "
                          f"choose one of {', '.join(_SWEEP_PARAMETERS)}")
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad sweep values {args.values!r}: {exc}") from exc
    if not values:
        raise ConfigError("sweep needs a non-empty comma-separated value list")

    base = load_config(args.config, control=args.control, scenario_name=args.scenario)

    def one(value):
        cfg = _apply_sweep_value(base, args.parameter, value)
        traj = integrate(cfg.scenario, cfg.params, cfg.gains)
        m = compute_metrics(traj, traj.scenario, cfg.params)
        tail = traj.t >= traj.t[-1] - 0.1 * traj.t[-1]
        df_on_ss = float(np.mean(traj.column("df_sys")[tail]))
        df_off_ss = float(np.mean(traj.column("df_off_mmc")[tail]))
        return m, df_on_ss, df_off_ss

    with ThreadPoolExecutor(max_workers=_threads(len(values))) as pool:
        results = list(pool.map(one, values))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    metric_names = ("max_freq_discrepancy_pct", "steady_state_sync_error_pct",
                    "power_tracking_error_pct", "frequency_nadir", "max_rocof",
                    "oscillation_envelope")
    with open(out / "sweep.csv", "w", newline="") as fh:
        fh.write("parameter,value," + ",".join(metric_names)
                 + ",df_on_ss,df_off_ss,steady_state_sync_abs\n")
        for value, (m, df_on_ss, df_off_ss) in zip(values, results):
            md = m.to_dict()
            row = [args.parameter, f"{value:.9g}"]
            row += [f"{md[name]:.9g}" for name in metric_names]
            row += [f"{df_on_ss:.9g}", f"{df_off_ss:.9g}",
                    f"{abs(df_on_ss - df_off_ss):.9g}"]
            fh.write(",".join(row) + "\n")
    print(f"swept {args.parameter} over {len(values)} points -> {out / 'sweep.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hvdcsim",
        description="Frequency-response simulation of an HVDC-connected "
                    "offshore wind plant under grid-forming control.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="TOML configuration file")
        p.add_argument("--control", default=None,
                       choices=[MODE_ENERGY_BALANCING, MODE_HOLISTIC])
        p.add_argument("--scenario", default=None, choices=["fcr", "inertia"])

    p_run = sub.add_parser("run", help="run one scenario, write CSV + metrics")
    common(p_run)
    p_run.add_argument("--out", required=True)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare",
                           help="run both control modes on both scenarios")
    common(p_cmp)
    p_cmp.add_argument("--out", required=True)
    p_cmp.set_defaults(func=cmd_compare)

    p_ss = sub.add_parser("steady-state",
                          help="closed forms vs numerical oracle at one df_on")
    common(p_ss)
    p_ss.add_argument("--df-on", type=float, required=True)
    p_ss.add_argument("--out", default=None)
    p_ss.set_defaults(func=cmd_steady_state)

    p_sw = sub.add_parser("sweep", help="run a scenario over a parameter grid")
    common(p_sw)
    p_sw.add_argument("--parameter", required=True)
    p_sw.add_argument("--values", required=True,
                      help="comma-separated grid, e.g. 1e-2,1e-3,1e-4")
    p_sw.add_argument("--out", required=True)
    p_sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationAbort, InitError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM
    except (FormulaDomainError, OracleError) as exc:
        print(f"steady-state domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
