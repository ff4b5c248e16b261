import json
import math
from pathlib import Path

import pytest

CSV_COLUMNS = ("t", "f_sys", "f_off_mmc", "f_vsg", "U_dc_on", "U_dc_off",
               "U_hat_dc_on", "I_dc", "W_on", "W_off", "P_ac_on", "P_ac_off",
               "P_owpp", "P_m", "U_sum0_on", "U_sum0_off")


def synthetic_run(directory: Path, name: str, *, wiggle: float = 0.0,
                  n: int = 501, dt: float = 0.02, h_owpp: float = 0.0,
                  d_owpp: float = 20.0, drop_column: str | None = None) -> Path:
    """Write a schema-valid trajectory CSV + metrics JSON pair.

    ``wiggle = 0`` produces a flat no-event run; a non-zero value adds a
    deterministic decaying oscillation to the frequency and power channels.
    """
    directory.mkdir(parents=True, exist_ok=True)
    csv_name = f"{name}.csv"
    columns = [c for c in CSV_COLUMNS if c != drop_column]
    lines = [",".join(columns)]
    for k in range(n):
        t = k * dt
        df = -wiggle * (1.0 - math.exp(-t)) * (1.0 + 0.2 * math.sin(3.0 * t))
        row = {
            "t": t, "f_sys": 1.0 + df, "f_off_mmc": 1.0 + 0.9 * df,
            "f_vsg": 1.0 + 0.9 * df, "U_dc_on": 1.0 + df, "U_dc_off": 1.008 + df,
            "U_hat_dc_on": 1.0 + df, "I_dc": 0.8 - 20.0 * df * 0.9,
            "W_on": 1.0 + df, "W_off": 1.0 + 0.9 * df, "P_ac_on": 0.79 - 20.0 * df,
            "P_ac_off": 0.8 - 20.0 * df, "P_owpp": -20.0 * 0.9 * df,
            "P_m": -df / 0.05, "U_sum0_on": 0.987, "U_sum0_off": 1.021,
        }
        lines.append(",".join(f"{row[c]:.9g}" for c in columns))
    (directory / csv_name).write_text("\n".join(lines) + "\n")

    payload = {
        "control_mode": name,
        "scenario": {"dp_dstb": 0.1 if wiggle else 0.0, "t_dstb": 1.0,
                     "t_end": (n - 1) * dt, "dt": dt, "output_decimation": 1,
                     "h_owpp": h_owpp, "d_owpp": d_owpp},
        "k_1": 1.0, "k_2": 1.0,
        "df_on_ss": -wiggle, "df_off_ss": -0.9 * wiggle,
        "trajectory_csv": csv_name,
        "metrics": {},
    }
    mpath = directory / f"metrics_{name}.json"
    mpath.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return mpath


@pytest.fixture()
def flat_run(tmp_path):
    return synthetic_run(tmp_path, "flat", wiggle=0.0)


@pytest.fixture()
def wiggly_run(tmp_path):
    return synthetic_run(tmp_path, "wiggly", wiggle=0.003)
