"""Render comparison figures from simulator run outputs.

Input is one to four run summaries (metrics JSON files, each pointing at its
trajectory CSV and carrying the wind-plant response pair of its scenario).
Three panel types mirror the standard comparison layout:

  * frequencies: onshore system frequency and offshore formed frequency;
  * power: wind-plant power deviation against the requirement defined by the
    onshore frequency (droop part plus smoothed inertial part);
  * deviation: wind-plant power deviation minus that requirement.

The requirement channel is recomputed here, from files alone, with the exact
arithmetic the simulator's metrics use, so the two implementations can be
cross-checked to 1e-12. Rendering is deterministic for fixed inputs: fixed
figure geometry, fixed fonts, no timestamps in the output metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

PANELS = ("frequencies", "power", "deviation")
_PANEL_ALIASES = {"a": "frequencies", "b": "power", "c": "deviation"}

_REQUIRED_COLUMNS = ("t", "f_sys", "f_off_mmc", "f_vsg", "U_dc_on", "U_dc_off",
                     "U_hat_dc_on", "I_dc", "W_on", "W_off", "P_ac_on",
                     "P_ac_off", "P_owpp", "P_m", "U_sum0_on", "U_sum0_off")

_LINE_STYLES = ("-", "--", "-.", ":")


class SchemaError(ValueError):
    """An input file does not carry the expected columns or keys."""


class AlignmentError(ValueError):
    """Input runs do not share a common time grid."""


def smoothed_rate(t: np.ndarray, x: np.ndarray, window_s: float = 0.1) -> np.ndarray:
    """Centered moving-average smoothing followed by a centered difference.

    Byte-for-byte the arithmetic used by the simulator's metrics.
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
    """Correct-service power reference: -D*df - 2H*d(df)/dt (smoothed)."""
    df = f_sys - 1.0
    req = -d_owpp * df
    if h_owpp != 0.0:
        req = req - 2.0 * h_owpp * smoothed_rate(t, df, window_s)
    return req


@dataclass(frozen=True)
class RunData:
    """One loaded run: channels plus the scenario response pair."""

    label: str
    t: np.ndarray
    columns: dict[str, np.ndarray]
    h_owpp: float
    d_owpp: float

    @property
    def requirement(self) -> np.ndarray:
        return requirement_channel(self.t, self.columns["f_sys"],
                                   self.h_owpp, self.d_owpp)


@dataclass(frozen=True)
class PlotSpec:
    """What to render: 1-4 run summaries, panel selection, output path."""

    metrics_paths: tuple[str, ...]
    panels: tuple[str, ...] = PANELS
    out_path: str = "figure.png"
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not (1 <= len(self.metrics_paths) <= 4):
            raise SchemaError("between 1 and 4 runs can be overlaid")
        normalized = tuple(_PANEL_ALIASES.get(p, p) for p in self.panels)
        for p in normalized:
            if p not in PANELS:
                raise SchemaError(f"unknown panel {p!r}; choose from "
                                  f"{', '.join(PANELS)} (aliases a, b, c)")
        if not normalized:
            raise SchemaError("at least one panel must be selected")
        object.__setattr__(self, "panels", normalized)
        if self.labels and len(self.labels) != len(self.metrics_paths):
            raise SchemaError("need one label per run when labels are given")


def _load_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    for name in _REQUIRED_COLUMNS:
        if name not in header:
            raise SchemaError(f"column {name!r} missing from {path}")
    if data.shape[1] != len(header):
        raise SchemaError(f"ragged CSV {path}")
    return {name: data[:, i] for i, name in enumerate(header)}


def load_run(metrics_path: str | Path, label: str | None = None) -> RunData:
    """Load one metrics JSON plus the trajectory CSV it references."""
    mpath = Path(metrics_path)
    try:
        payload = json.loads(mpath.read_text())
    except FileNotFoundError:
        raise SchemaError(f"metrics file not found: {mpath}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"metrics file {mpath} is not valid JSON: {exc}") from None
    for key in ("trajectory_csv", "scenario", "control_mode"):
        if key not in payload:
            raise SchemaError(f"key {key!r} missing from {mpath}")
    scenario = payload["scenario"]
    for key in ("h_owpp", "d_owpp"):
        if key not in scenario:
            raise SchemaError(f"scenario key {key!r} missing from {mpath}")
    columns = _load_csv(mpath.parent / payload["trajectory_csv"])
    return RunData(label=label or payload["control_mode"], t=columns["t"],
                   columns=columns, h_owpp=float(scenario["h_owpp"]),
                   d_owpp=float(scenario["d_owpp"]))


def _check_alignment(runs: list[RunData]) -> None:
    t0 = runs[0].t
    for run in runs[1:]:
        if len(run.t) != len(t0) or not np.array_equal(run.t, t0):
            raise AlignmentError(
                f"run {run.label!r} is not on the same time grid as "
                f"{runs[0].label!r} ({len(run.t)} vs {len(t0)} samples)")


def build_figure(spec: PlotSpec):
    """Assemble the figure in memory; one axes per selected panel."""
    runs = [load_run(p, spec.labels[i] if spec.labels else None)
            for i, p in enumerate(spec.metrics_paths)]
    _check_alignment(runs)

    plt.rcParams.update({
        "font.family": "DejaVu Sans",
        "font.size": 9,
        "svg.hashsalt": "hvdcplots",
    })
    n = len(spec.panels)
    fig, axes = plt.subplots(n, 1, figsize=(7.0, 2.4 * n), dpi=110,
                             sharex=True, squeeze=False)
    axes = axes[:, 0]

    for ax, panel in zip(axes, spec.panels):
        for i, run in enumerate(runs):
            style = _LINE_STYLES[i % len(_LINE_STYLES)]
            if panel == "frequencies":
                ax.plot(run.t, run.columns["f_sys"], style,
                        label=f"{run.label}: onshore", linewidth=1.2)
                ax.plot(run.t, run.columns["f_off_mmc"], style,
                        label=f"{run.label}: offshore", linewidth=0.9)
            elif panel == "power":
                ax.plot(run.t, run.columns["P_owpp"], style,
                        label=f"{run.label}: delivered", linewidth=1.2)
                ax.plot(run.t, run.requirement, style,
                        label=f"{run.label}: requirement", linewidth=0.7)
            else:
                ax.plot(run.t, run.columns["P_owpp"] - run.requirement, style,
                        label=run.label, linewidth=1.0)
        ax.set_ylabel({"frequencies": "frequency (p.u.)",
                       "power": "power (p.u.)",
                       "deviation": "deviation (p.u.)"}[panel])
        ax.grid(True, linewidth=0.3, alpha=0.6)
        ax.legend(loc="best", fontsize=7)
    axes[-1].set_xlabel("time (s)")
    fig.tight_layout()
    return fig


def render(spec: PlotSpec) -> Path:
    """Render the figure to the spec's output path (PNG or SVG)."""
    fig = build_figure(spec)
    out = Path(spec.out_path)
    suffix = out.suffix.lower()
    if suffix not in (".png", ".svg"):
        raise SchemaError(f"unsupported image format {suffix!r}; use .png or .svg")
    if suffix == ".svg":
        metadata = {"Date": None, "Creator": "hvdcplots"}
    else:
        metadata = {"Software": "hvdcplots"}
    fig.savefig(out, metadata=metadata)
    plt.close(fig)
    return out
