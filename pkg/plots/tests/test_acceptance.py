"""Secondary acceptance: render the comparison-command outputs end to end.

The simulator is driven through its command-line interface only; its package
internals are imported in exactly one place, to cross-check that the locally
recomputed requirement channel matches the metrics definition to 1e-12.
"""

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from hvdcplots import PlotSpec, render
from hvdcplots.render import load_run, requirement_channel


@pytest.fixture(scope="module")
def compare_outputs(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("compare")
    proc = subprocess.run(
        [sys.executable, "-m", "hvdcsim.cli", "compare", "--out", str(out)],
        capture_output=True, text=True, timeout=600)
    assert proc.returncode == 0, proc.stderr
    return out


RUN_KEYS = ("energy_balancing_fcr", "holistic_fcr",
            "energy_balancing_inertia", "holistic_inertia")


def test_renders_all_three_panels_from_compare(compare_outputs, tmp_path):
    fcr = [str(compare_outputs / f"metrics_{k}.json") for k in RUN_KEYS[:2]]
    inertia = [str(compare_outputs / f"metrics_{k}.json") for k in RUN_KEYS[2:]]
    for name, paths in (("fcr", fcr), ("inertia", inertia)):
        out = render(PlotSpec(metrics_paths=tuple(paths), panels=("a", "b", "c"),
                              out_path=str(tmp_path / f"{name}.png"),
                              labels=("energy-balancing", "holistic")))
        assert out.exists() and out.stat().st_size > 0
    print("ACCEPTANCE PASS plots: both comparison figures rendered, 3 panels each")


def test_deterministic_bytes_for_fixed_inputs(compare_outputs, tmp_path):
    paths = tuple(str(compare_outputs / f"metrics_{k}.json") for k in RUN_KEYS[:2])
    blobs = []
    for name in ("a.png", "b.png"):
        out = render(PlotSpec(metrics_paths=paths, out_path=str(tmp_path / name)))
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]
    print("ACCEPTANCE PASS plots: byte-identical renders for fixed inputs")


def test_requirement_channel_matches_metrics_definition(compare_outputs):
    from hvdcsim.analysis import requirement_channel as metrics_requirement

    worst = 0.0
    for key in RUN_KEYS:
        run = load_run(compare_outputs / f"metrics_{key}.json")
        ours = requirement_channel(run.t, run.columns["f_sys"],
                                   run.h_owpp, run.d_owpp)
        theirs = metrics_requirement(run.t, run.columns["f_sys"],
                                     run.h_owpp, run.d_owpp)
        worst = max(worst, float(np.abs(ours - theirs).max()))
    assert worst <= 1e-12
    print(f"ACCEPTANCE PASS plots: requirement channel agreement {worst:.2e}")
