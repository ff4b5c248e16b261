#!/usr/bin/env python3
"""Full comparison study: both control stacks on both service scenarios, the
line-resistance synchronism sweep, and the offshore-gain detuning sweep.

Writes everything under results/ (override with --out) and renders the
comparison figures when the plotting package is installed.

Usage:
    python scripts/run_comparison.py [--out results] [--config file.toml]
"""

import argparse
import sys
from pathlib import Path

from hvdcsim.cli import main as hvdcsim_main


def run(argv):
    print("+ hvdcsim " + " ".join(argv))
    rc = hvdcsim_main(argv)
    if rc != 0:
        sys.exit(rc)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--config", default=None)
    args = ap.parse_args()
    out = Path(args.out)
    cfg = ["--config", args.config] if args.config else []

    # 2x2 matrix of control mode x scenario, plus side-by-side metrics
    run(["compare", *cfg, "--out", str(out / "compare")])

    # steady-state frequency gap vs line resistance (inertia delivery)
    run(["sweep", *cfg, "--parameter", "R_dc", "--values", "1e-2,1e-3,1e-4",
         "--control", "energy_balancing", "--scenario", "inertia",
         "--out", str(out / "sweep_r_dc")])

    # detuning the offshore voltage gain away from the synchronizing tuning
    run(["sweep", *cfg, "--parameter", "P_4", "--values", "0.165,0.33,0.66",
         "--control", "holistic", "--scenario", "fcr",
         "--out", str(out / "sweep_p4")])

    try:
        from hvdcplots.cli import main as plot_main
    except ImportError:
        print("hvdcplots not installed; skipping figures "
              "(pip install -e plots/ to enable)")
        return

    cmp_dir = out / "compare"
    for scen in ("fcr", "inertia"):
        argv = [str(cmp_dir / f"metrics_energy_balancing_{scen}.json"),
                str(cmp_dir / f"metrics_holistic_{scen}.json"),
                "--labels", "energy-balancing,holistic",
                "--panels", "a,b,c", "--out", str(out / f"figure_{scen}.png")]
        print("+ plot_results " + " ".join(argv))
        if plot_main(argv) != 0:
            sys.exit(1)


if __name__ == "__main__":
    main()
