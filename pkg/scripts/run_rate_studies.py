#!/usr/bin/env python3
"""Run all approximation-rate studies and print a summary table.

Usage: python scripts/run_rate_studies.py [--out results/rates] [--with-2d]
"""

import argparse
from pathlib import Path

from able import verify
from able.cli import main as cli_main


def run(args):
    studies = [
        ("step", verify.fourier_step_truncation_study, -0.5),
        ("partition", verify.able_partition_approximation_study, -1.0),
        ("joint", verify.joint_truncation_partition_study, -0.5),
    ]
    if args.with_2d:
        studies.append(("radial2d", verify.radial_step_partition_study_2d, -0.5))

    print(f"{'study':<12} {'slope':>8} {'CI':>20} {'expected':>9}")
    for name, fn, expected in studies:
        result = fn()
        lo, hi = result.slope_ci
        print(f"{name:<12} {result.fitted_slope:>8.4f} "
              f"[{lo:>8.4f}, {hi:>8.4f}] {expected:>9.2f}")
        if args.out:
            cli_main(["rate-study", "--study", name,
                      "--out", str(Path(args.out) / name)])


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None, help="directory for CSV/JSON outputs")
    parser.add_argument("--with-2d", action="store_true",
                        help="include the slower 2-D radial study")
    run(parser.parse_args())
