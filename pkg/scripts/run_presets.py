"""Run all four presets through the CLI and collect their outputs in one folder."""
import argparse
import sys

from sidyn.cli import run_cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="preset_runs")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    codes = {}
    for key in "ABCD":
        codes[key] = run_cli(["scenario", key, "--out", args.out, "--svg", "--workers", str(args.workers)])
    for key, code in codes.items():
        print(f"{key}: exit {code}")
    with open(f"{args.out}/check_report.txt", "w", encoding="utf-8") as fh:
        saved, sys.stdout = sys.stdout, fh
        try:
            run_cli(["check"])
        finally:
            sys.stdout = saved


if __name__ == "__main__":
    main()
