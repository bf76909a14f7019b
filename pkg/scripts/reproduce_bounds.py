"""Compare every catalog probe's pipeline CRB with its closed form and print a table."""

import argparse
import sys

from qsnet import suites


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args(argv)
    worst = 0.0
    print(f"{'case':45s} {'pipeline':>22s} {'closed form':>22s} {'|diff|':>9s}")
    for label, got, want in suites.pipeline_cases():
        diff = abs(got - want)
        worst = max(worst, diff)
        print(f"{label:45s} {got:22.16g} {want:22.16g} {diff:9.1e}")
    print(f"worst |diff| = {worst:.2e} (tolerance {args.tol:g})")
    return 0 if worst <= args.tol else 1


if __name__ == "__main__":
    sys.exit(main())
