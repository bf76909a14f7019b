"""Random search for probes that beat the proportionally weighted GHZ bound.

Finding nothing is reported as "consistent"; it is evidence, not a proof.
"""

import argparse
import sys

from qsnet import suites


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    res = suites.conjecture_scan(args.trials, args.seed, args.workers)
    print(res.summary())
    for note in res.notes:
        print("  " + note)
    return 0 if res.ok else 1


if __name__ == "__main__":
    sys.exit(main())
