"""Write the imaging, GHZ-vs-local, two-qubit and enhancement sweeps as CSV files."""

import argparse
import sys

from qsnet.cli import main as cli

SWEEPS = [
    ["table", "gns-g", "--sweep", "d_prime=1:20:1"],
    ["table", "imaging", "--sweep", "d_prime=1:12:1", "--param", "N=24"],
    ["table", "ghz-local", "--sweep", "d=1:10:1"],
    ["table", "appendix-e", "--sweep", "x=-0.95:0.95:0.01", "--param", "alpha=0.3927", "--param", "beta=0"],
    ["table", "enhancement", "--sweep", "t=0:1:0.05"],
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    args = ap.parse_args(argv)
    for sweep in SWEEPS:
        code = cli(["--out", args.out] + sweep)
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
