"""Shadow prices and leverage along the g-triangle family, as CSV.

    python scripts/sweep_leverage.py --steps 71 --out sweep.csv
"""

import argparse
import csv
import sys
import warnings

import numpy as np

from eigenbundle.cli import sweep_rows
from eigenbundle.families import G_MAX
from eigenbundle.market import InteriorityWarning


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=36)
    ap.add_argument("--sign", choices=("complements", "substitutes"), default="complements")
    ap.add_argument("--beta", default="10,10,15", help="comma-separated; enables global columns")
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    beta = [float(x) for x in args.beta.split(",")]
    # global columns need strict definiteness, so stop just short of the boundary
    grid = [round(float(g), 12) for g in np.linspace(0.0, 0.99 * G_MAX, args.steps)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InteriorityWarning)
        rows = sweep_rows(grid, args.sign, beta=beta, cost=[0.0] * len(beta))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.DictWriter(out, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)
    if args.out:
        out.close()


if __name__ == "__main__":
    main()
