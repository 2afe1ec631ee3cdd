"""Write one replication of a simulation design to CSV plus a truth file.

    python scripts/make_dataset.py --design sim4 --n 100 --p 200 --seed 3 --out data/

Produces ``data.csv`` (leading ``y`` column unless the design is
unsupervised, then ``x1..xp``) and ``truth.txt`` (1-based active columns).
"""

import argparse
import os

from deepfs.cli import DESIGN_ALIASES
from deepfs.simlab import SimSpec, generate, write_dataset


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--design", required=True,
                    help="snp_classification, cauchy_regression, two_class_gaussian or sim1/sim2/sim4")
    ap.add_argument("--n", type=int, required=True, help="rows (per class for sim4)")
    ap.add_argument("--p", type=int, required=True)
    ap.add_argument("--rho", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--replication", type=int, default=0)
    ap.add_argument("--keep-labels", action="store_true",
                    help="write the class column for the two-class design too")
    ap.add_argument("--out", default="data")
    args = ap.parse_args()

    design = DESIGN_ALIASES.get(args.design, args.design)
    ds = generate(SimSpec(design, args.n, args.p, args.rho, args.seed), args.replication)
    if ds.supervision == "none" and not args.keep_labels:
        ds.y = None
    os.makedirs(args.out, exist_ok=True)
    write_dataset(ds, os.path.join(args.out, "data.csv"), os.path.join(args.out, "truth.txt"))
    print(f"wrote {ds.X.shape[0]}x{ds.X.shape[1]} {design} data to {args.out}")


if __name__ == "__main__":
    main()
