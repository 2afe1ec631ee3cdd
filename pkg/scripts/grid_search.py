"""Grid search over training settings for one simulation design.

Scores each configuration by mean selection rate over several simulation seeds
(not the seed used by the acceptance tests) and prints one line per config.

    python scripts/grid_search.py --design cauchy_regression --n 500 --p 500 \
        --seeds 1 2 3 --reps 2 --latent-dim 1 3 --lam 0.1 1 --scale rank
"""

import argparse
import itertools
import time

import numpy as np

from deepfs.neuralnet import TrainConfig
from deepfs.simlab import SimSpec, run_simulation


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--design", required=True)
    ap.add_argument("--n", type=int, required=True)
    ap.add_argument("--p", type=int, required=True)
    ap.add_argument("--rho", type=float, default=0.0)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--reps", type=int, default=2)
    ap.add_argument("--latent-dim", type=int, nargs="+", default=[1, 3, 5])
    ap.add_argument("--lam", type=float, nargs="+", default=[1.0])
    ap.add_argument("--epochs", type=int, nargs="+", default=[100])
    ap.add_argument("--lr", type=float, nargs="+", default=[1e-3])
    ap.add_argument("--activation", nargs="+", default=["relu"])
    ap.add_argument("--hidden", type=int, nargs="+", default=[0],
                    help="single hidden width; 0 uses the default")
    ap.add_argument("--scale", nargs="+", default=["zscore"])
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    grid = itertools.product(args.latent_dim, args.lam, args.epochs, args.lr,
                             args.activation, args.hidden, args.scale)
    for h, lam, epochs, lr, act, hidden, scale in grid:
        cfg = TrainConfig(epochs=epochs, lr=lr, lam=lam, latent_dim=h, activation=act,
                          hidden=(hidden,) if hidden else None)
        t0 = time.time()
        per_seed = []
        for seed in args.seeds:
            spec = SimSpec(args.design, args.n, args.p, args.rho, seed)
            rates, _ = run_simulation(spec, args.reps, cfg, scale=scale, workers=args.workers)
            per_seed.append(rates.mean())
        print(f"h={h} lam={lam} epochs={epochs} lr={lr} act={act} hidden={hidden or 'default'} "
              f"scale={scale} per_seed={np.round(per_seed, 3).tolist()} "
              f"mean={np.mean(per_seed):.3f} ({time.time() - t0:.0f}s)", flush=True)


if __name__ == "__main__":
    main()
