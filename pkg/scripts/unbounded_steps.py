"""Minimal separating step of the flat-arc observable against the distance 2^-k to the fixed point."""

import argparse
from pathlib import Path

from expobs.embedding import unbounded_steps_experiment
from expobs.io import write_table


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--eps", type=float, default=0.3, help="flat-arc length in radians")
    p.add_argument("--k-max", type=int, default=20)
    p.add_argument("--out", default="results/unbounded_steps.csv")
    args = p.parse_args()
    rows = unbounded_steps_experiment(args.eps, args.k_max)
    write_table(Path(args.out), ["k", "step"], rows)
    for k, step in rows:
        print(f"{k:3d} {step}")


if __name__ == "__main__":
    main()
