"""Obs(T) = 1 vs 2 on the three reference toral maps; writes one JSON file per matrix."""

import argparse
from pathlib import Path

from expobs.embedding import observability_number_experiment
from expobs.io import write_json

MATRICES = {
    "cat": [[2, 1], [1, 1]],
    "doubling": [[2, 0], [0, 2]],
    "anosov-endo": [[3, 1], [1, 1]],
}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--mesh", type=float, default=1 / 32)
    p.add_argument("--horizon", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="results/dichotomy")
    args = p.parse_args()
    out = Path(args.out_dir)
    for name, A in MATRICES.items():
        exp = observability_number_experiment(A, args.mesh, args.horizon, args.seed)
        write_json(exp.to_dict(), out / f"{name}.json")
        margins = {m: v.margin for m, v in exp.verdicts.items()}
        print(f"{name:12s} {exp.classification.value:15s} Obs = {exp.observability_number}  margins {margins}")


if __name__ == "__main__":
    main()
