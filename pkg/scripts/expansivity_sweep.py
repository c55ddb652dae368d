"""Expansivity and strict-precision estimates of z -> kz over a (mesh, horizon) grid."""

import argparse
from pathlib import Path

from expobs.io import write_table
from expobs.observable import CoordinateEmbedding
from expobs.torus import SystemDescriptor
from expobs.verify import EpsilonNet, expansivity_constant_estimate, strict_precision_estimate


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--meshes", default="8,16,32,64,128", help="denominators N of mesh 1/N")
    p.add_argument("--horizons", default="0,2,4,6,8,10")
    p.add_argument("--out", default="results/expansivity_sweep.csv")
    args = p.parse_args()
    system = SystemDescriptor.circle_power(args.k)
    f = CoordinateEmbedding(1)
    rows = []
    for N in (int(v) for v in args.meshes.split(",")):
        net = EpsilonNet(1, 1 / N)
        for h in (int(v) for v in args.horizons.split(",")):
            row = (N, h, expansivity_constant_estimate(system, net, h), strict_precision_estimate(f, system, net, h))
            rows.append(row)
            print("N=%-4d h=%-3d expansivity %.6f  precision %.6f" % row)
    write_table(Path(args.out), ["mesh_denominator", "horizon", "expansivity", "strict_precision"], rows)


if __name__ == "__main__":
    main()
