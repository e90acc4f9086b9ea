"""Final active fraction under +1/-1 edge weights.

Weights are +1 with probability z and -1 otherwise, every threshold is 2.
Started well above the critical size, the cascade stops at a fraction
close to the probability that a node's running weight sum ever reaches 2.

    python scripts/signed_weights.py --n 1e6 --dbar 200 --runs 5
"""
import argparse

import numpy as np

from bootperc.criticality import critical_gnp
from bootperc.engine import run_node_process
from bootperc.graphs import ErImplicit
from bootperc.influence import DiscreteDistribution, InfluenceSpec, activation_profile
from bootperc.planfile import parse_count


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", default="1e6")
    ap.add_argument("--dbar", type=float, default=200.0)
    ap.add_argument("--z", type=float, nargs="+", default=[0.4, 0.45, 0.5, 0.6])
    ap.add_argument("--factor", type=float, default=10.0, help="seeds as a multiple of a_c")
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    n = parse_count(args.n)
    p = args.dbar / n

    print("z,a,q_infinity,mean_fraction,stddev")
    for z in args.z:
        spec = InfluenceSpec(DiscreteDistribution.constant(2),
                             DiscreteDistribution.from_atoms([(1, z), (-1, 1 - z)]))
        q_inf = activation_profile(spec).q_infinity
        a = min(n, int(round(args.factor * critical_gnp(n, p, spec).a_c)))
        fr = [run_node_process(ErImplicit(n, p), a, spec,
                               np.random.default_rng([args.seed, i])).final_active / n
              for i in range(args.runs)]
        print(f"{z},{a},{q_inf:.5f},{np.mean(fr):.5f},{np.std(fr, ddof=1) if len(fr) > 1 else 0:.5f}")


if __name__ == "__main__":
    main()
