"""Mean final size over seed count below the critical size.

Measures A*/a on G(n, p) with threshold r at a = alpha * a_c and prints the
predicted ratio next to it.

    python scripts/subcritical_ratio.py --alpha 0.25 0.5 0.75
"""
import argparse

from bootperc.criticality import critical_gnp, rate_constants
from bootperc.graphs import ErImplicit
from bootperc.harness import SweepPlan, run_sweep
from bootperc.influence import InfluenceSpec
from bootperc.planfile import parse_count


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", default="1e5")
    ap.add_argument("--dbar", type=float, default=20.0)
    ap.add_argument("--r", type=int, default=2)
    ap.add_argument("--alpha", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--runs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=44)
    args = ap.parse_args(argv)
    n = parse_count(args.n)
    p = args.dbar / n
    spec = InfluenceSpec.basic(args.r)
    a_c = critical_gnp(n, p, spec).a_c

    print("alpha,a,measured_ratio,predicted_ratio")
    for alpha in args.alpha:
        a = int(alpha * a_c)
        res = run_sweep(SweepPlan(ErImplicit(n, p), (a,), influence=spec, runs=args.runs, master_seed=args.seed))
        want = rate_constants(args.r, alpha).subcritical_ratio
        print(f"{alpha},{a},{res.finals.mean() / a:.4f},{want:.4f}")


if __name__ == "__main__":
    main()
