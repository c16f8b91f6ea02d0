#!/usr/bin/env python3
"""Trend of the implied constant (MC left side over the C=1 right side) of the
truncated maximal moment bound, across grid sizes and dependence structures.

Whether the implied constant stays bounded in (m, n) for the negatively
correlated Gaussian copula with q >= 2 is an open empirical question: this
script reports the numbers, it asserts nothing.

Usage:
  python scripts/implied_constant_trend.py [--reps 400] [--max-exp 5] [--out -]
"""

import argparse
import sys

from dyadicfields import (
    DependenceSpec,
    FieldModel,
    MarginalSpec,
    TruncationLadder,
    WeightScheme,
    rosenthal_lhs_mc,
    rosenthal_rhs,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=400)
    parser.add_argument("--max-exp", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--q", type=float, default=2.0)
    parser.add_argument("--out", default="-", help="CSV path or - for stdout")
    args = parser.parse_args()

    marginal = MarginalSpec.discrete_table([0.0, 1.0], [0.5, 0.5])
    structures = {
        "iid": DependenceSpec.iid(),
        "copula_neg": DependenceSpec.gaussian_copula_negative(-0.1, radius=1),
        "moving_avg": DependenceSpec.moving_average(2),
    }
    scheme = WeightScheme(p=2.0, alpha=1.0, q=args.q)
    ladder = TruncationLadder.power(1.0)

    lines = ["dependence,m,n,lhs,lhs_ci_low,lhs_ci_high,rhs,implied_constant"]
    for name, dep in structures.items():
        model = FieldModel(marginal=marginal, dependence=dep)
        for k in range(1, args.max_exp + 1):
            rhs = rosenthal_rhs(model, k, k, scheme, ladder)
            lhs = rosenthal_lhs_mc(model, k, k, scheme.q, ladder,
                                   reps=args.reps, seed=args.seed)
            lo, hi = lhs.ci
            implied = lhs.mean / rhs if rhs > 0 else float("nan")
            lines.append(f"{name},{k},{k},{lhs.mean!r},{lo!r},{hi!r},{rhs!r},{implied!r}")
            print(f"{name:<11} {2**k:>3}x{2**k:<3} lhs={lhs.mean:12.4f} "
                  f"rhs={rhs:14.1f} implied={implied:.6f}")
    if args.out != "-":
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
