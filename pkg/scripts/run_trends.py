#!/usr/bin/env python3
"""Price-of-fairness trends over generated 32-pair instances.

For each seed, runs the IF and Nash concepts under all three scheme kinds and
prints per-scheme mean POF, reproducing the qualitative ordering
POF(single) > POF(swp), POF(nswp) for IF and the near-zero POF of Nash.

Usage: run_trends.py [n_instances] [n_pairs]
"""

import sys
from collections import defaultdict

from kepfair import Caps, FairnessConcept, SchemeKind, generate_instance, run_scheme
from kepfair.instance import preprocess
from kepfair.metrics import pof
from kepfair.pricing import PricingWeights, solve_pricing


def main() -> int:
    n_instances = int(sys.argv[1]) if len(sys.argv) > 1 else 10
    n_pairs = int(sys.argv[2]) if len(sys.argv) > 2 else 32
    caps = Caps()
    pofs = defaultdict(list)

    for seed in range(n_instances):
        inst = generate_instance(n_pairs, 0.1, 0.15, seed=seed)
        work = preprocess(inst, caps)
        unit = PricingWeights(alpha0=0.0, w={v: 1.0 for v in work.pairs})
        _, zeta = solve_pricing(work, caps, unit)
        i1 = -zeta
        for ctag in ("if", "nash"):
            for ktag in ("single", "swp", "nswp"):
                run = run_scheme(inst, caps, FairnessConcept(ctag), SchemeKind(ktag))
                p = pof(run.lottery.expected_value(run.inst), i1)
                pofs[f"{ctag} x {ktag}"].append(p)
                print(f"seed={seed} {ctag} x {ktag}: pof={p:.4f}", flush=True)

    print("\nmean POF over", n_instances, "instances:")
    for key, vals in pofs.items():
        print(f"  {key:16s} {sum(vals) / len(vals):.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
