#!/usr/bin/env python3
"""Solve every concept x kind on the bundled 7-vertex example and print a
compact table: expected transplants, POF, fairness value, support size."""

import math
import pathlib
import sys

from kepfair import Caps, FairnessConcept, SchemeKind, parse_instance, run_scheme
from kepfair.metrics import build_report

HERE = pathlib.Path(__file__).resolve().parent
INSTANCE = HERE.parent / "tests" / "data" / "fig1.kep"

COMBOS = [
    (c, k)
    for c in ("utilitarian", "if", "rawls", "aristotle", "nash")
    for k in ("single", "swp", "nswp")
    if not (c == "utilitarian" and k != "single")
]


def main() -> int:
    inst = parse_instance(INSTANCE.read_text())
    caps = Caps()
    util = run_scheme(inst, caps, FairnessConcept("utilitarian"), SchemeKind("single"))
    i1 = util.lottery.expected_value(util.inst)

    print(f"{'scheme':24s} {'E[tx]':>8s} {'POF':>8s} {'fairness':>10s} {'support':>8s}")
    for ctag, ktag in COMBOS:
        run = run_scheme(inst, caps, FairnessConcept(ctag), SchemeKind(ktag))
        rep = build_report(run, i1)
        fair = "-inf" if rep.fairness == -math.inf else f"{rep.fairness:10.4f}"
        print(f"{ctag + ' x ' + ktag:24s} {rep.expected_transplants:8.4f} "
              f"{rep.pof:8.4f} {fair:>10s} {rep.support_size:8d}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
