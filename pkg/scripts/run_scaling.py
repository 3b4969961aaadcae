#!/usr/bin/env python3
"""Wall-clock scaling of NSWP x Rawls over growing pool sizes.

Usage: run_scaling.py [sizes...]   (default: 16 32 48 64)
"""

import sys
import time

from kepfair import Caps, ColGenParams, FairnessConcept, SchemeKind, generate_instance, run_scheme


def main() -> int:
    sizes = [int(a) for a in sys.argv[1:]] or [16, 32, 48, 64]
    caps = Caps()
    for n in sizes:
        inst = generate_instance(n, 0.10, 0.10, seed=11)
        t0 = time.perf_counter()
        run = run_scheme(
            inst, caps, FairnessConcept("rawls"), SchemeKind("nswp"),
            ColGenParams(time_limit_s=3600),
        )
        dt = time.perf_counter() - t0
        print(f"|P|={n:3d}: {dt:7.1f}s  iterations={run.result.iterations:3d} "
              f"columns={len(run.result.columns):4d} "
              f"converged={run.result.converged}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
