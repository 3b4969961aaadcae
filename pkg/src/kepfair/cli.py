"""Command-line entry point: solve / oracle / generate / sample.

Defaults mirror the usual experimental regime: caps K = K' = 3, solver
tolerance 1e-8, pricing tolerance 1e-6, one hour per run, PRA threshold 80.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import logging
import pathlib
import sys

from .colgen import ColGenParams, generate_columns, run_scheme, sample_plan
from .conic import export_problem, solve_conic
from .errors import KepError
from .instance import Caps, generate_instance, hard_to_match_set, parse_instance, preprocess, write_instance
from .metrics import build_report, lottery_text, parse_lottery, write_reports_csv
from .plans import enumerate_plans
from .schemes import (
    CONCEPTS,
    FairnessConcept,
    RefPoint,
    SchemeKind,
    build_master,
    compute_reference_point,
)

logger = logging.getLogger("kepfair.cli")


def _concept_kind_pairs(concepts, kinds):
    for ctag in concepts:
        for ktag in kinds:
            if ctag == "utilitarian" and ktag != "single":
                continue  # utilitarian has no fairness axis to trade against
            yield ctag, ktag


def _load_instance(args):
    if args.instance:
        text = pathlib.Path(args.instance).read_text()
        inst = parse_instance(text)
        stem = pathlib.Path(args.instance).stem
    elif args.generate:
        fields = args.generate.split(",")
        if len(fields) != 3:
            raise KepError("--generate needs n,ndd,density")
        n, ndd, density = int(fields[0]), float(fields[1]), float(fields[2])
        inst = generate_instance(n, ndd, density, args.seed)
        stem = f"gen-{n}-{args.seed}"
    else:
        raise KepError("one of --instance or --generate is required")
    return inst, stem


def _params(args):
    return ColGenParams(
        tol_price=args.price_tol,
        solver_tol=args.tol,
        time_limit_s=args.time_limit,
        maximal_only=args.maximal_only,
    )


def _one_solve(inst, stem, ctag, ktag, args, outdir):
    caps = Caps(args.cycle_cap, args.chain_cap)
    concept = FairnessConcept(ctag, args.pra_threshold)
    weights = None
    if args.swp_weights:
        a, b = (float(x) for x in args.swp_weights.split(","))
        weights = (a, b)
    kind = SchemeKind(ktag, weights if ktag == "swp" else None)
    params = _params(args)

    run = run_scheme(inst, caps, concept, kind, params)
    util = run_scheme(
        inst, caps, FairnessConcept("utilitarian"), SchemeKind("single"), params
    )
    report = build_report(run, util.lottery.expected_value(util.inst))

    tag = f"{stem}.{ctag}.{ktag}"
    (outdir / f"{tag}.report.txt").write_text(report.to_text())
    (outdir / f"{tag}.lottery.txt").write_text(lottery_text(run.lottery))

    if args.export_conic:
        master = build_master(
            [plan for plan, _ in run.lottery.support]
            + [p for p in run.result.columns if p.serialize() not in
               {q.serialize() for q, _ in run.lottery.support}],
            concept, kind, run.ref, set(run.hard), run.inst.pairs, run.inst,
        )
        (outdir / f"{tag}.cbf").write_text(export_problem(master))

    oracle_gap = None
    if args.oracle_check:
        plans = enumerate_plans(run.inst, caps)
        full = solve_conic(
            build_master(plans, concept, kind, run.ref, set(run.hard),
                         run.inst.pairs, run.inst),
            tol=args.tol,
        )
        oracle_gap = abs(full.objective - run.result.objective)
    return report, oracle_gap


def cmd_solve(args) -> int:
    inst, stem = _load_instance(args)
    outdir = pathlib.Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    concepts = args.concept.split(",") if args.concept else list(CONCEPTS)
    kinds = args.kind.split(",") if args.kind else ["single", "swp", "nswp"]
    combos = list(_concept_kind_pairs(concepts, kinds))

    reports, failures = [], []

    def work(combo):
        return combo, _one_solve(inst, stem, combo[0], combo[1], args, outdir)

    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_solve_worker, [
                (inst, stem, c, k, args, str(outdir)) for c, k in combos
            ]))
    else:
        results = []
        for combo in combos:
            try:
                _, (report, gap) = work(combo)
                results.append((combo, report, gap, None))
            except KepError as exc:
                results.append((combo, None, None, exc))

    for combo, report, gap, err in results:
        ctag, ktag = combo
        if err is not None:
            print(f"{ctag} x {ktag}: error: {err}", file=sys.stderr)
            failures.append(combo)
            continue
        reports.append(report)
        line = (f"{ctag} x {ktag}: E[tx]={report.expected_transplants:.6f} "
                f"pof={report.pof:.6f} converged={report.converged}")
        if gap is not None:
            line += f" oracle_gap={gap:.2e}"
            if gap > 1e-6:
                failures.append(combo)
        print(line)
        if not report.converged:
            failures.append(combo)

    (outdir / "reports.csv").write_text(write_reports_csv(reports))
    return 1 if failures else 0


def _solve_worker(packed):
    inst, stem, ctag, ktag, args, outdir = packed
    try:
        report, gap = _one_solve(inst, stem, ctag, ktag, args, pathlib.Path(outdir))
        return (ctag, ktag), report, gap, None
    except KepError as exc:
        return (ctag, ktag), None, None, exc


def cmd_oracle(args) -> int:
    inst, _ = _load_instance(args)
    caps = Caps(args.cycle_cap, args.chain_cap)
    params = _params(args)
    work = preprocess(inst, caps)
    plans = enumerate_plans(work, caps)
    print(f"plans: {len(plans)}")
    worst = 0.0
    for ctag, ktag in _concept_kind_pairs(CONCEPTS, ("single", "swp", "nswp")):
        concept = FairnessConcept(ctag, args.pra_threshold)
        kind = SchemeKind(ktag)
        hard = hard_to_match_set(work, concept.pra_threshold, caps)
        cols = None
        if ktag == "single":
            ref = RefPoint.ZERO
        else:
            # warm-start from the probe columns: they certify that the
            # restricted NSWP master is feasible at the reference point
            ref, cols = compute_reference_point(
                work, caps, concept, hard, params, generate_columns
            )
        cg = generate_columns(work, caps, concept, kind, ref, hard, params, columns=cols)
        full = solve_conic(
            build_master(plans, concept, kind, ref, hard, work.pairs, work),
            tol=args.tol,
        )
        gap = abs(full.objective - cg.objective)
        worst = max(worst, gap)
        print(f"{ctag} x {ktag}: colgen={cg.objective:.9f} "
              f"full={full.objective:.9f} gap={gap:.2e}")
    print(f"worst gap: {worst:.2e}")
    return 0 if worst <= 1e-6 else 1


def cmd_generate(args) -> int:
    inst = generate_instance(args.n, args.ndd, args.density, args.seed)
    text = write_instance(inst)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        pathlib.Path(args.out).write_text(text)
    return 0


def cmd_sample(args) -> int:
    lottery = parse_lottery(pathlib.Path(args.report).read_text())
    for k in range(args.draws):
        plan = sample_plan(lottery, args.seed + k)
        print(plan.serialize())
    return 0


def _common_flags(sub):
    sub.add_argument("--instance", help="native instance file")
    sub.add_argument("--generate", help="n,ndd,density generator spec")
    sub.add_argument("--cycle-cap", type=int, default=3)
    sub.add_argument("--chain-cap", type=int, default=3)
    sub.add_argument("--tol", type=float, default=1e-8, help="conic solver tolerance")
    sub.add_argument("--price-tol", type=float, default=1e-6)
    sub.add_argument("--time-limit", type=float, default=3600.0, help="seconds per run")
    sub.add_argument("--pra-threshold", type=int, default=80)
    sub.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kepfair", description="Fair lotteries over kidney-exchange plans."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)

    solve = subs.add_parser("solve", help="run concept x kind schemes")
    _common_flags(solve)
    solve.add_argument("--concept", help="comma list of " + ",".join(CONCEPTS))
    solve.add_argument("--kind", help="comma list of single,swp,nswp")
    solve.add_argument("--swp-weights", help="a,b weight override for SWP")
    solve.add_argument("--maximal-only", action="store_true")
    solve.add_argument("--oracle-check", action="store_true")
    solve.add_argument("--export-conic", action="store_true")
    solve.add_argument("--out", default="out")
    solve.add_argument("--jobs", type=int, default=1)
    solve.set_defaults(func=cmd_solve)

    oracle = subs.add_parser("oracle", help="full-column master vs colgen gaps")
    _common_flags(oracle)
    oracle.add_argument("--maximal-only", action="store_true")
    oracle.set_defaults(func=cmd_oracle)

    gen = subs.add_parser("generate", help="write a random instance")
    gen.add_argument("-n", type=int, required=True)
    gen.add_argument("--ndd", type=float, default=0.1)
    gen.add_argument("--density", type=float, default=0.2)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default="-")
    gen.set_defaults(func=cmd_generate)

    samp = subs.add_parser("sample", help="draw plans from a saved lottery")
    samp.add_argument("--report", required=True, help="lottery file from solve")
    samp.add_argument("--seed", type=int, default=0)
    samp.add_argument("--draws", type=int, default=1)
    samp.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(message)s",
    )
    try:
        return args.func(args)
    except KepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
