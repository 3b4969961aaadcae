"""Acceptance gate: ten end-to-end criteria with stated tolerances.

Each test prints one PASS line with its measured quantities; pytest -v plus
these lines form the acceptance report.
"""

import math
import time

import numpy as np
import pytest

from kepfair.colgen import ColGenParams, generate_columns, run_scheme
from kepfair.conic import solve_conic
from kepfair.instance import (
    Caps,
    generate_instance,
    hard_to_match_set,
    preprocess,
)
from kepfair.metrics import pof
from kepfair.plans import (
    Cycle,
    ExchangePlan,
    enumerate_plans,
    plan_value,
    vertex_weight_value,
)
from kepfair.pricing import PricingWeights, solve_pricing
from kepfair.schemes import (
    FairnessConcept,
    RefPoint,
    SchemeKind,
    build_master,
    compute_reference_point,
    pricing_weights,
)

CAPS = Caps(cycle_cap=3, chain_cap=3)
COMBOS = [
    (c, k)
    for c in ("if", "rawls", "aristotle", "nash")
    for k in ("single", "swp", "nswp")
] + [("utilitarian", "single")]


def vertex_probs_from_master(solution, plans, pairs):
    probs = {v: 0.0 for v in pairs}
    for plan in plans:
        p = solution.primal_of(plan.serialize())
        if p > 0:
            for v in plan.covered:
                if v in probs:
                    probs[v] += p
    return probs


def small_instances(count, n_pairs=9, ndd=0.2, density=0.4, start_seed=0):
    """First ``count`` generated instances (<= 12 vertices) with a nonempty
    preprocessed pair set."""
    out, seed = [], start_seed
    while len(out) < count:
        inst = preprocess(generate_instance(n_pairs, ndd, density, seed=seed), CAPS)
        if len(inst.pairs) >= 2:
            out.append((seed, inst))
        seed += 1
    return out


def solve_combo(inst, ctag, ktag, params):
    concept, kind = FairnessConcept(ctag), SchemeKind(ktag)
    hard = hard_to_match_set(inst, 80, CAPS)
    cols = None
    if ktag == "single":
        ref = RefPoint.ZERO
    else:
        ref, cols = compute_reference_point(inst, CAPS, concept, hard, params)
    cg = generate_columns(inst, CAPS, concept, kind, ref, hard, params, columns=cols)
    return concept, kind, ref, hard, cg


class TestCriterion1:
    def test_fig1_utilitarian_and_s2_pof(self, fig1):
        t0 = time.perf_counter()
        unit = PricingWeights(alpha0=0.0, w={v: 1.0 for v in fig1.pairs})
        plan, zeta = solve_pricing(fig1, CAPS, unit)
        optimum = -zeta
        assert abs(optimum - 5.0) <= 1e-9

        s2 = ExchangePlan.deserialize("cycle: v1>v4 | chain: v7>v6>v5")
        s2_pof = pof(vertex_weight_value(s2, unit.w), optimum)
        assert abs(s2_pof - 0.2) <= 1e-9
        elapsed = time.perf_counter() - t0
        assert elapsed < 1.0
        print(f"\nACCEPTANCE 1: PASS  utilitarian={optimum} s2_pof={s2_pof} "
              f"({elapsed:.2f}s)")


class TestCriterion2:
    def test_fig1_single_rawls(self, fig1):
        t0 = time.perf_counter()
        run = run_scheme(fig1, CAPS, FairnessConcept("rawls"), SchemeKind("single"))
        probs = run.lottery.vertex_probabilities(run.inst.pairs)
        t_val = min(probs.values())
        assert t_val == pytest.approx(0.5, abs=1e-6)

        def cycle_mass(verts):
            return sum(
                p for plan, p in run.lottery.support
                if Cycle(verts) in plan.cycles
            )

        c1, c2 = cycle_mass(("v1", "v2", "v3")), cycle_mass(("v1", "v4"))
        assert c1 == pytest.approx(0.5, abs=1e-6)
        assert c2 == pytest.approx(0.5, abs=1e-6)
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0
        print(f"\nACCEPTANCE 2: PASS  T={t_val:.8f} cycle_probs=({c1:.8f}, {c2:.8f}) "
              f"({elapsed:.2f}s)")


class TestCriterion3:
    def test_fig1_single_nash_probabilities(self, fig1):
        t0 = time.perf_counter()
        run = run_scheme(fig1, CAPS, FairnessConcept("nash"), SchemeKind("single"))
        probs = run.lottery.vertex_probabilities(run.inst.pairs)
        expect = {"v1": 1.0, "v2": 2 / 3, "v3": 2 / 3, "v4": 1 / 3, "v5": 1.0, "v6": 1.0}
        worst = max(abs(probs[v] - expect[v]) for v in expect)
        assert worst <= 1e-4
        elapsed = time.perf_counter() - t0
        assert elapsed < 10.0
        print(f"\nACCEPTANCE 3: PASS  max |delta - expected| = {worst:.2e} "
              f"({elapsed:.2f}s)")


@pytest.fixture(scope="module")
def oracle_runs(fig1):
    """Colgen + full-column results for Fig. 1 and 50 small instances,
    shared by criteria 4 and 5.

    tol_price bounds the residual optimality gap at termination, so it must
    sit below the 1e-6 oracle-equivalence tolerance.
    """
    params = ColGenParams(tol_price=1e-8, solver_tol=1e-10)
    runs = []
    pool = [("fig1", preprocess(fig1, CAPS))] + small_instances(50)
    for tag, inst in pool:
        plans = enumerate_plans(inst, CAPS)
        # Distinct plans with the same coverage and value are identical
        # master columns; keeping one copy preserves the optimum exactly and
        # spares the solver hundreds of duplicate columns.
        seen, unique_cols = set(), []
        for p in plans:
            key = (frozenset(p.covered), plan_value(p, inst))
            if key not in seen:
                seen.add(key)
                unique_cols.append(p)
        for ctag, ktag in COMBOS:
            concept, kind, ref, hard, cg = solve_combo(inst, ctag, ktag, params)
            full = solve_conic(
                build_master(unique_cols, concept, kind, ref, hard, inst.pairs, inst),
                tol=1e-9,
            )
            runs.append((tag, inst, plans, concept, kind, ref, hard, cg, full))
    return runs


class TestCriterion4:
    def test_oracle_equivalence(self, oracle_runs):
        worst, worst_tag = 0.0, None
        for tag, _, _, concept, kind, _, _, cg, full in oracle_runs:
            assert cg.converged, f"{tag} {concept.tag}x{kind.tag} did not converge"
            gap = abs(cg.objective - full.objective)
            if gap > worst:
                worst, worst_tag = gap, f"{tag}:{concept.tag}x{kind.tag}"
            assert gap <= 1e-6, f"{tag} {concept.tag}x{kind.tag} gap={gap:.2e}"
        print(f"\nACCEPTANCE 4: PASS  {len(oracle_runs)} runs on 51 instances, "
              f"worst gap {worst:.2e} at {worst_tag}")


class TestCriterion5:
    def test_reduced_cost_certification(self, oracle_runs):
        worst = 0.0
        for tag, inst, plans, concept, kind, _, hard, cg, _ in oracle_runs:
            pw = pricing_weights(concept, cg.solution, hard, inst.pairs)
            for plan in plans:
                zeta = pw.alpha0 - vertex_weight_value(plan, pw.w)
                worst = min(worst, zeta) if zeta < worst else worst
                assert zeta >= -1e-6, (
                    f"{tag} {concept.tag}x{kind.tag}: plan {plan.serialize()!r} "
                    f"violates pricing optimality by {-zeta:.2e}"
                )
        print(f"\nACCEPTANCE 5: PASS  exhaustive scan at every termination, "
              f"most negative reduced cost {worst:.2e}")


class TestCriterion6:
    def test_proportional_fairness(self, fig1):
        inst = preprocess(fig1, CAPS)
        plans = enumerate_plans(inst, CAPS)
        hard = hard_to_match_set(inst, 80, CAPS)
        sol = solve_conic(
            build_master(plans, FairnessConcept("nash"), SchemeKind("single"),
                         RefPoint.ZERO, hard, inst.pairs, inst),
            tol=1e-10,
        )
        star = vertex_probs_from_master(sol, plans, inst.pairs)
        rng = np.random.default_rng(42)
        worst = -math.inf
        for _ in range(1000):
            mix = rng.dirichlet(np.ones(len(plans)))
            alt = {v: 0.0 for v in inst.pairs}
            for plan, p in zip(plans, mix):
                for v in plan.covered:
                    if v in alt:
                        alt[v] += p
            slack = sum((alt[v] - star[v]) / star[v] for v in inst.pairs)
            worst = max(worst, slack)
            assert slack <= 1e-6
        print(f"\nACCEPTANCE 6: PASS  1000 sampled vectors, max slack {worst:.2e}")


class TestCriterion7:
    def test_nswp_scale_invariance(self, fig1):
        params = ColGenParams()
        cases = [("fig1", preprocess(fig1, CAPS))] + small_instances(5, start_seed=100)
        worst = 0.0
        for tag, inst in cases:
            plans = enumerate_plans(inst, CAPS)
            for ctag in ("if", "rawls", "aristotle", "nash"):
                concept, kind = FairnessConcept(ctag), SchemeKind("nswp")
                hard = hard_to_match_set(inst, 80, CAPS)
                ref, _ = compute_reference_point(inst, CAPS, concept, hard, params)
                probs = []
                for scale in (1.0, 10.0):
                    sol = solve_conic(
                        build_master(plans, concept, kind, ref, hard, inst.pairs,
                                     inst, fairness_scale=scale),
                        tol=1e-9,
                    )
                    probs.append(vertex_probs_from_master(sol, plans, inst.pairs))
                diff = max(abs(probs[0][v] - probs[1][v]) for v in inst.pairs)
                worst = max(worst, diff)
                assert diff <= 1e-5, f"{tag} {ctag}: delta moved {diff:.2e}"
        print(f"\nACCEPTANCE 7: PASS  x10 fairness rescaling moved delta by "
              f"at most {worst:.2e}")


class TestCriterion8:
    def test_section7_trends(self):
        params = ColGenParams()
        pof_by = {key: [] for key in
                  ("if-single", "if-swp", "if-nswp",
                   "nash-single", "nash-swp", "nash-nswp", "util")}
        for seed in range(10):
            inst = generate_instance(32, 0.1, 0.15, seed=seed)
            work = preprocess(inst, CAPS)
            unit = PricingWeights(alpha0=0.0, w={v: 1.0 for v in work.pairs})
            _, zeta = solve_pricing(work, CAPS, unit)
            i1 = -zeta
            for ctag, ktag in [("if", "single"), ("if", "swp"), ("if", "nswp"),
                               ("nash", "single"), ("nash", "swp"), ("nash", "nswp"),
                               ("utilitarian", "single")]:
                run = run_scheme(inst, CAPS, FairnessConcept(ctag),
                                 SchemeKind(ktag), params)
                p = pof(run.lottery.expected_value(run.inst), i1)
                key = "util" if ctag == "utilitarian" else f"{ctag}-{ktag}"
                pof_by[key].append(p)

        mean = {k: sum(v) / len(v) for k, v in pof_by.items()}
        assert mean["if-single"] > mean["if-swp"]
        assert mean["if-single"] > mean["if-nswp"]
        nash_mean = (
            sum(pof_by["nash-single"] + pof_by["nash-swp"] + pof_by["nash-nswp"])
            / (3 * 10)
        )
        assert nash_mean <= 0.05
        assert all(abs(p) <= 1e-8 for p in pof_by["util"])
        print(f"\nACCEPTANCE 8: PASS  mean POF: IFxSingle={mean['if-single']:.3f} "
              f"IFxSWP={mean['if-swp']:.3f} IFxNSWP={mean['if-nswp']:.3f} "
              f"Nash(avg)={nash_mean:.4f} Util={max(mean['util'], 0):.1e}")


class TestCriterion9:
    def test_scalability_nswp_rawls_64(self):
        inst = generate_instance(64, 0.10, 0.10, seed=11)
        t0 = time.perf_counter()
        run = run_scheme(
            inst, CAPS, FairnessConcept("rawls"), SchemeKind("nswp"),
            ColGenParams(time_limit_s=600),
        )
        elapsed = time.perf_counter() - t0
        assert run.result.converged
        assert elapsed < 600.0
        print(f"\nACCEPTANCE 9: PASS  |P|=64 NSWPxRawls converged in {elapsed:.0f}s "
              f"({run.result.iterations} iterations, "
              f"{len(run.result.columns)} columns)")


class TestCriterion10:
    def test_pricing_vs_brute_force(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for g, (_, inst) in enumerate(small_instances(20, n_pairs=7, density=0.45,
                                                      start_seed=200)):
            plans = enumerate_plans(inst, CAPS)
            for _ in range(100):
                w = {v: float(rng.uniform(-1.0, 2.0)) for v in inst.pairs}
                pw = PricingWeights(alpha0=0.0, w=w)
                _, zeta = solve_pricing(inst, CAPS, pw)
                brute = max(vertex_weight_value(p, w) for p in plans)
                diff = abs(-zeta - brute)
                worst = max(worst, diff)
                assert diff <= 1e-9
        print(f"\nACCEPTANCE 10: PASS  2000 weight vectors on 20 graphs, "
              f"max value gap {worst:.2e}")
