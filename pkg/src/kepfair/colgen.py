"""Column generation over the conic masters.

The restricted master is rebuilt and re-solved each round; its duals feed the
pricing subproblem, whose best plan joins the column pool until no plan has a
reduced cost below ``-tol_price``.  The warm start seeds one covering plan per
matchable vertex (required for the Nash master to be feasible) plus the empty
plan, which makes every master trivially feasible.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field

from .conic import ConicSolution, solve_conic
from .errors import StallError, ValidationError, WiringError
from .instance import Caps, Instance, hard_to_match_set, matchable_certificates, preprocess
from .plans import ExchangePlan, maximalize
from .pricing import STRUCTURE_THRESHOLD, solve_pricing
from .schemes import (
    FairnessConcept,
    RefPoint,
    SchemeKind,
    build_master,
    compute_reference_point,
    pricing_weights,
)

logger = logging.getLogger("kepfair.colgen")

SUPPORT_TOL = 1e-9


@dataclass(frozen=True)
class ColGenParams:
    tol_price: float = 1e-6
    solver_tol: float = 1e-9
    max_iters: int = 400
    time_limit_s: float | None = None
    structure_threshold: int = STRUCTURE_THRESHOLD
    maximal_only: bool = False
    fairness_scale: float = 1.0

    def __post_init__(self):
        if self.tol_price <= 0 or self.solver_tol <= 0:
            raise ValidationError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.fairness_scale <= 0:
            raise ValidationError("fairness_scale must be positive")


@dataclass
class ColGenResult:
    solution: ConicSolution
    columns: tuple[ExchangePlan, ...]
    objective: float
    iterations: int
    converged: bool
    zetas: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class Lottery:
    """Probability distribution over exchange plans (the support only)."""

    support: tuple[tuple[ExchangePlan, float], ...]

    def __post_init__(self):
        total = sum(p for _, p in self.support)
        if abs(total - 1.0) > 1e-6:
            raise ValidationError(f"lottery probabilities sum to {total}, not 1")
        if any(p <= 0 for _, p in self.support):
            raise ValidationError("lottery support must have positive probabilities")

    def vertex_probabilities(self, pairs) -> dict[str, float]:
        probs = {v: 0.0 for v in pairs}
        for plan, p in self.support:
            for v in plan.covered:
                if v in probs:
                    probs[v] += p
        return probs

    def expected_value(self, inst: Instance) -> float:
        from .plans import plan_value

        return sum(p * plan_value(plan, inst) for plan, p in self.support)


def warm_columns(inst: Instance, caps: Caps) -> list[ExchangePlan]:
    """Empty plan plus one covering plan per matchable vertex, deduplicated."""
    cols = [ExchangePlan()]
    seen = {cols[0].serialize()}
    for plan in matchable_certificates(inst, caps).values():
        key = plan.serialize()
        if key not in seen:
            seen.add(key)
            cols.append(plan)
    return cols


def generate_columns(
    inst: Instance,
    caps: Caps,
    concept: FairnessConcept,
    kind: SchemeKind,
    ref: RefPoint,
    hard: set[str],
    params: ColGenParams,
    *,
    objective_override: str | None = None,
    pin: tuple[str, float] | None = None,
    columns=None,
) -> ColGenResult:
    """Run the pricing loop to optimality of the full master.

    Termination: zeta = alpha0 - max_S w(S) >= -tol_price certifies that no
    column outside the pool could improve the master.  A repriced plan that is
    already in the pool means the duals are not improving (usually a wiring
    or tolerance problem) and raises StallError.
    """
    if columns is None:
        columns = warm_columns(inst, caps)
    pool: dict[str, ExchangePlan] = {}
    for plan in columns:
        pool.setdefault(plan.serialize(), plan)
    empty = ExchangePlan()
    pool.setdefault(empty.serialize(), empty)

    t_start = time.monotonic()
    zetas: list[float] = []
    sol = None
    converged = False
    it = 0
    for it in range(1, params.max_iters + 1):
        plans = tuple(pool.values())
        t0 = time.monotonic()
        master = build_master(
            plans, concept, kind, ref, hard, inst.pairs, inst,
            fairness_scale=params.fairness_scale,
            objective_override=objective_override, pin=pin,
        )
        sol = solve_conic(master, tol=params.solver_tol)
        if sol.status == "numerical_limit":
            # duals at the numerical limit can be wildly scaled; a looser
            # solve usually terminates cleanly and its duals are sound
            sol = solve_conic(master, tol=params.solver_tol * 100)
        t_master = time.monotonic() - t0
        if sol.status not in ("optimal", "numerical_limit"):
            raise WiringError(
                f"master solve returned status {sol.status!r} at iteration {it}"
            )

        weights = pricing_weights(
            concept, sol, hard, inst.pairs, params.fairness_scale
        )
        budget = None
        if params.time_limit_s is not None:
            budget = max(1.0, params.time_limit_s - (time.monotonic() - t_start))
        t1 = time.monotonic()
        plan, zeta = solve_pricing(
            inst, caps, weights,
            structure_threshold=params.structure_threshold,
            time_limit_s=budget,
        )
        t_price = time.monotonic() - t1
        zetas.append(zeta)
        logger.info(
            "iter=%d cols=%d zeta=%.3e master_obj=%.9g t_master=%.3f t_price=%.3f",
            it, len(pool), zeta, sol.objective, t_master, t_price,
        )

        if zeta >= -params.tol_price:
            converged = True
            break
        if params.maximal_only:
            plan = maximalize(plan, inst, caps)
        key = plan.serialize()
        if key in pool:
            # A column already in the pool cannot improve the master, so a
            # small negative zeta here is dual noise at the solver's floor
            # and the pool is optimal.  A large violation means miswired
            # duals and deserves a hard stop.
            if zeta >= -max(1e-6, 100 * params.tol_price):
                converged = True
                break
            raise StallError(
                f"pricing returned known column {key!r} with zeta={zeta:.3e}; "
                "check dual signs or loosen tol_price"
            )
        pool[key] = plan
        if (
            params.time_limit_s is not None
            and time.monotonic() - t_start > params.time_limit_s
        ):
            break

    return ColGenResult(
        solution=sol,
        columns=tuple(pool.values()),
        objective=sol.objective,
        iterations=it,
        converged=converged,
        zetas=zetas,
    )


def extract_lottery(result: ColGenResult, support_tol: float = SUPPORT_TOL) -> Lottery:
    """Read plan probabilities off the master primal, renormalized over the
    support above ``support_tol``."""
    weights = []
    for plan in result.columns:
        p = result.solution.primal_of(plan.serialize())
        if p > support_tol:
            weights.append((plan, p))
    total = sum(p for _, p in weights)
    if total <= 0:
        raise ValidationError("master primal carries no probability mass")
    support = tuple(
        (plan, p / total)
        for plan, p in sorted(weights, key=lambda item: item[0].serialize())
    )
    return Lottery(support=support)


@dataclass
class SchemeRun:
    """Everything produced by one concept x kind solve on one instance."""

    inst: Instance
    concept: FairnessConcept
    kind: SchemeKind
    ref: RefPoint
    hard: frozenset[str]
    lottery: Lottery
    result: ColGenResult


def run_scheme(
    inst: Instance,
    caps: Caps,
    concept: FairnessConcept,
    kind: SchemeKind,
    params: ColGenParams | None = None,
) -> SchemeRun:
    """End-to-end solve: preprocess, reference point (SWP/NSWP), column
    generation, lottery extraction."""
    if params is None:
        params = ColGenParams()
    work = preprocess(inst, caps)
    hard = hard_to_match_set(work, concept.pra_threshold, caps)

    columns = None
    if kind.tag == "single":
        ref = RefPoint.ZERO
    else:
        ref, columns = compute_reference_point(
            work, caps, concept, hard, params, generate_columns
        )

    result = generate_columns(
        work, caps, concept, kind, ref, hard, params, columns=columns
    )
    lottery = extract_lottery(result)
    return SchemeRun(
        inst=work, concept=concept, kind=kind, ref=ref,
        hard=frozenset(hard), lottery=lottery, result=result,
    )


def sample_plan(lottery: Lottery, seed: int) -> ExchangePlan:
    """Draw one plan by inverse CDF over the (serialization-sorted) support;
    a pure function of (lottery, seed)."""
    u = random.Random(seed).random()
    acc = 0.0
    for plan, p in lottery.support:
        acc += p
        if u < acc:
            return plan
    return lottery.support[-1][0]
