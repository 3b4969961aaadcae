"""Master programs for each fairness concept x scheme kind.

Concept objectives (larger is fairer):

* ``if``          negative total absolute deviation from the mean selection
                  probability,
* ``rawls``       minimum selection probability over pairs,
* ``aristotle``   expected number of selected hard-to-match pairs,
* ``nash``        sum of log selection probabilities,
* ``utilitarian`` expected total utility (f1 axis only).

Scheme kinds: ``single`` optimizes the fairness objective alone, ``swp``
a positive linear combination of utility and fairness, ``nswp`` the product
of their surpluses over a reference point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .conic import ConicProblem, ConicSolution
from .errors import CoverageError, ValidationError, WiringError
from .instance import Caps, Instance
from .plans import ExchangePlan, plan_value
from .pricing import PricingWeights

CONCEPTS = ("if", "rawls", "aristotle", "nash", "utilitarian")
KINDS = ("single", "swp", "nswp")

# Inequality pins (reference-point probes) back off the pinned optimum by
# this relative amount: tighter pins leave the interior-point master too
# little interior (Nash probes degrade into 1e20-scale duals).
PIN_SLACK = 1e-6


def _pin_below(value: float) -> float:
    return value - PIN_SLACK * (1.0 + abs(value))

# The reference point is shifted below the probed nadir by this margin, so
# the surplus cone keeps a strictly feasible point despite solver noise and
# the zero-surplus boundary stays out of the optimal face.  It also floors
# the surplus spans: when the ideal point is achievable the nadir equals the
# ideal, and a margin near the solver tolerance would leave the NSWP cone so
# thin that the master becomes numerically unsolvable.
REF_MARGIN = 1e-4


@dataclass(frozen=True)
class FairnessConcept:
    tag: str
    pra_threshold: int = 80

    def __post_init__(self):
        if self.tag not in CONCEPTS:
            raise ValidationError(f"unknown fairness concept {self.tag!r}")


@dataclass(frozen=True)
class SchemeKind:
    tag: str
    weights: tuple[float, float] | None = None  # SWP only; None -> scale-based default

    def __post_init__(self):
        if self.tag not in KINDS:
            raise ValidationError(f"unknown scheme kind {self.tag!r}")
        if self.weights is not None and (self.weights[0] <= 0 or self.weights[1] <= 0):
            raise ValidationError("scheme weights must be positive")

    def swp_weights(self, ref: "RefPoint") -> tuple[float, float]:
        if self.weights is not None:
            return self.weights
        # 1/span puts both axes on similar scales; normalizing to sum 1
        # keeps the same argmax while bounding the weights, which would
        # otherwise blow up (and amplify solver noise into the objective)
        # when the ideal point is achievable and a span is near zero.
        span1 = max(ref.i[0] - ref.d[0], 1e-9)
        span2 = max(ref.i[1] - ref.d[1], 1e-9)
        lam1, lam2 = 1.0 / span1, 1.0 / span2
        total = lam1 + lam2
        return (lam1 / total, lam2 / total)


@dataclass(frozen=True)
class RefPoint:
    """Reference (nadir) point d and ideal point i in objective space."""

    d: tuple[float, float]
    i: tuple[float, float]

    ZERO: "RefPoint" = None  # set below

    def __post_init__(self):
        if self.d[0] > self.i[0] + 1e-9 or self.d[1] > self.i[1] + 1e-9:
            raise ValidationError(f"reference point exceeds ideal: d={self.d}, i={self.i}")


RefPoint.ZERO = RefPoint(d=(0.0, 0.0), i=(0.0, 0.0))


def _covered_pairs(plan: ExchangePlan, pairs: Sequence[str]) -> list[str]:
    pair_set = set(pairs)
    return [v for v in plan.covered if v in pair_set]


def build_master(
    columns: Sequence[ExchangePlan],
    concept: FairnessConcept,
    kind: SchemeKind,
    ref: RefPoint,
    hard: set[str],
    pairs: Sequence[str],
    inst: Instance | None = None,
    *,
    fairness_scale: float = 1.0,
    objective_override: str | None = None,
    pin: tuple[str, float] | None = None,
) -> ConicProblem:
    """Restricted master over the given plan columns.

    ``objective_override`` ("y1" or "y2") turns the problem into a
    reference-point probe: both axis definitions stay active and the cone
    block is dropped.  ``pin`` adds a one-sided bound (var, lower_value) on
    an axis variable.  ``fairness_scale`` rescales the fairness axis where a
    scaled axis is consumed (the SWP objective).  The matrix itself is built
    in natural fairness units, so NSWP is benefit-scale-free by construction:
    the optimal delta is not unique on flat faces and solving a literally
    rescaled matrix would let the interior-point solver terminate at a
    different point of the optimal face.
    """
    if not columns:
        raise ValidationError("master needs at least one column")
    scale = fairness_scale
    probing = objective_override is not None
    single_fairness = (
        kind.tag == "single" and concept.tag != "utilitarian" and not probing
    )
    use_cone = kind.tag == "nswp" and not probing

    prob = ConicProblem()
    col_names = []
    for plan in columns:
        name = plan.serialize()
        if prob.has_column(name):
            raise ValidationError(f"duplicate plan column {name!r}")
        prob.add_column(name)
        col_names.append(name)
    prob.add_column("y1")
    values = {
        name: (plan_value(plan, inst) if inst is not None else len(_covered_pairs(plan, pairs)))
        for name, plan in zip(col_names, columns)
    }
    members: dict[str, list[str]] = {v: [] for v in pairs}
    for name, plan in zip(col_names, columns):
        for v in _covered_pairs(plan, pairs):
            members[v].append(name)

    # probability normalization
    prob.add_block("alpha0", "zero", [({n: 1.0 for n in col_names}, -1.0)])

    # utility axis
    if single_fairness:
        prob.add_block("alpha1", "zero", [({"y1": 1.0}, -1.0)])
    else:
        row = {"y1": 1.0}
        for n in col_names:
            if values[n]:
                row[n] = -values[n]
        prob.add_block("alpha1", "zero", [(row, ref.d[0])])

    d2 = ref.d[1]
    if concept.tag == "utilitarian":
        pass  # no fairness axis
    elif concept.tag == "aristotle":
        prob.add_column("y2")
        row = {"y2": 1.0}
        for name, plan in zip(col_names, columns):
            n_hard = sum(1 for v in _covered_pairs(plan, pairs) if v in hard)
            if n_hard:
                row[name] = -float(n_hard)
        prob.add_block("alpha2", "zero", [(row, d2)])
    else:
        prob.add_column("y2")
        prob.add_column("T")
        if concept.tag == "if":
            # y2 = -(T + d2); T = total absolute deviation
            prob.add_block("alpha2", "zero", [({"y2": 1.0, "T": 1.0}, d2)])
            prob.add_column("z")
            row = {"z": float(len(pairs))}
            for name, plan in zip(col_names, columns):
                cov = len(_covered_pairs(plan, pairs))
                if cov:
                    row[name] = -float(cov)
            prob.add_block("alpha3", "zero", [(row, 0.0)])
        else:
            prob.add_block("alpha2", "zero", [({"y2": 1.0, "T": -1.0}, d2)])

        for v in pairs:
            prob.add_column(f"z:{v}")
        if concept.tag in ("if", "nash"):
            for v in pairs:
                prob.add_column(f"t:{v}")

        for v in pairs:
            row = {f"z:{v}": 1.0}
            for n in members[v]:
                row[n] = row.get(n, 0.0) - 1.0
            if concept.tag == "if":
                row["z"] = 1.0
            prob.add_block(f"beta:{v}", "zero", [(row, 0.0)])

        if concept.tag == "rawls":
            for v in pairs:
                prob.add_block(f"gamma:{v}", "nonneg", [({f"z:{v}": 1.0, "T": -1.0}, 0.0)])
        if concept.tag in ("if", "nash"):
            row = {f"t:{v}": 1.0 for v in pairs}
            row["T"] = -1.0
            prob.add_block("eta", "zero", [(row, 0.0)])
        if concept.tag == "if":
            for v in pairs:
                prob.add_block(
                    f"w:{v}", "soc", [({f"t:{v}": 1.0}, 0.0), ({f"z:{v}": 1.0}, 0.0)]
                )
        if concept.tag == "nash":
            for v in pairs:
                if not members[v]:
                    raise CoverageError(f"pair {v!r} is covered by no master column")
                prob.add_block(
                    f"w:{v}",
                    "exp",
                    [({f"z:{v}": 1.0}, 0.0), ({}, 1.0), ({f"t:{v}": 1.0}, 0.0)],
                )

    prob.add_block("lambda", "nonneg", [({n: 1.0}, 0.0) for n in col_names])

    if use_cone:
        prob.add_column("r")
        prob.add_block(
            "u",
            "rotated_soc",
            [({"y1": 1.0}, 0.0), ({"y2": 1.0}, 0.0), ({"r": 1.0}, 0.0)],
        )

    if pin is not None:
        var, lo = pin
        prob.add_block("pin", "nonneg", [({var: 1.0}, -lo)])

    if probing:
        prob.set_objective({objective_override: 1.0})
    elif kind.tag == "nswp":
        prob.set_objective({"r": 1.0})
    elif kind.tag == "swp":
        lam1, lam2 = kind.swp_weights(ref)
        prob.set_objective({"y1": lam1, "y2": lam2 * scale})
    elif concept.tag == "utilitarian":
        prob.set_objective({"y1": 1.0})
    else:
        prob.set_objective({"y2": 1.0})
    return prob


def pricing_weights(
    concept: FairnessConcept,
    duals: ConicSolution,
    hard: set[str],
    pairs: Sequence[str],
    fairness_scale: float = 1.0,
) -> PricingWeights:
    """Translate master duals into per-vertex subproblem weights.

    The weight of covering pair v is the total dual mass the column picks up
    through v's rows, so pricing searches for the plan whose weight exceeds
    the normalization dual alpha0 the most.
    """

    def need(label: str) -> float:
        if label not in duals.duals:
            raise WiringError(f"dual block {label!r} missing from master solution")
        return duals.dual_scalar(label)

    alpha0 = need("alpha0")
    alpha1 = need("alpha1")
    w: dict[str, float] = {}
    if concept.tag == "utilitarian":
        w = {v: alpha1 for v in pairs}
    elif concept.tag == "aristotle":
        alpha2 = need("alpha2")
        w = {v: alpha1 + (alpha2 if v in hard else 0.0) for v in pairs}
    elif concept.tag == "if":
        alpha3 = need("alpha3")
        w = {v: alpha1 + alpha3 + need(f"beta:{v}") for v in pairs}
    else:  # rawls, nash
        w = {v: alpha1 + need(f"beta:{v}") for v in pairs}
    return PricingWeights(alpha0=alpha0, w=w)


def nash_reference_floor(n_pairs: int) -> float:
    """Worst-case best Nash score over any graph with ``n_pairs`` pairs."""
    if n_pairs <= 1:
        return 0.0
    return -n_pairs * math.log(n_pairs)


def compute_reference_point(
    inst: Instance,
    caps: Caps,
    concept: FairnessConcept,
    hard: set[str],
    params=None,
    colgen=None,
):
    """Ideal point (i1, i2) and reference point (d1, d2) via axis probes.

    i2 is the column-generation optimum of the fairness axis alone, d1 the
    best utility at that fairness level, i1 the utilitarian optimum, and d2
    the best fairness at maximum utility -- except Nash, whose d2 uses the
    closed-form floor because single vertices excluded from every optimal
    plan would drive it to minus infinity.

    Returns (RefPoint, columns generated along the way) so the columns can
    warm-start the subsequent scheme run.
    """
    from . import colgen as colgen_mod

    if colgen is None:
        colgen = colgen_mod.generate_columns
    if params is None:
        params = colgen_mod.ColGenParams()

    pairs = inst.pairs
    single = SchemeKind("single")

    res_f2 = colgen(
        inst, caps, concept, single, RefPoint.ZERO, hard, params,
        objective_override="y2",
    )
    i2 = res_f2.objective
    columns = res_f2.columns

    res_d1 = colgen(
        inst, caps, concept, single, RefPoint.ZERO, hard, params,
        objective_override="y1", pin=("y2", _pin_below(i2)), columns=columns,
    )
    d1 = res_d1.objective
    columns = res_d1.columns

    res_f1 = colgen(
        inst, caps, concept, single, RefPoint.ZERO, hard, params,
        objective_override="y1", columns=columns,
    )
    i1 = res_f1.objective
    columns = res_f1.columns

    if concept.tag == "nash":
        d2 = nash_reference_floor(len(pairs))
    else:
        res_d2 = colgen(
            inst, caps, concept, single, RefPoint.ZERO, hard, params,
            objective_override="y2", pin=("y1", _pin_below(i1)), columns=columns,
        )
        d2 = res_d2.objective
        columns = res_d2.columns

    d1 = min(d1, i1) - REF_MARGIN
    d2 = min(d2, i2) - REF_MARGIN
    return RefPoint(d=(d1, d2), i=(i1, i2)), columns
