"""Lottery quality metrics and the plain-text / CSV reporting layer."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .colgen import Lottery, SchemeRun
from .errors import UndefinedPofError, ValidationError
from .instance import Instance
from .schemes import FairnessConcept, RefPoint

SUPPORT_TOL = 1e-9

# serialized stand-in for an unbounded-below Nash score in CSV output
NEG_INF_SENTINEL = "-inf"


def pof(expected_transplants: float, utilitarian_optimum: float) -> float:
    """Price of fairness: relative utility given up against the utilitarian
    optimum.  Undefined when nothing is matchable at all."""
    if utilitarian_optimum <= 0:
        raise UndefinedPofError("utilitarian optimum is zero; POF undefined")
    return (utilitarian_optimum - expected_transplants) / utilitarian_optimum


def fairness_value(
    concept: FairnessConcept, lottery: Lottery, inst: Instance, hard: set[str]
) -> float:
    """Value of the concept's fairness objective under the lottery.

    Nash returns ``-math.inf`` when some pair has selection probability 0.
    """
    probs = lottery.vertex_probabilities(inst.pairs)
    if concept.tag == "utilitarian":
        return lottery.expected_value(inst)
    if concept.tag == "rawls":
        return min(probs.values()) if probs else 0.0
    if concept.tag == "aristotle":
        return sum(probs[v] for v in inst.pairs if v in hard)
    if concept.tag == "if":
        if not probs:
            return 0.0
        mean = sum(probs.values()) / len(probs)
        return -sum(abs(p - mean) for p in probs.values())
    # nash
    total = 0.0
    for p in probs.values():
        if p <= 0.0:
            return -math.inf
        total += math.log(p)
    return total


def min_support_fraction(lottery: Lottery) -> float:
    """Smallest probability carried by any plan in the support."""
    return min(p for _, p in lottery.support)


def relative_distances(point: tuple[float, float], ref: RefPoint) -> tuple[float, float]:
    """Per-axis distance from the ideal point, scaled by the ideal-reference
    span on that axis.  0 means the axis is at its ideal, 1 at the reference."""
    out = []
    for k in range(2):
        span = ref.i[k] - ref.d[k]
        if span <= 0:
            out.append(0.0)
        else:
            out.append((ref.i[k] - point[k]) / span)
    return (out[0], out[1])


@dataclass(frozen=True)
class SchemeReport:
    """Flat summary of one scheme run, ready for text or CSV output."""

    concept: str
    kind: str
    n_pairs: int
    n_ndds: int
    n_hard: int
    expected_transplants: float
    utilitarian_optimum: float
    pof: float
    fairness: float
    support_size: int
    min_support: float
    dist_utility: float
    dist_fairness: float
    ref_d1: float
    ref_d2: float
    ref_i1: float
    ref_i2: float
    iterations: int
    columns: int
    converged: bool

    CSV_FIELDS = (
        "concept", "kind", "n_pairs", "n_ndds", "n_hard",
        "expected_transplants", "utilitarian_optimum", "pof", "fairness",
        "support_size", "min_support", "dist_utility", "dist_fairness",
        "ref_d1", "ref_d2", "ref_i1", "ref_i2",
        "iterations", "columns", "converged",
    )

    def to_row(self) -> dict[str, str]:
        row = {}
        for name in self.CSV_FIELDS:
            val = getattr(self, name)
            if isinstance(val, bool):
                row[name] = "1" if val else "0"
            elif isinstance(val, float):
                row[name] = NEG_INF_SENTINEL if val == -math.inf else repr(val)
            else:
                row[name] = str(val)
        return row

    @staticmethod
    def from_row(row: dict[str, str]) -> "SchemeReport":
        def num(name):
            text = row[name]
            return -math.inf if text == NEG_INF_SENTINEL else float(text)

        return SchemeReport(
            concept=row["concept"], kind=row["kind"],
            n_pairs=int(row["n_pairs"]), n_ndds=int(row["n_ndds"]),
            n_hard=int(row["n_hard"]),
            expected_transplants=num("expected_transplants"),
            utilitarian_optimum=num("utilitarian_optimum"),
            pof=num("pof"), fairness=num("fairness"),
            support_size=int(row["support_size"]), min_support=num("min_support"),
            dist_utility=num("dist_utility"), dist_fairness=num("dist_fairness"),
            ref_d1=num("ref_d1"), ref_d2=num("ref_d2"),
            ref_i1=num("ref_i1"), ref_i2=num("ref_i2"),
            iterations=int(row["iterations"]), columns=int(row["columns"]),
            converged=row["converged"] == "1",
        )

    def to_text(self) -> str:
        fair = NEG_INF_SENTINEL if self.fairness == -math.inf else f"{self.fairness:.6f}"
        lines = [
            f"scheme            {self.concept} x {self.kind}",
            f"instance          {self.n_pairs} pairs, {self.n_ndds} ndds, {self.n_hard} hard-to-match",
            f"expected tx       {self.expected_transplants:.6f}",
            f"utilitarian opt   {self.utilitarian_optimum:.6f}",
            f"price of fairness {self.pof:.6f}",
            f"fairness value    {fair}",
            f"support           {self.support_size} plans, min prob {self.min_support:.6f}",
            f"rel distance      utility {self.dist_utility:.6f}, fairness {self.dist_fairness:.6f}",
            f"reference point   d=({self.ref_d1:.6f}, {self.ref_d2:.6f}) i=({self.ref_i1:.6f}, {self.ref_i2:.6f})",
            f"column generation {self.iterations} iterations, {self.columns} columns, "
            + ("converged" if self.converged else "NOT converged"),
        ]
        return "\n".join(lines) + "\n"


def build_report(run: SchemeRun, utilitarian_optimum: float) -> SchemeReport:
    inst = run.inst
    expected = run.lottery.expected_value(inst)
    fair = fairness_value(run.concept, run.lottery, inst, set(run.hard))
    if run.kind.tag == "single":
        dist = (0.0, 0.0)
    else:
        dist = relative_distances((expected, fair), run.ref)
    return SchemeReport(
        concept=run.concept.tag,
        kind=run.kind.tag,
        n_pairs=len(inst.pairs),
        n_ndds=len(inst.ndds),
        n_hard=len(run.hard),
        expected_transplants=expected,
        utilitarian_optimum=utilitarian_optimum,
        pof=pof(expected, utilitarian_optimum),
        fairness=fair,
        support_size=len(run.lottery.support),
        min_support=min_support_fraction(run.lottery),
        dist_utility=dist[0],
        dist_fairness=dist[1],
        ref_d1=run.ref.d[0], ref_d2=run.ref.d[1],
        ref_i1=run.ref.i[0], ref_i2=run.ref.i[1],
        iterations=run.result.iterations,
        columns=len(run.result.columns),
        converged=run.result.converged,
    )


def write_reports_csv(reports: list[SchemeReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SchemeReport.CSV_FIELDS)
    writer.writeheader()
    for rep in reports:
        writer.writerow(rep.to_row())
    return buf.getvalue()


def read_reports_csv(text: str) -> list[SchemeReport]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames) != SchemeReport.CSV_FIELDS:
        raise ValidationError("unexpected report CSV header")
    return [SchemeReport.from_row(row) for row in reader]


def lottery_text(lottery: Lottery) -> str:
    lines = [f"{p:.9f}  {plan.serialize()}" for plan, p in lottery.support]
    return "\n".join(lines) + "\n"


def parse_lottery(text: str) -> Lottery:
    from .plans import ExchangePlan

    support = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        prob_text, _, plan_text = line.partition("  ")
        try:
            p = float(prob_text)
        except ValueError as exc:
            raise ValidationError(f"bad lottery line {line!r}") from exc
        support.append((ExchangePlan.deserialize(plan_text), p))
    return Lottery(support=tuple(support))
