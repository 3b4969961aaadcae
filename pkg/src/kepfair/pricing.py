"""Exact maximum-weight exchange-plan solver (the column-generation subproblem).

Three interchangeable paths, picked by the enumerated structure count:

* an internal branch-and-bound over the cycle/chain packing with a
  deterministic lexicographic tie-break, for very small counts;
* a set-packing MILP over the enumerated structures (HiGHS), up to the
  enumeration threshold (default 50,000);
* the position-indexed edge integer program (HiGHS) otherwise, which never
  needs the structures enumerated at all.

All maximize ``sum(w[v] for v in covered pairs)`` over feasible plans.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from .errors import SolverTimeoutError, ValidationError
from .instance import Caps, Instance
from .plans import Chain, Cycle, ExchangePlan, enumerate_chains, enumerate_cycles

STRUCTURE_THRESHOLD = 50_000
_TIE_TOL = 1e-12


@dataclass(frozen=True)
class PricingWeights:
    """Constant term plus per-pair weights; values may be negative."""

    alpha0: float
    w: Mapping[str, float]

    def of(self, v: str) -> float:
        return float(self.w.get(v, 0.0))


@dataclass
class HpiefModel:
    """Position-indexed edge formulation over graph copies.

    ``variables`` holds ("x", copy, src, dst, pos) and ("y", src, dst, pos)
    tuples; ``rows`` holds (coeffs by variable index, lower, upper).
    """

    variables: list[tuple]
    objective: np.ndarray
    rows: list[tuple[dict[int, float], float, float]]
    var_index: dict[tuple, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.var_index:
            self.var_index = {v: i for i, v in enumerate(self.variables)}

    def to_lp_text(self) -> str:
        """Debug dump in LP-like text form (flag-gated in the CLI)."""

        def vname(v: tuple) -> str:
            return "_".join(str(p) for p in v)

        lines = ["maximize"]
        terms = [
            f"{'+' if c >= 0 else '-'} {abs(c):g} {vname(v)}"
            for v, c in zip(self.variables, self.objective)
            if c != 0.0
        ]
        lines.append("  " + " ".join(terms) if terms else "  0")
        lines.append("subject to")
        for idx, (coeffs, lo, hi) in enumerate(self.rows):
            expr = " ".join(
                f"{'+' if c >= 0 else '-'} {abs(c):g} {vname(self.variables[j])}"
                for j, c in sorted(coeffs.items())
            )
            if lo == hi:
                lines.append(f"  c{idx}: {expr} = {lo:g}")
            elif lo == -np.inf:
                lines.append(f"  c{idx}: {expr} <= {hi:g}")
            elif hi == np.inf:
                lines.append(f"  c{idx}: {expr} >= {lo:g}")
            else:
                lines.append(f"  c{idx}: {lo:g} <= {expr} <= {hi:g}")
        lines.append("binary")
        lines.append("  " + " ".join(vname(v) for v in self.variables))
        return "\n".join(lines) + "\n"


def build_hpief(
    inst: Instance,
    caps: Caps,
    weights: PricingWeights,
    force: str | None = None,
) -> HpiefModel:
    """Build the position-indexed model with per-vertex objective weights.

    The coefficient of every variable delivering a kidney to pair ``v`` is
    ``weights.w[v]``.  When ``force`` is given, that vertex's coverage row
    becomes an equality, forcing its inclusion in the solution.
    """
    K, Kc = caps.cycle_cap, caps.chain_cap
    pair_idx = {v: i for i, v in enumerate(inst.pairs)}
    ndd_set = set(inst.ndds)
    pair_arcs = [(s, d) for s, d, _ in inst.arcs if s in pair_idx and d in pair_idx]
    chain_arcs = [(s, d) for s, d, _ in inst.arcs if d in pair_idx]

    variables: list[tuple] = []
    obj: list[float] = []

    def cycle_positions(i: str, j: str, l: int) -> range:
        if pair_idx[i] == l:
            return range(1, 2)
        if pair_idx[j] == l:
            return range(2, K + 1)
        return range(2, K)

    for l in range(len(inst.pairs)):
        for (i, j) in pair_arcs:
            if pair_idx[i] < l or pair_idx[j] < l:
                continue
            for k in cycle_positions(i, j, l):
                variables.append(("x", l, i, j, k))
                obj.append(weights.of(j))
    for (i, j) in chain_arcs:
        positions = range(1, 2) if i in ndd_set else range(2, Kc + 1)
        for k in positions:
            variables.append(("y", i, j, k))
            obj.append(weights.of(j))

    var_index = {v: i for i, v in enumerate(variables)}
    rows: list[tuple[dict[int, float], float, float]] = []

    # c1: each vertex receives at most (exactly, when forced) one kidney
    for v in inst.pairs:
        coeffs: dict[int, float] = {}
        for key, idx in var_index.items():
            if key[0] == "x" and key[3] == v:
                coeffs[idx] = 1.0
            elif key[0] == "y" and key[2] == v:
                coeffs[idx] = 1.0
        lo = 1.0 if force == v else 0.0
        rows.append((coeffs, lo, 1.0))

    # c2: flow conservation inside each graph copy
    for l in range(len(inst.pairs)):
        for i in inst.pairs:
            if pair_idx[i] <= l:
                continue
            for k in range(1, K):
                coeffs = {}
                for (j, i2) in pair_arcs:
                    if i2 == i and ("x", l, j, i, k) in var_index:
                        coeffs[var_index[("x", l, j, i, k)]] = 1.0
                for (i2, j) in pair_arcs:
                    if i2 == i and ("x", l, i, j, k + 1) in var_index:
                        coeffs[var_index[("x", l, i, j, k + 1)]] = (
                            coeffs.get(var_index[("x", l, i, j, k + 1)], 0.0) - 1.0
                        )
                if coeffs:
                    rows.append((coeffs, 0.0, 0.0))

    # c3: an NDD donates at most (exactly, when forced) once
    for n in inst.ndds:
        coeffs = {
            var_index[("y", n, j, 1)]: 1.0
            for (s, j) in chain_arcs
            if s == n and ("y", n, j, 1) in var_index
        }
        lo = 1.0 if force == n else 0.0
        if coeffs:
            rows.append((coeffs, lo, 1.0))
        elif force == n:
            raise ValidationError(f"forced NDD {n!r} has no outgoing arcs")

    # c4: a pair donates at chain position k+1 only after receiving at k
    for i in inst.pairs:
        for k in range(1, Kc):
            coeffs = {}
            for (j, i2) in chain_arcs:
                if i2 == i:
                    pos = range(1, 2) if j in ndd_set else range(2, Kc + 1)
                    if k in pos and ("y", j, i, k) in var_index:
                        coeffs[var_index[("y", j, i, k)]] = 1.0
            downstream = False
            for (i2, j) in chain_arcs:
                if i2 == i and ("y", i, j, k + 1) in var_index:
                    coeffs[var_index[("y", i, j, k + 1)]] = (
                        coeffs.get(var_index[("y", i, j, k + 1)], 0.0) - 1.0
                    )
                    downstream = True
            if downstream:
                rows.append((coeffs, 0.0, np.inf))

    return HpiefModel(
        variables=variables,
        objective=np.array(obj, dtype=float),
        rows=rows,
        var_index=var_index,
    )


def solve_hpief(
    model: HpiefModel, inst: Instance, time_limit_s: float | None = None
) -> tuple[ExchangePlan, float]:
    """Solve the model with HiGHS and decode the selected cycles/chains."""
    n = len(model.variables)
    if n == 0:
        return ExchangePlan(), 0.0
    data, row_idx, col_idx, lbs, ubs = [], [], [], [], []
    for r, (coeffs, lo, hi) in enumerate(model.rows):
        for j, c in coeffs.items():
            data.append(c)
            row_idx.append(r)
            col_idx.append(j)
        lbs.append(lo)
        ubs.append(hi)
    a_mat = sparse.csr_matrix((data, (row_idx, col_idx)), shape=(len(model.rows), n))
    options = {}
    if time_limit_s is not None:
        options["time_limit"] = time_limit_s
    res = milp(
        c=-model.objective,
        constraints=LinearConstraint(a_mat, lbs, ubs),
        integrality=np.ones(n),
        bounds=(0, 1),
        options=options,
    )
    if res.status == 1:
        raise SolverTimeoutError(
            "pricing MILP hit its time limit",
            incumbent=None,
            bound=-res.mip_dual_bound if res.mip_dual_bound is not None else None,
        )
    if not res.success:
        raise ValidationError(f"pricing MILP failed: {res.message}")
    chosen = {model.variables[j] for j in range(n) if res.x[j] > 0.5}
    plan = _decode_hpief(chosen, inst)
    return plan, float(-res.fun)


def _decode_hpief(chosen: set[tuple], inst: Instance) -> ExchangePlan:
    cycles: list[Cycle] = []
    chains: list[Chain] = []
    x_by_copy: dict[int, dict[str, tuple[str, int]]] = {}
    for key in chosen:
        if key[0] == "x":
            _, l, i, j, k = key
            x_by_copy.setdefault(l, {})[i] = (j, k)
    for l, arcs in sorted(x_by_copy.items()):
        start = inst.pairs[l]
        remaining = dict(arcs)
        while remaining:
            if start in remaining:
                cur = start
            else:
                cur = min(remaining, key=list(inst.pairs).index)
            path = [cur]
            nxt = remaining.pop(cur)[0]
            while nxt != path[0]:
                path.append(nxt)
                nxt = remaining.pop(nxt)[0]
            lead = min(range(len(path)), key=lambda t: inst.pairs.index(path[t]))
            cycles.append(Cycle(tuple(path[lead:] + path[:lead])))
    y_arcs: dict[str, tuple[str, int]] = {}
    for key in chosen:
        if key[0] == "y":
            _, i, j, k = key
            y_arcs[i] = (j, k)
    for n in inst.ndds:
        if n in y_arcs:
            path = [n]
            cur = n
            while cur in y_arcs:
                cur = y_arcs[cur][0]
                path.append(cur)
            chains.append(Chain(tuple(path)))
    return ExchangePlan(cycles=tuple(cycles), chains=tuple(chains))


def _structures(inst: Instance, caps: Caps) -> list[Cycle | Chain]:
    return list(enumerate_cycles(inst, caps)) + list(enumerate_chains(inst, caps))


def solve_packing(
    structures: Sequence[Cycle | Chain],
    inst: Instance,
    weights: PricingWeights,
    force: str | None = None,
    time_limit_s: float | None = None,
) -> tuple[ExchangePlan, float]:
    """Branch-and-bound over disjoint structure packings.

    Structures with nonpositive weight never improve the objective and are
    only considered when needed to cover a forced vertex.  Ties between
    optimal plans break toward the lexicographically smallest serialization.
    """
    order = {v: i for i, v in enumerate(inst.vertices)}
    ndds = set(inst.ndds)

    def struct_weight(s: Cycle | Chain) -> float:
        return sum(weights.of(v) for v in s.vertices if v not in ndds)

    def mask(s: Cycle | Chain) -> int:
        m = 0
        for v in s.vertices:
            m |= 1 << order[v]
        return m

    deadline = time.monotonic() + time_limit_s if time_limit_s else None

    def pack(items: list[tuple[float, int, Cycle | Chain]], base_mask: int):
        """Max-weight packing over positive-weight items disjoint from base."""
        items = [it for it in items if it[0] > 0 and not (it[1] & base_mask)]
        items.sort(key=lambda it: (-it[0], it[2].serialize()))
        suffix = [0.0] * (len(items) + 1)
        for i in range(len(items) - 1, -1, -1):
            suffix[i] = suffix[i + 1] + items[i][0]
        best_val = 0.0
        best_sel: list[Cycle | Chain] = []

        def dfs(pos: int, used: int, val: float, sel: list):
            nonlocal best_val, best_sel
            if deadline is not None and time.monotonic() > deadline:
                raise SolverTimeoutError(
                    "pricing branch-and-bound hit its time limit",
                    incumbent=_to_plan(best_sel),
                    bound=val + suffix[pos],
                )
            better = val > best_val + _TIE_TOL
            if not better and abs(val - best_val) <= _TIE_TOL:
                better = _serial(sel) < _serial(best_sel)
            if better:
                best_val, best_sel = val, list(sel)
            for i in range(pos, len(items)):
                w, m, s = items[i]
                if val + suffix[i] < best_val - _TIE_TOL:
                    return
                if not (used & m):
                    sel.append(s)
                    dfs(i + 1, used | m, val + w, sel)
                    sel.pop()

        dfs(0, base_mask, 0.0, [])
        return best_val, best_sel

    def _serial(sel: list) -> str:
        return _to_plan(sel).serialize()

    def _to_plan(sel: list) -> ExchangePlan:
        return ExchangePlan(
            cycles=tuple(s for s in sel if isinstance(s, Cycle)),
            chains=tuple(s for s in sel if isinstance(s, Chain)),
        )

    items = [(struct_weight(s), mask(s), s) for s in structures]

    if force is None:
        val, sel = pack(items, 0)
        return _to_plan(sel), val

    candidates = [it for it in items if force in it[2].vertices]
    if not candidates:
        raise ValidationError(f"forced vertex {force!r} belongs to no feasible plan")
    best: tuple[float, ExchangePlan] | None = None
    for w0, m0, s0 in candidates:
        val, sel = pack(items, m0)
        total = w0 + val
        plan = _to_plan([s0] + sel)
        if (
            best is None
            or total > best[0] + _TIE_TOL
            or (abs(total - best[0]) <= _TIE_TOL and plan.serialize() < best[1].serialize())
        ):
            best = (total, plan)
    return best[1], best[0]


def solve_packing_milp(
    structures: Sequence[Cycle | Chain],
    inst: Instance,
    weights: PricingWeights,
    force: str | None = None,
    time_limit_s: float | None = None,
) -> tuple[ExchangePlan, float]:
    """Max-weight set packing as a MILP (one binary per structure, one
    at-most-one row per vertex); scales far beyond the enumerative search."""
    ndds = set(inst.ndds)

    def struct_weight(s: Cycle | Chain) -> float:
        return sum(weights.of(v) for v in s.vertices if v not in ndds)

    items = [
        (struct_weight(s), s)
        for s in structures
        if struct_weight(s) > 0 or (force is not None and force in s.vertices)
    ]
    if not items:
        if force is not None:
            raise ValidationError(
                f"forced vertex {force!r} belongs to no feasible plan"
            )
        return ExchangePlan(), 0.0

    n = len(items)
    by_vertex: dict[str, list[int]] = {}
    for j, (_, s) in enumerate(items):
        for v in s.vertices:
            by_vertex.setdefault(v, []).append(j)
    if force is not None and force not in by_vertex:
        raise ValidationError(f"forced vertex {force!r} belongs to no feasible plan")

    data, rows, cols, lbs, ubs = [], [], [], [], []
    r = 0
    for v, js in by_vertex.items():
        for j in js:
            data.append(1.0)
            rows.append(r)
            cols.append(j)
        lbs.append(1.0 if v == force else 0.0)
        ubs.append(1.0)
        r += 1
    constraint = LinearConstraint(
        sparse.csr_matrix((data, (rows, cols)), shape=(r, n)), lbs, ubs
    )
    c = np.array([-w for w, _ in items])
    options = {}
    if time_limit_s is not None:
        options["time_limit"] = time_limit_s
    res = milp(
        c,
        constraints=[constraint],
        integrality=np.ones(n),
        bounds=Bounds(0.0, 1.0),
        options=options,
    )
    if res.status == 1:
        raise SolverTimeoutError(
            "pricing MILP hit its time limit", incumbent=None, bound=None
        )
    if res.status != 0:
        raise ValidationError(f"pricing MILP failed with status {res.status}")
    chosen = [items[j][1] for j in range(n) if res.x[j] > 0.5]
    plan = ExchangePlan(
        cycles=tuple(s for s in chosen if isinstance(s, Cycle)),
        chains=tuple(s for s in chosen if isinstance(s, Chain)),
    )
    return plan, float(-res.fun)


# below this structure count the enumerative branch-and-bound (with its
# lexicographic tie-break) is used; above it, the MILP
BNB_STRUCTURE_LIMIT = 40


def solve_pricing(
    inst: Instance,
    caps: Caps,
    weights: PricingWeights,
    force: str | None = None,
    structure_threshold: int = STRUCTURE_THRESHOLD,
    time_limit_s: float | None = None,
) -> tuple[ExchangePlan, float]:
    """Maximize the vertex-weight of a plan; returns (plan, zeta) with
    ``zeta = alpha0 - max value``.  The empty plan (value 0) is feasible, so
    the maximum is never negative unless a vertex is forced."""
    structures = _structures(inst, caps)
    if len(structures) <= min(BNB_STRUCTURE_LIMIT, structure_threshold):
        plan, value = solve_packing(
            structures, inst, weights, force=force, time_limit_s=time_limit_s
        )
    elif len(structures) <= structure_threshold:
        plan, value = solve_packing_milp(
            structures, inst, weights, force=force, time_limit_s=time_limit_s
        )
    else:
        model = build_hpief(inst, caps, weights, force=force)
        plan, value = solve_hpief(model, inst, time_limit_s=time_limit_s)
    return plan, weights.alpha0 - value
