"""Capped cycles, chains and exchange plans, plus the exhaustive oracle.

All enumeration orders are deterministic: cycles are canonicalized to start
at their smallest vertex (instance order) and lists are sorted by index
tuples, which keeps golden tests stable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import BlowupError, ValidationError
from .instance import Caps, Instance

DEFAULT_PLAN_LIMIT = 2_000_000


@dataclass(frozen=True, order=True)
class Cycle:
    """Directed cycle over pair vertices; length = number of pairs."""

    vertices: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.vertices)

    def serialize(self) -> str:
        return "cycle: " + ">".join(self.vertices)


@dataclass(frozen=True, order=True)
class Chain:
    """Path starting at an NDD; length = number of pair vertices."""

    vertices: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.vertices) - 1

    def serialize(self) -> str:
        return "chain: " + ">".join(self.vertices)


@dataclass(frozen=True)
class ExchangePlan:
    """Vertex-disjoint set of capped cycles and chains.  The empty plan is
    a valid member of the feasible set."""

    cycles: tuple[Cycle, ...] = ()
    chains: tuple[Chain, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "cycles", tuple(sorted(self.cycles)))
        object.__setattr__(self, "chains", tuple(sorted(self.chains)))
        seen: set[str] = set()
        for struct in self.cycles + self.chains:
            for v in struct.vertices:
                if v in seen:
                    raise ValidationError(f"plan reuses vertex {v!r}")
                seen.add(v)
        object.__setattr__(self, "covered", frozenset(seen))

    covered: frozenset[str] = field(init=False, compare=False)

    def covered_pairs(self, inst: Instance) -> frozenset[str]:
        return self.covered - set(inst.ndds)

    def is_empty(self) -> bool:
        return not self.cycles and not self.chains

    def serialize(self) -> str:
        if self.is_empty():
            return "empty"
        parts = [c.serialize() for c in self.cycles] + [c.serialize() for c in self.chains]
        return " | ".join(parts)

    @staticmethod
    def deserialize(text: str) -> "ExchangePlan":
        text = text.strip()
        if text == "empty":
            return ExchangePlan()
        cycles, chains = [], []
        for part in text.split("|"):
            part = part.strip()
            if part.startswith("cycle:"):
                cycles.append(Cycle(tuple(part[len("cycle:"):].strip().split(">"))))
            elif part.startswith("chain:"):
                chains.append(Chain(tuple(part[len("chain:"):].strip().split(">"))))
            else:
                raise ValidationError(f"bad plan fragment {part!r}")
        return ExchangePlan(cycles=tuple(cycles), chains=tuple(chains))


def enumerate_cycles(inst: Instance, caps: Caps) -> list[Cycle]:
    """All simple directed cycles of length <= cycle_cap over pairs, each in
    canonical rotation (smallest pair index first), sorted."""
    index = {v: i for i, v in enumerate(inst.pairs)}
    succ: dict[str, list[str]] = {v: [] for v in inst.pairs}
    for src, dst, _ in inst.arcs:
        if src in index and dst in index:
            succ[src].append(dst)
    for v in succ:
        succ[v].sort(key=index.__getitem__)

    cycles: list[Cycle] = []

    def extend(start: str, path: list[str]):
        last = path[-1]
        for nxt in succ[last]:
            if nxt == start and len(path) >= 2:
                cycles.append(Cycle(tuple(path)))
            # only vertices with a larger index than the start keep the
            # rotation canonical and each cycle enumerated once
            elif index[nxt] > index[start] and nxt not in path and len(path) < caps.cycle_cap:
                extend(start, path + [nxt])

    for start in inst.pairs:
        extend(start, [start])
    cycles.sort(key=lambda c: tuple(index[v] for v in c.vertices))
    return cycles


def enumerate_chains(inst: Instance, caps: Caps) -> list[Chain]:
    """All simple paths of 1..chain_cap pairs starting at an NDD, sorted."""
    order = {v: i for i, v in enumerate(inst.vertices)}
    pair_set = set(inst.pairs)
    succ: dict[str, list[str]] = {v: [] for v in inst.vertices}
    for src, dst, _ in inst.arcs:
        if dst in pair_set:
            succ[src].append(dst)
    for v in succ:
        succ[v].sort(key=order.__getitem__)

    chains: list[Chain] = []

    def extend(path: list[str]):
        chains.append(Chain(tuple(path)))
        if len(path) - 1 >= caps.chain_cap:
            return
        for nxt in succ[path[-1]]:
            if nxt not in path:
                extend(path + [nxt])

    for ndd in inst.ndds:
        for first in succ[ndd]:
            extend([ndd, first])
    chains.sort(key=lambda c: tuple(order[v] for v in c.vertices))
    return chains


def enumerate_plans(
    inst: Instance, caps: Caps, limit: int | None = DEFAULT_PLAN_LIMIT
) -> list[ExchangePlan]:
    """All vertex-disjoint combinations of structures, including the empty
    plan.  Intended for small graphs; raises BlowupError past ``limit``."""
    structures: list[Cycle | Chain] = list(enumerate_cycles(inst, caps))
    structures += enumerate_chains(inst, caps)
    masks = [frozenset(s.vertices) for s in structures]

    plans: list[ExchangePlan] = []

    def recurse(start: int, chosen: list[int], used: frozenset[str]):
        if limit is not None and len(plans) >= limit:
            raise BlowupError(f"more than {limit} feasible plans")
        cycles = tuple(structures[i] for i in chosen if isinstance(structures[i], Cycle))
        chains = tuple(structures[i] for i in chosen if isinstance(structures[i], Chain))
        plans.append(ExchangePlan(cycles=cycles, chains=chains))
        for i in range(start, len(structures)):
            if used.isdisjoint(masks[i]):
                recurse(i + 1, chosen + [i], used | masks[i])

    recurse(0, [], frozenset())
    return plans


def count_plans_bitmask(inst: Instance, caps: Caps) -> int:
    """Independent plan count via bitmask subset filtering (oracle check)."""
    structures: list[Cycle | Chain] = list(enumerate_cycles(inst, caps))
    structures += enumerate_chains(inst, caps)
    order = {v: i for i, v in enumerate(inst.vertices)}
    masks = []
    for s in structures:
        m = 0
        for v in s.vertices:
            m |= 1 << order[v]
        masks.append(m)
    count = 0
    for r in range(len(structures) + 1):
        for combo in itertools.combinations(range(len(structures)), r):
            union, ok = 0, True
            for i in combo:
                if union & masks[i]:
                    ok = False
                    break
                union |= masks[i]
            if ok:
                count += 1
    return count


def is_maximal(plan: ExchangePlan, inst: Instance, caps: Caps) -> bool:
    """True iff no capped structure is vertex-disjoint from the plan."""
    covered = plan.covered
    for cyc in enumerate_cycles(inst, caps):
        if covered.isdisjoint(cyc.vertices):
            return False
    for ch in enumerate_chains(inst, caps):
        if covered.isdisjoint(ch.vertices):
            return False
    return True


def maximalize(plan: ExchangePlan, inst: Instance, caps: Caps) -> ExchangePlan:
    """Greedily extend a plan with disjoint structures until maximal.

    Longer structures are preferred so the extension adds as many pairs as
    possible; enumeration order breaks ties deterministically.
    """
    structures: list[Cycle | Chain] = list(enumerate_cycles(inst, caps))
    structures += enumerate_chains(inst, caps)
    structures.sort(key=lambda s: (-len(s), s.serialize()))
    cycles, chains = list(plan.cycles), list(plan.chains)
    covered = set(plan.covered)
    for s in structures:
        if covered.isdisjoint(s.vertices):
            covered.update(s.vertices)
            if isinstance(s, Cycle):
                cycles.append(s)
            else:
                chains.append(s)
    return ExchangePlan(cycles=tuple(cycles), chains=tuple(chains))


def plan_utilities(plan: ExchangePlan, inst: Instance) -> dict[str, float]:
    """Per-pair utility under a plan: the weight of the arc delivering a
    kidney to the pair (indicator of membership for unit weights)."""
    util = {v: 0.0 for v in inst.pairs}
    for struct in plan.cycles + plan.chains:
        verts = struct.vertices
        n = len(verts)
        for pos, v in enumerate(verts):
            if isinstance(struct, Chain) and pos + 1 >= n:
                break
            nxt = verts[(pos + 1) % n]
            w = inst.arc_weight(v, nxt)
            if w is None:
                raise ValidationError(f"plan uses missing arc ({v!r}, {nxt!r})")
            if nxt in util:
                util[nxt] = w
    return util


def plan_value(plan: ExchangePlan, inst: Instance) -> float:
    """Total utility of a plan (number of transplants for unit weights)."""
    return sum(plan_utilities(plan, inst).values())


def vertex_weight_value(plan: ExchangePlan, weights: Mapping[str, float]) -> float:
    """Sum of per-vertex weights over the pairs the plan covers."""
    return sum(weights.get(v, 0.0) for v in plan.covered)
