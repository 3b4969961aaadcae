"""KEP instances: loading, generation, validation and preprocessing.

An instance is a directed compatibility graph over patient-donor pairs and
non-directed donors (NDDs).  Arcs point from the donor of the source vertex
to the patient of the target vertex; no arc may target an NDD.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError, ValidationError

DEFAULT_PRA_THRESHOLD = 80

# (probability, low, high) buckets the generator draws PRA percentages from:
# mostly easy-to-match patients, a medium band, and a highly sensitized tail.
DEFAULT_PRA_BUCKETS = ((0.70, 0, 25), (0.20, 26, 79), (0.10, 80, 100))


@dataclass(frozen=True)
class Caps:
    """Length caps: cycles carry at most ``cycle_cap`` pairs, chains at most
    ``chain_cap`` pairs (the NDD is not counted)."""

    cycle_cap: int = 3
    chain_cap: int = 3

    def __post_init__(self):
        if self.cycle_cap < 2:
            raise ValidationError(f"cycle cap must be >= 2, got {self.cycle_cap}")
        if self.chain_cap < 1:
            raise ValidationError(f"chain cap must be >= 1, got {self.chain_cap}")


@dataclass(frozen=True)
class Instance:
    """Immutable compatibility graph with per-pair PRA scores.

    ``pairs`` and ``ndds`` preserve input order; ``arcs`` maps
    (source, target) to a nonnegative weight (default 1).
    """

    pairs: tuple[str, ...]
    ndds: tuple[str, ...]
    arcs: tuple[tuple[str, str, float], ...]
    pra: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        seen: set[str] = set()
        for v in self.pairs + self.ndds:
            if v in seen:
                raise ValidationError(f"duplicate vertex id {v!r}")
            seen.add(v)
        ndd_set = set(self.ndds)
        arc_keys: set[tuple[str, str]] = set()
        for src, dst, w in self.arcs:
            if src == dst:
                raise ValidationError(f"self-loop on vertex {src!r}")
            if src not in seen or dst not in seen:
                raise ValidationError(f"arc ({src!r}, {dst!r}) references unknown vertex")
            if dst in ndd_set:
                raise ValidationError(f"arc ({src!r}, {dst!r}) targets NDD {dst!r}")
            if (src, dst) in arc_keys:
                raise ValidationError(f"duplicate arc ({src!r}, {dst!r})")
            if w < 0:
                raise ValidationError(f"negative weight on arc ({src!r}, {dst!r})")
            arc_keys.add((src, dst))
        for v, p in self.pra.items():
            if v not in self.pairs:
                raise ValidationError(f"PRA given for non-pair vertex {v!r}")
            if not 0 <= int(p) <= 100:
                raise ValidationError(f"PRA of {v!r} outside [0, 100]: {p}")

    @property
    def vertices(self) -> tuple[str, ...]:
        return self.pairs + self.ndds

    def pra_of(self, v: str) -> int:
        return int(self.pra.get(v, 0))

    def arc_weight(self, src: str, dst: str) -> float | None:
        for s, d, w in self.arcs:
            if s == src and d == dst:
                return w
        return None

    def out_arcs(self) -> dict[str, list[tuple[str, float]]]:
        adj: dict[str, list[tuple[str, float]]] = {v: [] for v in self.vertices}
        for src, dst, w in self.arcs:
            adj[src].append((dst, w))
        return adj

    def restricted_to(self, keep: Iterable[str]) -> "Instance":
        """Sub-instance induced by ``keep``, preserving vertex order."""
        keep = set(keep)
        return Instance(
            pairs=tuple(v for v in self.pairs if v in keep),
            ndds=tuple(v for v in self.ndds if v in keep),
            arcs=tuple((s, d, w) for s, d, w in self.arcs if s in keep and d in keep),
            pra={v: p for v, p in self.pra.items() if v in keep},
        )


def parse_instance(text: str) -> Instance:
    """Parse the native line-oriented format.

    Header ``kep <n_pairs> <n_ndds> <n_arcs>``, then ``pair <id> <pra>``,
    ``ndd <id>`` and ``arc <src> <dst> <weight>`` lines.  ``#`` starts a
    comment; blank lines are ignored.
    """
    pairs: list[str] = []
    ndds: list[str] = []
    arcs: list[tuple[str, str, float]] = []
    pra: dict[str, int] = {}
    header: tuple[int, int, int] | None = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind, args = tokens[0], tokens[1:]
        if kind == "kep":
            if header is not None:
                raise ParseError("duplicate header", line_no)
            if len(args) != 3:
                raise ParseError("header needs <n_pairs> <n_ndds> <n_arcs>", line_no)
            try:
                header = (int(args[0]), int(args[1]), int(args[2]))
            except ValueError as exc:
                raise ParseError(f"bad header field: {exc}", line_no) from exc
        elif kind == "pair":
            if len(args) != 2:
                raise ParseError("pair line needs <id> <pra>", line_no)
            try:
                score = int(args[1])
            except ValueError as exc:
                raise ParseError(f"bad PRA {args[1]!r}", line_no) from exc
            if not 0 <= score <= 100:
                raise ValidationError(f"PRA of {args[0]!r} outside [0, 100]: {score}")
            pairs.append(args[0])
            pra[args[0]] = score
        elif kind == "ndd":
            if len(args) != 1:
                raise ParseError("ndd line needs <id>", line_no)
            ndds.append(args[0])
        elif kind == "arc":
            if len(args) != 3:
                raise ParseError("arc line needs <src> <dst> <weight>", line_no)
            try:
                weight = float(args[2])
            except ValueError as exc:
                raise ParseError(f"bad weight {args[2]!r}", line_no) from exc
            arcs.append((args[0], args[1], weight))
        else:
            raise ParseError(f"unknown record {kind!r}", line_no)

    if header is None:
        raise ParseError("missing 'kep' header line")
    n_pairs, n_ndds, n_arcs = header
    if (n_pairs, n_ndds, n_arcs) != (len(pairs), len(ndds), len(arcs)):
        raise ParseError(
            f"header counts {header} do not match body "
            f"({len(pairs)} pairs, {len(ndds)} ndds, {len(arcs)} arcs)"
        )
    return Instance(pairs=tuple(pairs), ndds=tuple(ndds), arcs=tuple(arcs), pra=pra)


def write_instance(inst: Instance) -> str:
    """Inverse of :func:`parse_instance`; bit-exact round trip."""
    lines = [f"kep {len(inst.pairs)} {len(inst.ndds)} {len(inst.arcs)}"]
    lines.extend(f"pair {v} {inst.pra_of(v)}" for v in inst.pairs)
    lines.extend(f"ndd {v}" for v in inst.ndds)
    lines.extend(f"arc {s} {d} {w:g}" for s, d, w in inst.arcs)
    return "\n".join(lines) + "\n"


def parse_adjacency(text: str) -> Instance:
    """Best-effort reader for PrefLib-style adjacency input.

    Expects a first line ``<n_vertices> <n_arcs>`` (extra fields ignored)
    and then ``<src> <dst> [weight]`` lines with 1-based vertex numbers.
    All vertices are treated as pairs with PRA 0.
    """
    rows = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    rows = [r for r in rows if r]
    if not rows:
        raise ParseError("empty adjacency file")
    head = rows[0].replace(",", " ").split()
    try:
        n_vertices = int(head[0])
    except (ValueError, IndexError) as exc:
        raise ParseError("adjacency header must start with a vertex count", 1) from exc
    pairs = tuple(f"v{i}" for i in range(1, n_vertices + 1))
    arcs = []
    for line_no, row in enumerate(rows[1:], start=2):
        fields = row.replace(",", " ").split()
        if len(fields) < 2:
            raise ParseError("adjacency arc needs <src> <dst>", line_no)
        try:
            src, dst = int(fields[0]), int(fields[1])
            weight = float(fields[2]) if len(fields) > 2 else 1.0
        except ValueError as exc:
            raise ParseError(f"bad adjacency field: {exc}", line_no) from exc
        if src == dst:
            continue
        arcs.append((f"v{src}", f"v{dst}", weight))
    return Instance(pairs=pairs, ndds=(), arcs=tuple(arcs), pra={})


def generate_instance(
    n_pairs: int,
    ndd_fraction: float,
    density: float,
    seed: int,
    pra_buckets: Sequence[tuple[float, int, int]] = DEFAULT_PRA_BUCKETS,
) -> Instance:
    """Random instance: arc i->j appears with probability
    ``density * (1 - PRA_j / 100)``.  Pure function of its arguments."""
    if n_pairs <= 0:
        raise ValidationError("n_pairs must be positive")
    if not 0.0 <= ndd_fraction <= 1.0:
        raise ValidationError("ndd_fraction must lie in [0, 1]")
    if not 0.0 < density <= 1.0:
        raise ValidationError("density must lie in (0, 1]")

    rng = np.random.default_rng(seed)
    pairs = tuple(f"p{i}" for i in range(1, n_pairs + 1))
    n_ndds = int(round(ndd_fraction * n_pairs))
    ndds = tuple(f"n{i}" for i in range(1, n_ndds + 1))

    probs = np.array([b[0] for b in pra_buckets], dtype=float)
    probs = probs / probs.sum()
    pra: dict[str, int] = {}
    for v in pairs:
        bucket = pra_buckets[rng.choice(len(pra_buckets), p=probs)]
        pra[v] = int(rng.integers(bucket[1], bucket[2] + 1))

    arcs = []
    for src in pairs + ndds:
        for dst in pairs:
            if src == dst:
                continue
            p_arc = density * (1.0 - pra[dst] / 100.0)
            if rng.random() < p_arc:
                arcs.append((src, dst, 1.0))
    return Instance(pairs=pairs, ndds=ndds, arcs=tuple(arcs), pra=pra)


def matchable_vertices(inst: Instance, caps: Caps) -> set[str]:
    """Vertices belonging to at least one nonempty feasible exchange plan.

    A single capped cycle or chain is itself a feasible plan, so this is the
    union of vertices over all enumerable structures.
    """
    from .plans import enumerate_chains, enumerate_cycles

    covered: set[str] = set()
    for cyc in enumerate_cycles(inst, caps):
        covered.update(cyc.vertices)
    for ch in enumerate_chains(inst, caps):
        covered.update(ch.vertices)
    return covered


def matchable_certificates(inst: Instance, caps: Caps):
    """Map each matchable vertex to one plan that contains it."""
    from .plans import ExchangePlan, enumerate_chains, enumerate_cycles

    cert: dict[str, "ExchangePlan"] = {}
    for cyc in enumerate_cycles(inst, caps):
        plan = ExchangePlan(cycles=(cyc,), chains=())
        for v in cyc.vertices:
            cert.setdefault(v, plan)
    for ch in enumerate_chains(inst, caps):
        plan = ExchangePlan(cycles=(), chains=(ch,))
        for v in ch.vertices:
            cert.setdefault(v, plan)
    return cert


def hard_to_match_set(
    inst: Instance, threshold: int = DEFAULT_PRA_THRESHOLD, caps: Caps | None = None
) -> set[str]:
    """Matchable pairs with PRA >= threshold (inclusive boundary)."""
    if not 0 <= threshold <= 100:
        raise ValidationError(f"threshold outside [0, 100]: {threshold}")
    matchable = matchable_vertices(inst, caps or Caps())
    return {v for v in inst.pairs if inst.pra_of(v) >= threshold and v in matchable}


def preprocess(inst: Instance, caps: Caps) -> Instance:
    """Drop vertices (and incident arcs) that no feasible plan can cover."""
    return inst.restricted_to(matchable_vertices(inst, caps))
