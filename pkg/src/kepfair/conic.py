"""Standard-form conic problems and the solver backend boundary.

A problem is ``maximize c^T x  s.t.  G x + h in K1 x K2 x ...`` where each
block is a labeled cone.  Columns are registered by name (plan columns carry
their serialized plan, auxiliary columns carry symbol names).

Dual convention
---------------
Duals are reported per block label such that, at optimality, the objective
gradient satisfies ``c[j] == sum_i G[i, j] * dual[i]`` for every column j,
and the dual of a ``delta >= 0`` row is ``<= 0`` (it equals minus the usual
Lagrange multiplier of the backend).  Under this convention the reduced
cost of an absent plan column S is ``dual[alpha0] - sum of per-vertex
weights over S`` and pricing terminates when its maximum is >= -tol.
Cone-block duals are reported in the same orientation; their negation lies
in the dual cone of the block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import clarabel
import numpy as np
from scipy import sparse

from .errors import ParseError, ValidationError

CONE_KINDS = ("zero", "nonneg", "soc", "rotated_soc", "exp", "dual_exp")

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class Cone:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in CONE_KINDS:
            raise ValidationError(f"unknown cone kind {self.kind!r}")
        if self.dim < 1:
            raise ValidationError("cone dimension must be positive")
        if self.kind == "soc" and self.dim < 2:
            raise ValidationError("second-order cone needs dim >= 2")
        if self.kind == "rotated_soc" and self.dim < 3:
            raise ValidationError("rotated second-order cone needs dim >= 3")
        if self.kind in ("exp", "dual_exp") and self.dim != 3:
            raise ValidationError("exponential cones have dim = 3")


@dataclass
class Block:
    label: str
    cone: Cone
    start: int  # first row index


Row = tuple[Mapping[str, float], float]  # (coeffs by column name, constant)


class ConicProblem:
    """Mutable builder for a standard-form conic program (maximization)."""

    def __init__(self):
        self.columns: list[str] = []
        self._col_index: dict[str, int] = {}
        self.objective: dict[str, float] = {}
        self.blocks: list[Block] = []
        self._rows: list[Row] = []

    # -- columns -----------------------------------------------------------
    def add_column(self, name: str) -> int:
        if name in self._col_index:
            raise ValidationError(f"duplicate column {name!r}")
        self._col_index[name] = len(self.columns)
        self.columns.append(name)
        return self._col_index[name]

    def has_column(self, name: str) -> bool:
        return name in self._col_index

    def set_objective(self, coeffs: Mapping[str, float]) -> None:
        for name in coeffs:
            if name not in self._col_index:
                raise ValidationError(f"objective references unknown column {name!r}")
        self.objective = dict(coeffs)

    # -- rows --------------------------------------------------------------
    def add_block(self, label: str, kind: str, rows: Sequence[Row]) -> None:
        for coeffs, _ in rows:
            for name in coeffs:
                if name not in self._col_index:
                    raise ValidationError(f"row references unknown column {name!r}")
        self.blocks.append(Block(label, Cone(kind, len(rows)), len(self._rows)))
        self._rows.extend((dict(c), float(b)) for c, b in rows)

    @property
    def n_rows(self) -> int:
        return len(self._rows)

    def matrices(self) -> tuple[sparse.csc_matrix, np.ndarray, np.ndarray]:
        """(G, h, c) with rows in block order and columns in registry order."""
        n, m = len(self.columns), len(self._rows)
        data, ri, ci = [], [], []
        h = np.zeros(m)
        for r, (coeffs, const) in enumerate(self._rows):
            h[r] = const
            for name, val in coeffs.items():
                data.append(val)
                ri.append(r)
                ci.append(self._col_index[name])
        g_mat = sparse.csc_matrix((data, (ri, ci)), shape=(m, n))
        c = np.zeros(n)
        for name, val in self.objective.items():
            c[self._col_index[name]] = val
        return g_mat, h, c


@dataclass
class ConicSolution:
    status: str  # optimal | infeasible | unbounded | numerical_limit
    objective: float | None
    primal: dict[str, float]
    duals: dict[str, np.ndarray]
    gap: float | None = None

    def primal_of(self, name: str) -> float:
        return self.primal[name]

    def dual_of(self, label: str) -> np.ndarray:
        return self.duals[label]

    def dual_scalar(self, label: str) -> float:
        arr = self.duals[label]
        if arr.size != 1:
            raise ValidationError(f"dual block {label!r} is not scalar")
        return float(arr[0])


_STATUS_MAP = {
    "Solved": "optimal",
    "AlmostSolved": "numerical_limit",
    "PrimalInfeasible": "infeasible",
    "AlmostPrimalInfeasible": "infeasible",
    "DualInfeasible": "unbounded",
    "AlmostDualInfeasible": "unbounded",
}


def _rotation_matrix(dim: int) -> sparse.csr_matrix:
    """Orthogonal map sending the rotated SOC onto the plain SOC."""
    rot = sparse.eye(dim, format="lil")
    rot[0, 0] = rot[0, 1] = rot[1, 0] = 1.0 / _SQRT2
    rot[1, 1] = -1.0 / _SQRT2
    return rot.tocsr()


def solve_conic(problem: ConicProblem, tol: float = 1e-8, max_iter: int = 500) -> ConicSolution:
    """Solve with Clarabel; rotated-SOC blocks are lowered to plain SOC and
    exponential blocks reordered to the backend's orientation."""
    g_mat, h, c = problem.matrices()
    m, n = g_mat.shape
    if n == 0 or m == 0:
        return ConicSolution(status="optimal", objective=0.0, primal={}, duals={})

    # Per-block row transform T: backend rows = T @ our rows.  All transforms
    # used are orthogonal, so duals map back with T^T.
    transforms: list[sparse.spmatrix] = []
    cones = []
    for blk in problem.blocks:
        dim = blk.cone.dim
        if blk.cone.kind == "zero":
            transforms.append(sparse.eye(dim))
            cones.append(clarabel.ZeroConeT(dim))
        elif blk.cone.kind == "nonneg":
            transforms.append(sparse.eye(dim))
            cones.append(clarabel.NonnegativeConeT(dim))
        elif blk.cone.kind == "soc":
            transforms.append(sparse.eye(dim))
            cones.append(clarabel.SecondOrderConeT(dim))
        elif blk.cone.kind == "rotated_soc":
            transforms.append(_rotation_matrix(dim))
            cones.append(clarabel.SecondOrderConeT(dim))
        elif blk.cone.kind == "exp":
            # ours: x1 >= x2 * exp(x3 / x2); backend: z >= y * exp(x / y)
            perm = sparse.csr_matrix(
                (np.ones(3), ([0, 1, 2], [2, 1, 0])), shape=(3, 3)
            )
            transforms.append(perm)
            cones.append(clarabel.ExponentialConeT())
        else:
            raise ValidationError("dual_exp blocks are not supported by the backend")

    t_mat = sparse.block_diag(transforms, format="csc")
    a_mat = sparse.csc_matrix(-t_mat @ g_mat)
    b = np.asarray(t_mat @ h).ravel()
    q = -c
    p_mat = sparse.csc_matrix((n, n))

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    settings.max_iter = max_iter
    solver = clarabel.DefaultSolver(p_mat, q, a_mat, b, cones, settings)
    result = solver.solve()

    status = _STATUS_MAP.get(str(result.status), "numerical_limit")
    if status in ("infeasible", "unbounded"):
        return ConicSolution(status=status, objective=None, primal={}, duals={})

    x = np.asarray(result.x)
    z = np.asarray(result.z)
    duals_flat = np.asarray((t_mat.T @ (-z))).ravel()
    primal = {name: float(x[j]) for j, name in enumerate(problem.columns)}
    duals = {
        blk.label: duals_flat[blk.start : blk.start + blk.cone.dim]
        for blk in problem.blocks
    }
    objective = float(-result.obj_val)
    gap = abs(float(result.obj_val) - float(result.obj_val_dual))
    if status == "optimal" and gap > tol * (1.0 + abs(objective)) * 100:
        status = "numerical_limit"
    return ConicSolution(
        status=status, objective=objective, primal=primal, duals=duals, gap=gap
    )


# -- Conic Benchmark Format export ----------------------------------------

_CBF_KIND = {
    "zero": "L=",
    "nonneg": "L+",
    "soc": "Q",
    "rotated_soc": "QR",
    "exp": "EXP",
    "dual_exp": "EXP*",
}
_CBF_KIND_INV = {v: k for k, v in _CBF_KIND.items()}


def export_problem(problem: ConicProblem) -> str:
    """Conic Benchmark Format text; byte-stable for a fixed problem."""
    g_mat, h, c = problem.matrices()
    lines = ["VER", "3", ""]
    for j, name in enumerate(problem.columns):
        lines.append(f"# col {j} {name}")
    for blk in problem.blocks:
        lines.append(f"# block {blk.start} {blk.cone.dim} {blk.label}")
    lines += ["", "OBJSENSE", "MAX", ""]
    lines += ["VAR", f"{len(problem.columns)} 1", f"F {len(problem.columns)}", ""]
    lines.append("CON")
    lines.append(f"{problem.n_rows} {len(problem.blocks)}")
    for blk in problem.blocks:
        lines.append(f"{_CBF_KIND[blk.cone.kind]} {blk.cone.dim}")
    lines.append("")
    obj_entries = [
        (j, c[j]) for j in range(len(problem.columns)) if c[j] != 0.0
    ]
    lines.append("OBJACOORD")
    lines.append(str(len(obj_entries)))
    for j, val in obj_entries:
        lines.append(f"{j} {float(val)!r}")
    lines.append("")
    coo = g_mat.tocoo()
    entries = sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))
    lines.append("ACOORD")
    lines.append(str(len(entries)))
    for i, j, val in entries:
        lines.append(f"{i} {j} {float(val)!r}")
    lines.append("")
    b_entries = [(i, h[i]) for i in range(problem.n_rows) if h[i] != 0.0]
    lines.append("BCOORD")
    lines.append(str(len(b_entries)))
    for i, val in b_entries:
        lines.append(f"{i} {float(val)!r}")
    return "\n".join(lines) + "\n"


def import_problem(text: str) -> ConicProblem:
    """Re-parse the CBF text produced by :func:`export_problem`."""
    col_names: dict[int, str] = {}
    block_labels: list[str] = []
    raw_lines = text.splitlines()
    for ln in raw_lines:
        if ln.startswith("# col "):
            _, _, j, name = ln.split(maxsplit=3)
            col_names[int(j)] = name
        elif ln.startswith("# block "):
            parts = ln.split(maxsplit=4)
            block_labels.append(parts[4])

    body = [ln for ln in raw_lines if ln and not ln.startswith("#")]
    pos = 0

    def take() -> str:
        nonlocal pos
        val = body[pos]
        pos += 1
        return val

    problem = ConicProblem()
    n_vars = 0
    cone_specs: list[tuple[str, int]] = []
    obj: dict[int, float] = {}
    a_entries: list[tuple[int, int, float]] = []
    b_entries: dict[int, float] = {}
    while pos < len(body):
        section = take()
        if section == "VER":
            take()
        elif section == "OBJSENSE":
            if take() != "MAX":
                raise ParseError("only MAX objectives are produced by this writer")
        elif section == "VAR":
            n_vars = int(take().split()[0])
            take()  # single free domain line
        elif section == "CON":
            _, n_blocks = (int(t) for t in take().split())
            for _ in range(n_blocks):
                kind_txt, dim = take().split()
                cone_specs.append((_CBF_KIND_INV[kind_txt], int(dim)))
        elif section == "OBJACOORD":
            for _ in range(int(take())):
                j, val = take().split()
                obj[int(j)] = float(val)
        elif section == "ACOORD":
            for _ in range(int(take())):
                i, j, val = take().split()
                a_entries.append((int(i), int(j), float(val)))
        elif section == "BCOORD":
            for _ in range(int(take())):
                i, val = take().split()
                b_entries[int(i)] = float(val)
        else:
            raise ParseError(f"unknown CBF section {section!r}")

    names = [col_names.get(j, f"x{j}") for j in range(n_vars)]
    for name in names:
        problem.add_column(name)
    problem.set_objective({names[j]: v for j, v in obj.items()})
    by_row: dict[int, dict[str, float]] = {}
    for i, j, val in a_entries:
        by_row.setdefault(i, {})[names[j]] = val
    start = 0
    for idx, (kind, dim) in enumerate(cone_specs):
        label = block_labels[idx] if idx < len(block_labels) else f"block{idx}"
        rows = [
            (by_row.get(start + r, {}), b_entries.get(start + r, 0.0))
            for r in range(dim)
        ]
        problem.add_block(label, kind, rows)
        start += dim
    return problem
