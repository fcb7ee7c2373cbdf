"""Canonical conic programs for load-shed optimization.

Canonical form: minimize c'x subject to A x = b with x in a product of
free, nonnegative, second-order and rotated second-order cones.  All
inequalities are realized as equality rows plus nonnegative slack columns.

Variable naming conventions (see ``var_index``): ``angle[b]`` bus phase
angles, ``gen[g]`` generator outputs, ``shed[i]`` per-load shed,
``epigraph_t[i]`` power-epigraph objective terms, ``sum_shed`` the total
shed introduced by the fairness cone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .caseio import Network
from .scenario import DamagedNetwork

__all__ = [
    "Cone",
    "ConicProgram",
    "ShedVector",
    "PowerGadget",
    "kappa",
    "build_mls",
    "build_mls_pnorm",
    "build_mls_minmax",
    "build_fair_mls",
    "add_eps_fairness",
    "power_epigraph",
    "extract_shed",
]

FREE = "free"
NONNEG = "nonneg"
SOC = "soc"
RSOC = "rsoc"

_SHED_CLAMP_TOL = 1e-7


@dataclass(frozen=True)
class Cone:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in (FREE, NONNEG, SOC, RSOC):
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("cone dimension must be positive")
        if self.kind == SOC and self.dim < 2:
            raise ValueError("SOC cone needs dim >= 2")
        if self.kind == RSOC and self.dim < 3:
            raise ValueError("rotated SOC cone needs dim >= 3")


@dataclass(frozen=True)
class ConicProgram:
    """Immutable canonical conic program."""

    objective_c: np.ndarray
    equality_A: sp.csr_matrix
    equality_b: np.ndarray
    cone_spec: tuple[Cone, ...]
    var_index: dict[str, int]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = len(self.objective_c)
        if sum(c.dim for c in self.cone_spec) != n:
            raise ValueError("cone dimensions do not cover the variable vector")
        if self.equality_A.shape != (len(self.equality_b), n):
            raise ValueError("A shape inconsistent with b and c")
        if len(set(self.var_index.values())) != len(self.var_index):
            raise ValueError("var_index is not injective")
        for name, j in self.var_index.items():
            if not 0 <= j < n:
                raise ValueError(f"var_index[{name!r}] out of range")

    @property
    def n(self) -> int:
        return len(self.objective_c)

    @property
    def m(self) -> int:
        return len(self.equality_b)

    def cone_of_column(self, j: int) -> Cone:
        start = 0
        for cone in self.cone_spec:
            if start <= j < start + cone.dim:
                return cone
            start += cone.dim
        raise IndexError(j)

    def shed_columns(self) -> dict[int, int]:
        """Map load id -> column index, for all shed variables."""
        out: dict[int, int] = {}
        for name, j in self.var_index.items():
            if name.startswith("shed["):
                out[int(name[5:-1])] = j
        return out

    def to_debug_text(self) -> str:
        """Plain-text dump (cone list + sparse triplets) for golden tests."""
        lines = [f"vars {self.n} rows {self.m}"]
        lines.append("cones " + " ".join(f"{c.kind}:{c.dim}" for c in self.cone_spec))
        coo = self.equality_A.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines.append("c " + " ".join(
            f"{j}:{float(self.objective_c[j])!r}" for j in np.nonzero(self.objective_c)[0]
        ))
        for idx in order:
            lines.append(f"A {coo.row[idx]} {coo.col[idx]} {float(coo.data[idx])!r}")
        lines.append("b " + " ".join(repr(float(v)) for v in self.equality_b))
        for name in sorted(self.var_index):
            lines.append(f"var {name} {self.var_index[name]}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ShedVector:
    """Per-load shed amounts, per-unit, aligned with network load ids."""

    load_ids: tuple[int, ...]
    values: np.ndarray

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def as_dict(self) -> dict[int, float]:
        return {i: float(v) for i, v in zip(self.load_ids, self.values)}


class _Builder:
    """Accumulates columns, rows and cone blocks in insertion order."""

    def __init__(self):
        self._names: list[str] = []
        self._kinds: list[str] = []  # scalar cone kind per column
        self._blocks: list[Cone] = []  # explicit soc/rsoc blocks, in order
        self._block_boundaries: list[int] = []  # column index where block starts
        self._rows: list[dict[str, float]] = []
        self._rhs: list[float] = []
        self.index: dict[str, int] = {}

    def _add_col(self, name: str, kind: str) -> str:
        if name in self.index:
            raise ValueError(f"duplicate variable {name!r}")
        self.index[name] = len(self._names)
        self._names.append(name)
        self._kinds.append(kind)
        return name

    def free(self, name: str) -> str:
        return self._add_col(name, FREE)

    def nonneg(self, name: str) -> str:
        return self._add_col(name, NONNEG)

    def cone_block(self, kind: str, names: Sequence[str]) -> list[str]:
        if kind not in (SOC, RSOC):
            raise ValueError("cone_block is for soc/rsoc blocks")
        self._block_boundaries.append(len(self._names))
        self._blocks.append(Cone(kind, len(names)))
        for nm in names:
            self._add_col(nm, kind)
        return list(names)

    def row(self, coeffs: Mapping[str, float], rhs: float) -> None:
        self._rows.append(dict(coeffs))
        self._rhs.append(rhs)

    def build(self, objective: Mapping[str, float], meta: dict | None = None) -> ConicProgram:
        n = len(self._names)
        cones: list[Cone] = []
        block_iter = iter(zip(self._block_boundaries, self._blocks))
        next_block = next(block_iter, None)
        j = 0
        while j < n:
            if next_block is not None and next_block[0] == j:
                cones.append(next_block[1])
                j += next_block[1].dim
                next_block = next(block_iter, None)
                continue
            kind = self._kinds[j]
            run = 0
            while (
                j + run < n
                and self._kinds[j + run] == kind
                and (next_block is None or next_block[0] != j + run)
            ):
                run += 1
            cones.append(Cone(kind, run))
            j += run

        c = np.zeros(n)
        for name, val in objective.items():
            c[self.index[name]] = val
        data, rows, cols = [], [], []
        for r, coeffs in enumerate(self._rows):
            for name, val in coeffs.items():
                if val != 0.0:
                    rows.append(r)
                    cols.append(self.index[name])
                    data.append(float(val))
        A = sp.csr_matrix(
            (data, (rows, cols)), shape=(len(self._rows), n), dtype=float
        )
        return ConicProgram(
            objective_c=c,
            equality_A=A,
            equality_b=np.array(self._rhs, dtype=float),
            cone_spec=tuple(cones),
            var_index=dict(self.index),
            meta=meta or {},
        )


def _check_weights(dnet: DamagedNetwork, weights) -> np.ndarray:
    n = len(dnet.loads)
    if weights is None:
        return np.ones(n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"weights length {w.shape} does not match {n} loads")
    return w


def _mls_builder(dnet: DamagedNetwork) -> _Builder:
    """Shared DC feasible-set skeleton: balance, boxes, line limits, refs."""
    net = dnet.base
    b = _Builder()
    for bus in net.buses:
        b.free(f"angle[{bus.id}]")
    for g in net.generators:
        b.free(f"gen[{g.id}]")
    for d in net.loads:
        b.nonneg(f"shed[{d.id}]")
    for g in net.generators:
        b.nonneg(f"slack_gen_ub[{g.id}]")
        b.nonneg(f"slack_gen_lb[{g.id}]")
    for d in net.loads:
        b.nonneg(f"slack_shed_ub[{d.id}]")
    for ln in dnet.surviving_lines:
        if math.isfinite(ln.rating_pmax):
            b.nonneg(f"slack_flow_ub[{ln.id}]")
            b.nonneg(f"slack_flow_lb[{ln.id}]")

    # nodal balance: gen + shed - line outflow = demand, per bus
    balance: dict[int, dict[str, float]] = {bus.id: {} for bus in net.buses}
    demand: dict[int, float] = {bus.id: 0.0 for bus in net.buses}
    for g in net.generators:
        row = balance[g.bus]
        row[f"gen[{g.id}]"] = row.get(f"gen[{g.id}]", 0.0) + 1.0
    for d in net.loads:
        row = balance[d.bus]
        row[f"shed[{d.id}]"] = row.get(f"shed[{d.id}]", 0.0) + 1.0
        demand[d.bus] += d.d_max
    for ln in dnet.surviving_lines:
        for here, there in ((ln.from_bus, ln.to_bus), (ln.to_bus, ln.from_bus)):
            row = balance[here]
            row[f"angle[{here}]"] = row.get(f"angle[{here}]", 0.0) - ln.susceptance_b
            row[f"angle[{there}]"] = row.get(f"angle[{there}]", 0.0) + ln.susceptance_b
    for bus in net.buses:
        b.row(balance[bus.id], demand[bus.id])

    for ref in dnet.reference_bus_per_component:
        b.row({f"angle[{ref}]": 1.0}, 0.0)

    for g in net.generators:
        p_min = min(g.p_min, 0.0)  # islanded must-run relaxation
        b.row({f"gen[{g.id}]": 1.0, f"slack_gen_ub[{g.id}]": 1.0}, g.p_max)
        b.row({f"gen[{g.id}]": -1.0, f"slack_gen_lb[{g.id}]": 1.0}, -p_min)
    for d in net.loads:
        b.row({f"shed[{d.id}]": 1.0, f"slack_shed_ub[{d.id}]": 1.0}, d.d_max)
    for ln in dnet.surviving_lines:
        if not math.isfinite(ln.rating_pmax):
            continue
        flow = {
            f"angle[{ln.from_bus}]": ln.susceptance_b,
            f"angle[{ln.to_bus}]": -ln.susceptance_b,
        }
        up = dict(flow)
        up[f"slack_flow_ub[{ln.id}]"] = 1.0
        b.row(up, ln.rating_pmax)
        lo = {k: -v for k, v in flow.items()}
        lo[f"slack_flow_lb[{ln.id}]"] = 1.0
        b.row(lo, ln.rating_pmax)
    return b


def _base_meta(dnet: DamagedNetwork, variant: str) -> dict:
    return {
        "variant": variant,
        "ordinal": dnet.removed.ordinal,
        "shed_upper": {d.id: d.d_max for d in dnet.base.loads},
    }


def build_mls(dnet: DamagedNetwork, weights=None) -> ConicProgram:
    """Minimum (weighted) total load shed over the damaged DC feasible set."""
    w = _check_weights(dnet, weights)
    b = _mls_builder(dnet)
    objective = {f"shed[{d.id}]": w[i] for i, d in enumerate(dnet.loads)}
    return b.build(objective, meta=_base_meta(dnet, "mls"))


@dataclass(frozen=True)
class PowerGadget:
    """Rotated-SOC tower enforcing t >= d**p for d >= 0.

    Each cone is a (v, w, u) term triple meaning u^2 <= v*w.  Terms are
    "t", "d", "one" or ("aux", j) with j < aux_count.  The tower realizes
    d <= geomean of 2**ceil(log2 p) terms: one t, (p-1) ones and the
    balance copies of d; adjacent equal pairs collapse without a cone.
    """

    p: int
    aux_count: int
    cones: tuple[tuple, ...]


def power_epigraph(p: int) -> PowerGadget:
    if not (isinstance(p, int) and p >= 2):
        raise ValueError(f"power gadget needs integer p >= 2, got {p!r}")
    levels = (p - 1).bit_length()  # ceil(log2 p)
    leaves = ["t"] + ["one"] * (p - 1) + ["d"] * (2**levels - p)
    cones: list[tuple] = []
    aux = 0

    def combine(a, b):
        nonlocal aux
        if a == b == "one":
            return "one"
        if a == b == "d":
            return "d"
        out = ("aux", aux)
        aux += 1
        cones.append((a, b, out))
        return out

    items = leaves
    while len(items) > 2:
        # keep identical terms adjacent so constant pairs collapse
        items = sorted(items, key=lambda t: {"t": 0, "one": 1, "d": 2}.get(t, 3) if isinstance(t, str) else 4)
        items = [combine(items[i], items[i + 1]) for i in range(0, len(items), 2)]
    cones.append((items[0], items[1], "d"))  # root: d^2 <= product of halves
    return PowerGadget(p=p, aux_count=aux, cones=tuple(cones))


def _attach_power_gadget(
    b: _Builder,
    gadget: PowerGadget,
    tag: str,
    t_name: str,
    input_coeffs: Mapping[str, float],
) -> None:
    """Materialize a gadget: 3 cone columns per node, tie rows for shared terms.

    The epigraph variable t is placed directly at its (unique) leg position;
    every other term occurrence gets a tie row to its canonical column.
    """
    aux_col: dict[int, str] = {}
    t_placed = False
    ties: list[tuple[str, object]] = []

    for ci, (v_term, w_term, u_term) in enumerate(gadget.cones):
        names = []
        for pos, term in (("v", v_term), ("w", w_term), ("u", u_term)):
            col = f"pow_{pos}[{ci}]{tag}"
            if term == "t" and not t_placed:
                col = t_name
                t_placed = True
            names.append(col)
            if col == t_name:
                continue
            if isinstance(term, tuple):  # aux node
                if pos == "u":
                    aux_col[term[1]] = col  # this column *is* the aux variable
                else:
                    ties.append((col, term))
            elif term == "one":
                ties.append((col, "one"))
            elif term == "d":
                ties.append((col, "d"))
            elif term == "t":
                ties.append((col, "t"))
        b.cone_block(RSOC, names)

    for col, term in ties:
        if term == "one":
            b.row({col: 1.0}, 1.0)
        elif term == "d":
            coeffs = {col: 1.0}
            for name, c in input_coeffs.items():
                coeffs[name] = coeffs.get(name, 0.0) - c
            b.row(coeffs, 0.0)
        elif term == "t":
            b.row({col: 1.0, t_name: -1.0}, 0.0)
        else:
            b.row({col: 1.0, aux_col[term[1]]: -1.0}, 0.0)


def build_mls_pnorm(dnet: DamagedNetwork, p: int, weights=None) -> ConicProgram:
    """Minimize sum_i (w_i d_i)^p via per-load rotated-SOC epigraph towers."""
    w = _check_weights(dnet, weights)
    gadget = power_epigraph(p)
    b = _mls_builder(dnet)
    objective: dict[str, float] = {}
    for i, d in enumerate(dnet.loads):
        t_name = f"epigraph_t[{d.id}]"
        _attach_power_gadget(
            b, gadget, tag=f"@{d.id}", t_name=t_name,
            input_coeffs={f"shed[{d.id}]": w[i]},
        )
        objective[t_name] = 1.0
    meta = _base_meta(dnet, f"pnorm_{p}")
    meta["p"] = p
    return b.build(objective, meta=meta)


def build_mls_minmax(dnet: DamagedNetwork, weights=None) -> ConicProgram:
    """Minimize the largest (weighted) individual shed; linear reformulation."""
    w = _check_weights(dnet, weights)
    b = _mls_builder(dnet)
    b.nonneg("minmax_y")
    for i, d in enumerate(dnet.loads):
        b.nonneg(f"slack_minmax[{d.id}]")
        b.row(
            {f"shed[{d.id}]": w[i], "minmax_y": -1.0, f"slack_minmax[{d.id}]": 1.0},
            0.0,
        )
    return b.build({"minmax_y": 1.0}, meta=_base_meta(dnet, "minmax"))


def kappa(epsilon: float, n_loads: int) -> float:
    """Fairness multiplier: convex combination of 1 and sqrt(n)."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon {epsilon} outside [0, 1]")
    return 1.0 - epsilon + epsilon * math.sqrt(n_loads)


def add_eps_fairness(program: ConicProgram, epsilon: float) -> ConicProgram:
    """Append the fairness cone kappa * ||d||_2 <= sum(d) to a built program.

    The cone always acts on the raw shed vector; n is the full load count.
    Returns a new program (inputs are immutable).
    """
    sheds = program.shed_columns()
    if not sheds:
        raise ValueError("program has no shed variables")
    if "sum_shed" in program.var_index:
        raise ValueError("program already carries a fairness cone")
    n = len(sheds)
    kap = kappa(epsilon, n)
    load_ids = sorted(sheds)

    n_old = program.n
    m_old = program.m
    extra_cols = 1 + (n + 1)  # sum_shed + SOC block
    n_new = n_old + extra_cols
    sum_col = n_old
    cone_first = n_old + 1

    var_index = dict(program.var_index)
    var_index["sum_shed"] = sum_col
    var_index["fair_cone[0]"] = cone_first
    for pos, load_id in enumerate(load_ids, start=1):
        var_index[f"fair_cone[{pos}]"] = cone_first + pos

    rows = []
    # sum_shed = sum_i d_i
    coeffs = {sum_col: 1.0}
    for load_id in load_ids:
        coeffs[sheds[load_id]] = -1.0
    rows.append((coeffs, 0.0))
    # kappa * cone0 = sum_shed  =>  cone0 = sum_shed / kappa
    rows.append(({cone_first: kap, sum_col: -1.0}, 0.0))
    for pos, load_id in enumerate(load_ids, start=1):
        rows.append(({cone_first + pos: 1.0, sheds[load_id]: -1.0}, 0.0))

    A = program.equality_A.tocoo()
    data = list(A.data)
    ridx = list(A.row)
    cidx = list(A.col)
    rhs = list(program.equality_b)
    for r_off, (coeffs, rv) in enumerate(rows):
        for col, val in coeffs.items():
            ridx.append(m_old + r_off)
            cidx.append(col)
            data.append(val)
        rhs.append(rv)

    meta = dict(program.meta)
    meta["epsilon"] = epsilon
    meta["kappa"] = kap
    meta["variant"] = f"{program.meta.get('variant', 'mls')}+eps"
    return ConicProgram(
        objective_c=np.concatenate([program.objective_c, np.zeros(extra_cols)]),
        equality_A=sp.csr_matrix(
            (data, (ridx, cidx)), shape=(m_old + len(rows), n_new), dtype=float
        ),
        equality_b=np.array(rhs, dtype=float),
        cone_spec=program.cone_spec + (Cone(FREE, 1), Cone(SOC, n + 1)),
        var_index=var_index,
        meta=meta,
    )


def build_fair_mls(dnet: DamagedNetwork, epsilon: float, weights=None) -> ConicProgram:
    """Minimum (weighted) shed subject to the epsilon-fairness cone."""
    return add_eps_fairness(build_mls(dnet, weights), epsilon)


def extract_shed(program: ConicProgram, result) -> ShedVector:
    """Read the shed vector out of an optimal solve, clamped to its box."""
    from .solver import SolveStatus

    if result.status is not SolveStatus.OPTIMAL:
        raise ValueError(f"cannot extract shed from status {result.status.name}")
    sheds = program.shed_columns()
    if not sheds:
        raise ValueError("program has no shed variables")
    upper: Mapping[int, float] = program.meta.get("shed_upper", {})
    load_ids = tuple(sorted(sheds))
    values = np.empty(len(load_ids))
    for i, load_id in enumerate(load_ids):
        v = float(result.primal_x[sheds[load_id]])
        hi = upper.get(load_id, math.inf)
        if v < -_SHED_CLAMP_TOL or v > hi + _SHED_CLAMP_TOL:
            raise ValueError(
                f"shed[{load_id}] = {v} outside [0, {hi}] beyond tolerance"
            )
        values[i] = min(max(v, 0.0), hi)
    return ShedVector(load_ids=load_ids, values=values)
