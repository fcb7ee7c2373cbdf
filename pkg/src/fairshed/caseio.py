"""MATPOWER case-file parsing into a validated per-unit network model.

Only the fields needed for DC load-shed studies are read: ``mpc.baseMVA``
and the ``mpc.bus``, ``mpc.gen``, ``mpc.branch`` matrices.  Everything else
(gencost, AC parameters, shunts, tap ratios) is parsed past and ignored.
All MW quantities are stored per-unit on the system base.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "Bus",
    "Line",
    "Generator",
    "Load",
    "Network",
    "CaseFormatError",
    "parse_case",
    "parse_case_file",
    "read_weights",
    "validate",
    "bundled_case_path",
]


class CaseFormatError(ValueError):
    """Case text violates the supported MATPOWER subset."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True)
class Bus:
    id: int
    is_reference: bool = False


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    reactance_x: float
    susceptance_b: float
    rating_pmax: float  # per-unit; math.inf means unlimited (rateA = 0)


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    p_min: float
    p_max: float


@dataclass(frozen=True)
class Load:
    id: int  # 1-based, order of appearance in the bus table
    bus: int
    d_max: float
    weight: float = 1.0


@dataclass(frozen=True)
class Network:
    """Immutable per-unit network model; safe to share across workers."""

    base_mva: float
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    loads: tuple[Load, ...]

    @cached_property
    def bus_ids(self) -> frozenset[int]:
        return frozenset(b.id for b in self.buses)

    @cached_property
    def gens_at(self) -> dict[int, tuple[Generator, ...]]:
        out: dict[int, list[Generator]] = {}
        for g in self.generators:
            out.setdefault(g.bus, []).append(g)
        return {b: tuple(gs) for b, gs in out.items()}

    @cached_property
    def loads_at(self) -> dict[int, tuple[Load, ...]]:
        out: dict[int, list[Load]] = {}
        for d in self.loads:
            out.setdefault(d.bus, []).append(d)
        return {b: tuple(ds) for b, ds in out.items()}

    @property
    def n_loads(self) -> int:
        return len(self.loads)

    def demand_vector(self) -> np.ndarray:
        """Per-unit d_max for loads 1..n, in load-id order."""
        return np.array([d.d_max for d in self.loads], dtype=float)


def _tokenize_matrix_rows(
    lines: list[str], start: int, name: str
) -> tuple[list[tuple[int, list[float]]], int]:
    """Collect numeric rows of a bracketed matrix starting after ``[``.

    Returns (rows, index_after_closing) where each row carries the source
    line number for error reporting.
    """
    rows: list[tuple[int, list[float]]] = []
    i = start
    while i < len(lines):
        raw = lines[i].split("%", 1)[0].strip()
        i += 1
        if not raw:
            continue
        closed = "]" in raw
        raw = raw.split("]", 1)[0]
        for piece in raw.split(";"):
            piece = piece.strip()
            if not piece:
                continue
            try:
                rows.append((i, [float(tok) for tok in piece.split()]))
            except ValueError:
                raise CaseFormatError(
                    f"non-numeric token in mpc.{name} row", line_no=i
                ) from None
        if closed:
            return rows, i
    raise CaseFormatError(f"mpc.{name} matrix not terminated by '];'", line_no=start)


def _require_cols(row: list[float], n: int, name: str, line_no: int) -> None:
    if len(row) < n:
        raise CaseFormatError(
            f"mpc.{name} row has {len(row)} columns, need at least {n}", line_no=line_no
        )


def parse_case(text: str) -> Network:
    """Parse MATPOWER case text into a per-unit :class:`Network`.

    Raises :class:`CaseFormatError` with a line number for syntax errors,
    zero branch reactance, dangling bus references, or a non-positive
    system base.
    """
    src = text.splitlines()
    base_mva: float | None = None
    matrices: dict[str, list[tuple[int, list[float]]]] = {}

    i = 0
    while i < len(src):
        raw = src[i].split("%", 1)[0].strip()
        line_no = i + 1
        i += 1
        if not raw or not raw.startswith("mpc."):
            continue
        head, _, rest = raw.partition("=")
        field = head.strip()[4:]
        rest = rest.strip()
        if field == "baseMVA":
            try:
                base_mva = float(rest.rstrip(";").strip())
            except ValueError:
                raise CaseFormatError("malformed mpc.baseMVA", line_no=line_no) from None
        elif rest.startswith("["):
            body = rest[1:].strip()
            if body:  # matrix content may begin on the same line
                src.insert(i, body)
            rows, i = _tokenize_matrix_rows(src, i, field)
            matrices[field] = rows
        # scalar/string fields other than baseMVA are ignored

    if base_mva is None:
        raise CaseFormatError("missing mpc.baseMVA")
    if base_mva <= 0:
        raise CaseFormatError(f"non-positive baseMVA: {base_mva}")
    for required in ("bus", "gen", "branch"):
        if required not in matrices:
            raise CaseFormatError(f"missing mpc.{required} matrix")

    buses: list[Bus] = []
    loads: list[Load] = []
    for line_no, row in matrices["bus"]:
        _require_cols(row, 3, "bus", line_no)
        bus_id = int(row[0])
        bus_type = int(row[1])
        buses.append(Bus(id=bus_id, is_reference=(bus_type == 3)))
        pd_mw = row[2]
        if pd_mw > 0.0:
            loads.append(Load(id=len(loads) + 1, bus=bus_id, d_max=pd_mw / base_mva))
    known = {b.id for b in buses}

    gens: list[Generator] = []
    for line_no, row in matrices["gen"]:
        _require_cols(row, 10, "gen", line_no)
        bus_id = int(row[0])
        if bus_id not in known:
            raise CaseFormatError(f"generator references unknown bus {bus_id}", line_no)
        gens.append(
            Generator(
                id=len(gens) + 1,
                bus=bus_id,
                p_min=row[9] / base_mva,
                p_max=row[8] / base_mva,
            )
        )

    branches: list[Line] = []
    for line_no, row in matrices["branch"]:
        _require_cols(row, 11, "branch", line_no)
        status = int(row[10])
        if status == 0:  # pre-damaged lines are not candidates for scenario damage
            continue
        f_bus, t_bus = int(row[0]), int(row[1])
        for b in (f_bus, t_bus):
            if b not in known:
                raise CaseFormatError(f"branch references unknown bus {b}", line_no)
        x = row[3]
        if x == 0.0:
            raise CaseFormatError(f"zero reactance on branch {f_bus}-{t_bus}", line_no)
        rate_a = row[5]
        if rate_a < 0:
            raise CaseFormatError(f"negative rating on branch {f_bus}-{t_bus}", line_no)
        branches.append(
            Line(
                id=len(branches) + 1,
                from_bus=f_bus,
                to_bus=t_bus,
                reactance_x=x,
                susceptance_b=1.0 / x,
                rating_pmax=math.inf if rate_a == 0 else rate_a / base_mva,
            )
        )

    return Network(
        base_mva=base_mva,
        buses=tuple(buses),
        lines=tuple(branches),
        generators=tuple(gens),
        loads=tuple(loads),
    )


def parse_case_file(path: str | Path) -> Network:
    return parse_case(Path(path).read_text())


def read_weights(source: str | Path | io.TextIOBase, network: Network) -> np.ndarray:
    """Read a ``load_id,weight`` CSV and return weights aligned to the load set.

    Loads absent from the file default to weight 1.0.
    """
    if isinstance(source, io.TextIOBase):
        fh = source
    else:
        fh = open(source, newline="")
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != [
            "load_id",
            "weight",
        ]:
            raise ValueError("weights file must have header 'load_id,weight'")
        by_id: dict[int, float] = {}
        for rec in reader:
            load_id = int(rec["load_id"])
            weight = float(rec["weight"])
            if load_id in by_id:
                raise ValueError(f"duplicate weight for load {load_id}")
            if weight < 0:
                raise ValueError(f"negative weight for load {load_id}")
            by_id[load_id] = weight
    valid = {d.id for d in network.loads}
    unknown = sorted(set(by_id) - valid)
    if unknown:
        raise ValueError(f"weights reference unknown load ids {unknown}")
    return np.array([by_id.get(d.id, 1.0) for d in network.loads], dtype=float)


def validate(network: Network) -> list[str]:
    """Report all type-invariant violations; empty list means valid."""
    violations: list[str] = []
    seen: set[int] = set()
    for b in network.buses:
        if b.id in seen:
            violations.append(f"duplicate bus id {b.id}")
        seen.add(b.id)
    if network.base_mva <= 0:
        violations.append(f"non-positive base_mva {network.base_mva}")
    for ln in network.lines:
        if ln.reactance_x == 0:
            violations.append(f"line {ln.id}: zero reactance")
        if not math.isfinite(ln.susceptance_b):
            violations.append(f"line {ln.id}: non-finite susceptance")
        if not ln.rating_pmax > 0:
            violations.append(f"line {ln.id}: non-positive rating")
        for b in (ln.from_bus, ln.to_bus):
            if b not in network.bus_ids:
                violations.append(f"line {ln.id}: unknown bus {b}")
    for g in network.generators:
        if g.p_min > g.p_max:
            violations.append(f"generator {g.id}: p_min {g.p_min} > p_max {g.p_max}")
        if g.bus not in network.bus_ids:
            violations.append(f"generator {g.id}: unknown bus {g.bus}")
    for d in network.loads:
        if not d.d_max > 0:
            violations.append(f"load {d.id}: non-positive demand {d.d_max}")
        if d.weight < 0:
            violations.append(f"load {d.id}: negative weight {d.weight}")
        if d.bus not in network.bus_ids:
            violations.append(f"load {d.id}: unknown bus {d.bus}")
    return violations


def bundled_case_path(name: str = "case14_ieee") -> Path:
    """Path of a case file shipped with the package."""
    path = Path(__file__).parent / "data" / f"{name}.m"
    if not path.exists():
        raise FileNotFoundError(f"no bundled case named {name!r}")
    return path
