"""Damage-scenario enumeration and connectivity analysis of damaged grids.

Scenarios are k-subsets of line ids in colexicographic order, so the stream
is deterministic and a scenario is recoverable from its ordinal alone.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import cached_property
from math import comb
from typing import Iterator

from .caseio import Generator, Line, Load, Network

__all__ = [
    "DamageScenario",
    "DamagedNetwork",
    "enumerate_damage",
    "scenario_count",
    "scenario_from_ordinal",
    "sample_damage",
    "apply_damage",
]


@dataclass(frozen=True)
class DamageScenario:
    """A set of k removed lines plus its rank in colex enumeration order."""

    line_ids: tuple[int, ...]  # sorted ascending
    ordinal: int

    def __post_init__(self):
        if list(self.line_ids) != sorted(set(self.line_ids)):
            raise ValueError("line_ids must be sorted and distinct")


@dataclass(frozen=True)
class DamagedNetwork:
    base: Network
    removed: DamageScenario
    components: tuple[tuple[int, ...], ...]  # bus ids, each sorted ascending
    reference_bus_per_component: tuple[int, ...]

    @cached_property
    def surviving_lines(self) -> tuple[Line, ...]:
        gone = set(self.removed.line_ids)
        return tuple(ln for ln in self.base.lines if ln.id not in gone)

    @property
    def loads(self) -> tuple[Load, ...]:
        return self.base.loads

    @property
    def generators(self) -> tuple[Generator, ...]:
        return self.base.generators


def _check_k(network: Network, k: int) -> None:
    if not 1 <= k <= len(network.lines):
        raise ValueError(f"k={k} out of range 1..{len(network.lines)}")


def scenario_count(network: Network, k: int) -> int:
    _check_k(network, k)
    return comb(len(network.lines), k)


def enumerate_damage(network: Network, k: int) -> Iterator[DamageScenario]:
    """All C(|L|, k) scenarios in colexicographic order, ordinals from 0."""
    _check_k(network, k)
    ids = tuple(sorted(ln.id for ln in network.lines))

    def colex(prefix_len: int, size: int) -> Iterator[tuple[int, ...]]:
        if size == 0:
            yield ()
            return
        for i in range(size - 1, prefix_len):
            for sub in colex(i, size - 1):
                yield sub + (ids[i],)

    for ordinal, subset in enumerate(colex(len(ids), k)):
        yield DamageScenario(line_ids=subset, ordinal=ordinal)


def scenario_from_ordinal(network: Network, k: int, ordinal: int) -> DamageScenario:
    """Unrank a colex ordinal via the combinatorial number system."""
    _check_k(network, k)
    total = comb(len(network.lines), k)
    if not 0 <= ordinal < total:
        raise ValueError(f"ordinal {ordinal} out of range 0..{total - 1}")
    ids = tuple(sorted(ln.id for ln in network.lines))
    rest = ordinal
    positions: list[int] = []
    for size in range(k, 0, -1):
        pos = size - 1
        while comb(pos + 1, size) <= rest:
            pos += 1
        positions.append(pos)
        rest -= comb(pos, size)
    positions.reverse()
    return DamageScenario(
        line_ids=tuple(ids[p] for p in positions), ordinal=ordinal
    )


def sample_damage(
    network: Network, k: int, count: int, seed: int
) -> Iterator[DamageScenario]:
    """Deterministic sample of distinct scenarios, ascending by ordinal."""
    total = scenario_count(network, k)
    if not 1 <= count <= total:
        raise ValueError(f"sample count {count} out of range 1..{total}")
    rng = random.Random(seed)
    for ordinal in sorted(rng.sample(range(total), count)):
        yield scenario_from_ordinal(network, k, ordinal)


def apply_damage(network: Network, scenario: DamageScenario) -> DamagedNetwork:
    """Remove the scenario's lines and compute connected components.

    Each component gets one angle-reference bus: the lowest bus id hosting a
    generator, falling back to the lowest bus id.
    """
    valid = {ln.id for ln in network.lines}
    missing = set(scenario.line_ids) - valid
    if missing:
        raise ValueError(f"scenario removes unknown lines {sorted(missing)}")

    gone = set(scenario.line_ids)
    adj: dict[int, list[int]] = {b.id: [] for b in network.buses}
    for ln in network.lines:
        if ln.id in gone:
            continue
        adj[ln.from_bus].append(ln.to_bus)
        adj[ln.to_bus].append(ln.from_bus)

    components: list[tuple[int, ...]] = []
    unseen = set(adj)
    while unseen:
        start = min(unseen)
        stack = [start]
        unseen.discard(start)
        comp = [start]
        while stack:
            for nb in adj[stack.pop()]:
                if nb in unseen:
                    unseen.discard(nb)
                    comp.append(nb)
                    stack.append(nb)
        components.append(tuple(sorted(comp)))
    components.sort(key=lambda c: c[0])

    gen_buses = {g.bus for g in network.generators}
    refs = tuple(
        min((b for b in comp if b in gen_buses), default=comp[0]) for comp in components
    )
    return DamagedNetwork(
        base=network,
        removed=scenario,
        components=tuple(components),
        reference_bus_per_component=refs,
    )
