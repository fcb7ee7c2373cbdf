import math
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from fairshed.caseio import parse_case, parse_case_file, bundled_case_path
from fairshed.scenario import (
    DamageScenario,
    apply_damage,
    enumerate_damage,
    sample_damage,
    scenario_count,
    scenario_from_ordinal,
)


def ring_case(n_bus: int, extra_gen_buses=()) -> str:
    """Ring network: bus i - bus i+1, generator at bus 1 (+extras)."""
    buses = "\n".join(
        f" {i} {3 if i == 1 else 1} {10 if i > 1 else 0} 0 0 0 1 1 0 69 1 1.1 0.9;"
        for i in range(1, n_bus + 1)
    )
    gens = "\n".join(
        f" {b} 0 0 0 0 1 100 1 500 0;" for b in (1, *extra_gen_buses)
    )
    lines = "\n".join(
        f" {i} {i % n_bus + 1} 0 0.1 0 0 0 0 0 0 1 -30 30;" for i in range(1, n_bus + 1)
    )
    return (
        "mpc.baseMVA = 100;\n"
        f"mpc.bus = [\n{buses}\n];\n"
        f"mpc.gen = [\n{gens}\n];\n"
        f"mpc.branch = [\n{lines}\n];\n"
    )


def test_colex_order_small():
    net = parse_case(ring_case(4))
    scns = list(enumerate_damage(net, 2))
    assert [s.line_ids for s in scns] == [
        (1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4), (1, 5), (2, 5), (3, 5),
        (4, 5), (1, 6), (2, 6), (3, 6), (4, 6), (5, 6),
    ][: len(scns)]
    assert [s.ordinal for s in scns] == list(range(len(scns)))


def test_census_matches_binomial():
    net = parse_case_file(bundled_case_path())
    assert scenario_count(net, 5) == math.comb(20, 5) == 15504
    assert sum(1 for _ in enumerate_damage(net, 2)) == math.comb(20, 2)


def test_single_full_scenario():
    net = parse_case(ring_case(3))
    scns = list(enumerate_damage(net, 3))
    assert len(scns) == 1 and scns[0].line_ids == (1, 2, 3)


def test_k_out_of_range():
    net = parse_case(ring_case(3))
    with pytest.raises(ValueError):
        list(enumerate_damage(net, 0))
    with pytest.raises(ValueError):
        list(enumerate_damage(net, 4))


@settings(max_examples=25, deadline=None)
@given(n=st.integers(4, 9), k=st.integers(1, 4))
def test_unranking_inverts_enumeration(n, k):
    net = parse_case(ring_case(n))
    for scn in enumerate_damage(net, k):
        again = scenario_from_ordinal(net, k, scn.ordinal)
        assert again == scn


def test_sampling_deterministic_sorted():
    net = parse_case_file(bundled_case_path())
    a = list(sample_damage(net, 5, 50, seed=7))
    b = list(sample_damage(net, 5, 50, seed=7))
    assert a == b
    assert [s.ordinal for s in a] == sorted({s.ordinal for s in a})
    c = list(sample_damage(net, 5, 50, seed=8))
    assert a != c


def test_apply_damage_partition_and_refs():
    net = parse_case(ring_case(6, extra_gen_buses=(4,)))
    # removing two opposite ring lines splits into two arcs
    scn = DamageScenario(line_ids=(1, 4), ordinal=0)
    dnet = apply_damage(net, scn)
    assert sorted(b for comp in dnet.components for b in comp) == [1, 2, 3, 4, 5, 6]
    assert len(dnet.components) == 2
    # reference = lowest generator bus per component
    assert dnet.reference_bus_per_component == (1, 2) or dnet.reference_bus_per_component == (1, 4)
    for comp, ref in zip(dnet.components, dnet.reference_bus_per_component):
        assert ref in comp


def test_apply_damage_connected_keeps_slack():
    net = parse_case_file(bundled_case_path())
    scn = DamageScenario(line_ids=(16, 17, 18, 19, 20), ordinal=0)
    dnet = apply_damage(net, scn)
    # removing the low-voltage tail lines still leaves a generator-led component
    assert dnet.reference_bus_per_component[0] == 1


def test_two_bus_island():
    net = parse_case(ring_case(3))
    dnet = apply_damage(net, DamageScenario(line_ids=(1, 2), ordinal=0))
    sizes = sorted(len(c) for c in dnet.components)
    assert sizes == [1, 2]


def test_unknown_line_rejected():
    net = parse_case(ring_case(3))
    with pytest.raises(ValueError, match="unknown lines"):
        apply_damage(net, DamageScenario(line_ids=(9,), ordinal=0))


@settings(max_examples=20, deadline=None)
@given(st.data())
def test_monotone_components(data):
    n = data.draw(st.integers(4, 8))
    net = parse_case(ring_case(n))
    ids = [ln.id for ln in net.lines]
    k = data.draw(st.integers(1, min(4, len(ids) - 1)))
    subset = tuple(sorted(data.draw(
        st.lists(st.sampled_from(ids), min_size=k, max_size=k, unique=True))))
    extra = data.draw(st.sampled_from([i for i in ids if i not in subset]))
    small = apply_damage(net, DamageScenario(line_ids=subset, ordinal=0))
    grown = apply_damage(
        net, DamageScenario(line_ids=tuple(sorted(subset + (extra,))), ordinal=0)
    )
    assert len(grown.components) >= len(small.components)


def test_enumeration_census_property():
    # census identity over a range of sizes
    for n in (4, 6, 9):
        net = parse_case(ring_case(n))
        for k in range(1, min(5, n) + 1):
            assert sum(1 for _ in enumerate_damage(net, k)) == math.comb(n, k)
