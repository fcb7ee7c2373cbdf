import math

import numpy as np
import pytest
import scipy.sparse as sp

from fairshed.caseio import parse_case
from fairshed.conic import (
    FREE,
    NONNEG,
    RSOC,
    Cone,
    ConicProgram,
    add_eps_fairness,
    build_fair_mls,
    build_mls,
    build_mls_minmax,
    build_mls_pnorm,
    extract_shed,
    kappa,
    power_epigraph,
)
from fairshed.scenario import DamageScenario, apply_damage, scenario_from_ordinal
from fairshed.solver import SolveStatus, solve


def case_text(buses, gens, lines, base=100):
    fmt_bus = "\n".join(
        f" {i} {t} {pd} 0 0 0 1 1 0 69 1 1.1 0.9;" for i, t, pd in buses
    )
    fmt_gen = "\n".join(f" {b} 0 0 0 0 1 100 1 {pmax} 0;" for b, pmax in gens)
    fmt_br = "\n".join(
        f" {f} {t} 0 {x} 0 {r} 0 0 0 0 1 -30 30;" for f, t, x, r in lines
    )
    return (
        f"mpc.baseMVA = {base};\n"
        f"mpc.bus = [\n{fmt_bus}\n];\n"
        f"mpc.gen = [\n{fmt_gen}\n];\n"
        f"mpc.branch = [\n{fmt_br}\n];\n"
    )


def undamaged(net):
    comp = tuple(sorted(b.id for b in net.buses))
    gen_buses = {g.bus for g in net.generators}
    ref = min((b for b in comp if b in gen_buses), default=comp[0])
    from fairshed.scenario import DamagedNetwork

    return DamagedNetwork(
        base=net,
        removed=DamageScenario(line_ids=(), ordinal=0),
        components=(comp,),
        reference_bus_per_component=(ref,),
    )


TWO_BUS_TIGHT = case_text(
    buses=[(1, 3, 0), (2, 1, 50)], gens=[(1, 200)], lines=[(1, 2, 0.1, 30)]
)
TWO_BUS_WIDE = case_text(
    buses=[(1, 3, 0), (2, 1, 50)], gens=[(1, 200)], lines=[(1, 2, 0.1, 100)]
)
# one generator short of demand, loads on two buses, unlimited transfer
TRANSFERABLE = case_text(
    buses=[(1, 3, 0), (2, 1, 40), (3, 1, 40)],
    gens=[(1, 40)],
    lines=[(1, 2, 0.1, 0), (1, 3, 0.1, 0), (2, 3, 0.1, 0)],
)


def optimal_shed(prog):
    res = solve(prog)
    assert res.status is SolveStatus.OPTIMAL, res.status
    return extract_shed(prog, res)


def dc_feasible(net, dnet, shed_fixed, tol=1e-9):
    """Independent oracle: LP feasibility of a fixed shed vector (HiGHS)."""
    from scipy.optimize import linprog

    bus_ids = [b.id for b in net.buses]
    pos = {b: i for i, b in enumerate(bus_ids)}
    nb, ng = len(bus_ids), len(net.generators)
    n = nb + ng
    rows, rhs = [], []
    for b in bus_ids:
        row = np.zeros(n)
        dem = 0.0
        for g in net.generators:
            if g.bus == b:
                row[nb + g.id - 1] += 1.0
        for d in net.loads:
            if d.bus == b:
                dem += d.d_max - shed_fixed[d.id - 1]
        for ln in dnet.surviving_lines:
            if b in (ln.from_bus, ln.to_bus):
                o = ln.to_bus if b == ln.from_bus else ln.from_bus
                row[pos[b]] -= ln.susceptance_b
                row[pos[o]] += ln.susceptance_b
        rows.append(row)
        rhs.append(dem)
    for ref in dnet.reference_bus_per_component:
        row = np.zeros(n)
        row[pos[ref]] = 1.0
        rows.append(row)
        rhs.append(0.0)
    a_ub, b_ub = [], []
    for ln in dnet.surviving_lines:
        if not math.isfinite(ln.rating_pmax):
            continue
        row = np.zeros(n)
        row[pos[ln.from_bus]] = ln.susceptance_b
        row[pos[ln.to_bus]] = -ln.susceptance_b
        a_ub.append(row)
        b_ub.append(ln.rating_pmax)
        a_ub.append(-row)
        b_ub.append(ln.rating_pmax)
    bounds = [(None, None)] * nb + [
        (min(g.p_min, 0.0), g.p_max) for g in net.generators
    ]
    r = linprog(
        np.zeros(n),
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if a_ub else None,
        A_eq=np.array(rows),
        b_eq=np.array(rhs),
        bounds=bounds,
        method="highs",
    )
    return r.status == 0


# --- baseline MLS -----------------------------------------------------------


def test_mls_capacity_exceeds_demand():
    net = parse_case(TWO_BUS_WIDE)
    shed = optimal_shed(build_mls(undamaged(net)))
    assert shed.total == pytest.approx(0.0, abs=1e-7)


def test_mls_line_limit_binds():
    net = parse_case(TWO_BUS_TIGHT)
    shed = optimal_shed(build_mls(undamaged(net)))
    # hand solution: flow capped at 0.3 pu, so shed = 0.5 - 0.3
    assert shed.total == pytest.approx(0.2, abs=1e-7)


def test_unit_weights_match_unweighted():
    net = parse_case(TRANSFERABLE)
    dnet = undamaged(net)
    a = build_mls(dnet)
    b = build_mls(dnet, weights=np.ones(2))
    assert np.array_equal(a.objective_c, b.objective_c)


def test_weight_length_mismatch():
    net = parse_case(TRANSFERABLE)
    with pytest.raises(ValueError, match="weights"):
        build_mls(undamaged(net), weights=np.ones(5))


def test_generatorless_island_sheds_fully():
    # chain 1 - 2 - 3, gen at 1; removing line 2 islands bus 3 entirely
    net = parse_case(
        case_text(
            buses=[(1, 3, 0), (2, 1, 30), (3, 1, 20)],
            gens=[(1, 100)],
            lines=[(1, 2, 0.1, 0), (2, 3, 0.1, 0)],
        )
    )
    dnet = apply_damage(net, scenario_from_ordinal(net, 1, 1))
    assert dnet.removed.line_ids == (2,)
    assert len(dnet.components) == 2
    shed = optimal_shed(build_mls(dnet))
    assert shed.as_dict() == pytest.approx({1: 0.0, 2: 0.2}, abs=1e-7)


# --- power epigraph gadget ---------------------------------------------------


def test_gadget_p2_single_cone():
    g = power_epigraph(2)
    assert len(g.cones) == 1 and g.aux_count == 0
    assert g.cones[0][2] == "d"  # root: d^2 <= t * 1


def test_gadget_p3_tower():
    g = power_epigraph(3)
    assert len(g.cones) == 3


def test_gadget_rejects_small_p():
    with pytest.raises(ValueError):
        power_epigraph(1)
    with pytest.raises(ValueError):
        power_epigraph(0)


def min_t_for(p, d_value):
    """Solve min t over the gadget with the input pinned to d_value."""
    from fairshed.conic import _attach_power_gadget, _Builder

    b = _Builder()
    b.nonneg("d")
    b.row({"d": 1.0}, d_value)
    _attach_power_gadget(
        b, power_epigraph(p), tag="@x", t_name="t", input_coeffs={"d": 1.0}
    )
    prog = b.build({"t": 1.0})
    res = solve(prog)
    assert res.status is SolveStatus.OPTIMAL
    return res.objective_primal


def test_gadget_p3_at_two():
    assert min_t_for(3, 2.0) == pytest.approx(8.0, rel=1e-6)


def test_gadget_p10_at_1p5():
    assert min_t_for(10, 1.5) == pytest.approx(1.5**10, rel=1e-6)


@pytest.mark.parametrize("p", [2, 3, 5, 10])
def test_gadget_soundness_random(p):
    rng = np.random.default_rng(100 + p)
    for d in rng.uniform(0.05, 10.0, size=25):
        t = min_t_for(p, float(d))
        assert t == pytest.approx(d**p, rel=1e-6), (p, d)


# --- p-norm and minmax builders ---------------------------------------------


def test_pnorm_prefers_equal_split():
    net = parse_case(TRANSFERABLE)
    shed = optimal_shed(build_mls_pnorm(undamaged(net), 2))
    assert shed.values == pytest.approx([0.2, 0.2], abs=1e-5)
    assert shed.total == pytest.approx(0.4, abs=1e-5)


def test_pnorm_single_load_matches_l1():
    net = parse_case(TWO_BUS_TIGHT)
    shed = optimal_shed(build_mls_pnorm(undamaged(net), 2))
    assert shed.total == pytest.approx(0.2, abs=1e-5)


def test_pnorm3_equalizes_and_matches_bruteforce():
    net = parse_case(TRANSFERABLE)
    dnet = undamaged(net)
    prog = build_mls_pnorm(dnet, 3)
    res = solve(prog)
    shed = extract_shed(prog, res)
    # independent oracle: grid over the feasible shed splits
    best, best_d = math.inf, None
    grid = np.linspace(0.0, 0.4, 81)
    for d1 in grid:
        for d2 in grid:
            if dc_feasible(net, dnet, [d1, d2]):
                v = d1**3 + d2**3
                if v < best - 1e-12:
                    best, best_d = v, (d1, d2)
    assert best_d == pytest.approx((0.2, 0.2), abs=1e-9)
    assert res.objective_primal == pytest.approx(2 * 0.2**3, rel=1e-4)
    assert shed.values == pytest.approx([0.2, 0.2], abs=1e-4)


def test_minmax_forced_vector():
    # loads islanded on generator-less buses: forced sheds (0.1, 0.3)
    net = parse_case(
        case_text(
            buses=[(1, 3, 0), (2, 1, 10), (3, 1, 30)],
            gens=[(1, 100)],
            lines=[(1, 2, 0.1, 0), (1, 3, 0.1, 0)],
        )
    )
    dnet = apply_damage(net, DamageScenario(line_ids=(1, 2), ordinal=0))
    prog = build_mls_minmax(dnet)
    res = solve(prog)
    assert res.status is SolveStatus.OPTIMAL
    assert res.objective_primal == pytest.approx(0.3, abs=1e-6)


def test_minmax_equalizes_transferable():
    net = parse_case(TRANSFERABLE)
    prog = build_mls_minmax(undamaged(net))
    res = solve(prog)
    assert res.objective_primal == pytest.approx(0.2, abs=1e-6)


def test_minmax_two_bus():
    net = parse_case(TWO_BUS_TIGHT)
    prog = build_mls_minmax(undamaged(net))
    res = solve(prog)
    assert res.objective_primal == pytest.approx(0.2, abs=1e-6)


# --- eps fairness ------------------------------------------------------------


def test_kappa_values():
    assert kappa(0.0, 10) == 1.0
    assert kappa(1.0, 10) == pytest.approx(math.sqrt(10))
    assert kappa(0.5, 10) == pytest.approx(0.5 + 0.5 * math.sqrt(10))
    assert kappa(0.5, 10) == pytest.approx(2.08113883, abs=1e-8)
    with pytest.raises(ValueError):
        kappa(-0.1, 10)
    with pytest.raises(ValueError):
        kappa(1.1, 10)


def test_eps_zero_matches_baseline():
    net = parse_case(TWO_BUS_TIGHT)
    dnet = undamaged(net)
    base = optimal_shed(build_mls(dnet)).total
    fair = optimal_shed(build_fair_mls(dnet, 0.0)).total
    assert fair == pytest.approx(base, abs=1e-6)


def test_eps_fairness_requires_shed_vars():
    prog = ConicProgram(
        objective_c=np.array([1.0]),
        equality_A=sp.csr_matrix(np.array([[1.0]])),
        equality_b=np.array([1.0]),
        cone_spec=(Cone(NONNEG, 1),),
        var_index={"x": 0},
    )
    with pytest.raises(ValueError, match="shed"):
        add_eps_fairness(prog, 0.5)


def test_eps_out_of_range():
    net = parse_case(TWO_BUS_TIGHT)
    with pytest.raises(ValueError):
        build_fair_mls(undamaged(net), 1.5)


def test_eps_cone_structure():
    net = parse_case(TRANSFERABLE)
    prog = build_fair_mls(undamaged(net), 0.5)
    assert "sum_shed" in prog.var_index
    assert prog.cone_spec[-1] == Cone("soc", 3)  # (s/kappa, d1, d2)
    assert prog.meta["kappa"] == pytest.approx(kappa(0.5, 2))


def test_zero_shed_scenario_feasible_all_eps():
    net = parse_case(TWO_BUS_WIDE)
    dnet = undamaged(net)
    for eps in (0.0, 0.5, 1.0):
        shed = optimal_shed(build_fair_mls(dnet, eps))
        assert shed.total == pytest.approx(0.0, abs=1e-6)


def test_eps_one_forces_equal_split():
    net = parse_case(TRANSFERABLE)
    dnet = undamaged(net)
    shed = optimal_shed(build_fair_mls(dnet, 1.0))
    assert shed.values == pytest.approx([0.2, 0.2], abs=1e-5)
    # brute-force check that only the equal split satisfies the cone at eps=1
    kap = kappa(1.0, 2)
    grid = np.linspace(0.0, 0.4, 81)
    feas = [
        (d1, d2)
        for d1 in grid
        for d2 in grid
        if dc_feasible(net, dnet, [d1, d2])
        and kap * math.hypot(d1, d2) <= d1 + d2 + 1e-12
    ]
    assert feas and all(abs(d1 - d2) < 1e-9 for d1, d2 in feas)


def test_eps_solution_satisfies_cone():
    net = parse_case(TRANSFERABLE)
    dnet = undamaged(net)
    for eps in (0.2, 0.6, 0.9):
        shed = optimal_shed(build_fair_mls(dnet, eps))
        kap = kappa(eps, 2)
        assert kap * np.linalg.norm(shed.values) <= shed.total + 1e-7


def test_eps_nesting_feasible_points():
    # Any point feasible at a larger eps stays feasible at a smaller one.
    net = parse_case(TRANSFERABLE)
    dnet = undamaged(net)
    shed_hi = optimal_shed(build_fair_mls(dnet, 0.9))
    for eps in (0.5, 0.2, 0.0):
        kap = kappa(eps, 2)
        assert kap * np.linalg.norm(shed_hi.values) <= shed_hi.total + 1e-9


def test_norm_sandwich_on_solutions():
    net = parse_case(TRANSFERABLE)
    dnet = undamaged(net)
    for build in (
        lambda: build_mls(dnet),
        lambda: build_mls_pnorm(dnet, 2),
        lambda: build_fair_mls(dnet, 0.7),
    ):
        shed = optimal_shed(build())
        l1, l2 = shed.total, float(np.linalg.norm(shed.values))
        n = len(shed.values)
        assert l2 <= l1 + 1e-9
        assert l1 <= math.sqrt(n) * l2 + 1e-9


# --- extraction & program integrity ------------------------------------------


def test_extract_requires_optimal():
    net = parse_case(TWO_BUS_TIGHT)
    prog = build_mls(undamaged(net))
    res = solve(prog)
    bad = type(res)(
        status=SolveStatus.NUMERICAL_LIMIT,
        primal_x=res.primal_x,
        dual_y=res.dual_y,
        dual_slack_s=res.dual_slack_s,
        objective_primal=res.objective_primal,
        objective_dual=res.objective_dual,
        residuals=res.residuals,
        iterations=res.iterations,
    )
    with pytest.raises(ValueError, match="status"):
        extract_shed(prog, bad)


def test_extract_clamps_small_negative():
    net = parse_case(TWO_BUS_WIDE)
    prog = build_mls(undamaged(net))
    res = solve(prog)
    x = res.primal_x.copy()
    x[prog.var_index["shed[1]"]] = -1e-9
    nudged = type(res)(
        status=res.status, primal_x=x, dual_y=res.dual_y,
        dual_slack_s=res.dual_slack_s, objective_primal=res.objective_primal,
        objective_dual=res.objective_dual, residuals=res.residuals,
        iterations=res.iterations,
    )
    assert extract_shed(prog, nudged).values[0] == 0.0


def test_extract_rejects_large_violation():
    net = parse_case(TWO_BUS_WIDE)
    prog = build_mls(undamaged(net))
    res = solve(prog)
    x = res.primal_x.copy()
    x[prog.var_index["shed[1]"]] = 0.5 + 1e-3  # above d_max beyond tolerance
    nudged = type(res)(
        status=res.status, primal_x=x, dual_y=res.dual_y,
        dual_slack_s=res.dual_slack_s, objective_primal=res.objective_primal,
        objective_dual=res.objective_dual, residuals=res.residuals,
        iterations=res.iterations,
    )
    with pytest.raises(ValueError, match="outside"):
        extract_shed(prog, nudged)


def test_canonical_integrity():
    net = parse_case(TRANSFERABLE)
    for prog in (
        build_mls(undamaged(net)),
        build_mls_pnorm(undamaged(net), 3),
        build_fair_mls(undamaged(net), 0.5),
    ):
        assert sum(c.dim for c in prog.cone_spec) == prog.n
        assert prog.equality_A.shape == (prog.m, prog.n)
        for name, j in prog.var_index.items():
            cone = prog.cone_of_column(j)
            assert cone.kind in (FREE, NONNEG, "soc", RSOC)


def test_debug_format_golden(tmp_path):
    net = parse_case(TWO_BUS_TIGHT)
    text = build_mls(undamaged(net)).to_debug_text()
    import pathlib

    golden = pathlib.Path(__file__).parent / "golden" / "two_bus_mls.txt"
    assert text == golden.read_text()


def test_builders_are_pure():
    net = parse_case(TRANSFERABLE)
    dnet = undamaged(net)
    p1 = build_mls(dnet)
    p2 = build_mls(dnet)
    assert np.array_equal(p1.objective_c, p2.objective_c)
    assert (p1.equality_A != p2.equality_A).nnz == 0
    assert p1.var_index == p2.var_index
