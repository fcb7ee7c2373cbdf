"""Full experimental sweep: variants per damage scenario, CSV artifacts.

``run_study`` enumerates (or samples) k-line damage scenarios, solves the
baseline and every configured fairness variant per qualifying scenario, and
writes census, per-row, summary-table and box-plot CSVs plus a property
audit.  Aggregation sorts by scenario ordinal, so worker count never
changes the output bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import caseio
from .caseio import Network
from .conic import (
    build_fair_mls,
    build_mls,
    build_mls_minmax,
    build_mls_pnorm,
    extract_shed,
)
from .fairness import gini, jain, pof, variance_bound_gap
from .scenario import (
    DamageScenario,
    apply_damage,
    enumerate_damage,
    sample_damage,
    scenario_count,
)
from .solver import SolveSettings, SolveStatus, check_certificate, solve

__all__ = [
    "StudyConfig",
    "StudyRow",
    "run_study",
    "solve_scenario",
    "summarize_indices",
    "priority_share",
    "nonmonotone_pof_count",
    "five_number_summary",
    "variant_name",
]

DEFAULT_EPS_GRID = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_P_LIST = (1, 2, 3, 5, 10, math.inf)
DEFAULT_WEIGHTED_EPS = (0.0, 0.2, 0.4, 0.6, 0.8)


@dataclass(frozen=True)
class StudyConfig:
    case_path: Path
    output_dir: Path
    weights_path: Path | None = None
    k_damaged: int = 5
    p_list: tuple = DEFAULT_P_LIST
    eps_list: tuple = DEFAULT_EPS_GRID
    weighted_eps_list: tuple = DEFAULT_WEIGHTED_EPS
    high_priority_loads: tuple = (1, 2)
    shed_threshold: float = 1e-6
    sample: tuple | None = None  # (count, seed)
    workers: int = 0  # 0 = os.cpu_count()
    settings: SolveSettings = field(default_factory=SolveSettings)

    def __post_init__(self):
        if not self.p_list or not self.eps_list:
            raise ValueError("p_list and eps_list must be nonempty")
        for e in tuple(self.eps_list) + tuple(self.weighted_eps_list):
            if not 0.0 <= e <= 1.0:
                raise ValueError(f"epsilon {e} outside [0, 1]")
        for p in self.p_list:
            if p != math.inf and (p != int(p) or p < 1):
                raise ValueError(f"p must be integer >= 1 or inf, got {p}")
        if self.shed_threshold <= 0:
            raise ValueError("shed_threshold must be positive")


@dataclass(frozen=True)
class StudyRow:
    ordinal: int
    variant: str
    status: str
    total_shed: float | None  # per-unit
    shed: tuple | None  # per-load, per-unit
    gini: float | None
    jain: float | None
    pof: float | None


def variant_name(kind: str, value=None) -> str:
    if kind == "pnorm":
        return "pnorm_inf" if value == math.inf else f"pnorm_{int(value)}"
    if kind in ("eps", "weighted_eps"):
        return f"{kind}_{value:g}"
    return kind


def _variant_programs(dnet, config: StudyConfig, weights):
    """Ordered (name, program factory) pairs beyond baseline and weighted."""
    out = []
    for p in config.p_list:
        if p == 1:
            continue  # identical to the baseline objective
        if p == math.inf:
            out.append((variant_name("pnorm", p), lambda: build_mls_minmax(dnet)))
        else:
            out.append(
                (variant_name("pnorm", p), lambda p=p: build_mls_pnorm(dnet, int(p)))
            )
    for e in config.eps_list:
        out.append((variant_name("eps", e), lambda e=e: build_fair_mls(dnet, e)))
    if weights is not None:
        for e in config.weighted_eps_list:
            out.append(
                (
                    variant_name("weighted_eps", e),
                    lambda e=e: build_fair_mls(dnet, e, weights),
                )
            )
    return out


_AUDIT_KEYS = (
    "solves",
    "optimal",
    "infeasible",
    "numerical_limit",
    "certificate_failures",
    "weak_duality_violations",
    "norm_sandwich_violations",
    "eps0_equivalence_violations",
    "eps_monotone_status_violations",
    "eps_monotone_shed_violations",
    "eps_monotone_pof_violations",
    "eps_monotone_jain_violations",
    "variance_bound_violations",
    "extract_errors",
)


def solve_scenario(
    network: Network,
    scenario: DamageScenario,
    config: StudyConfig,
    weights=None,
) -> tuple[list["StudyRow"], dict]:
    """Solve the baseline plus all variants for one scenario.

    Returns the rows (baseline first) and a property-audit counter dict.
    Non-qualifying scenarios produce only the baseline row.
    """
    audit = dict.fromkeys(_AUDIT_KEYS, 0)
    dnet = apply_damage(network, scenario)
    rows: list[StudyRow] = []

    def run(name: str, program, baseline_total, base_weighted_total=None):
        res = solve(program, config.settings)
        audit["solves"] += 1
        if res.status is SolveStatus.OPTIMAL:
            audit["optimal"] += 1
            if res.objective_dual > res.objective_primal + config.settings.gap_tol:
                audit["weak_duality_violations"] += 1
            if not check_certificate(program, res, config.settings):
                audit["certificate_failures"] += 1
            try:
                shed = extract_shed(program, res)
            except ValueError:
                audit["extract_errors"] += 1
                rows.append(StudyRow(scenario.ordinal, name, "extract_error",
                                     None, None, None, None, None))
                return None
            v = shed.values
            total = shed.total
            l2 = float(np.linalg.norm(v))
            n = len(v)
            if not (l2 <= total + 1e-9 and total <= math.sqrt(n) * l2 + 1e-9):
                audit["norm_sandwich_violations"] += 1
            ref = base_weighted_total if name.startswith("weighted") else baseline_total
            pof_v = None
            if ref is not None:
                pof_v = pof(total, ref, config.shed_threshold)
            rows.append(
                StudyRow(scenario.ordinal, name, "optimal", total, tuple(v),
                         gini(v), jain(v), pof_v)
            )
            return (total, v)
        if res.status is SolveStatus.PRIMAL_INFEASIBLE:
            audit["infeasible"] += 1
            if not check_certificate(program, res, config.settings):
                audit["certificate_failures"] += 1
            rows.append(StudyRow(scenario.ordinal, name, "infeasible",
                                 None, None, None, None, None))
        else:
            audit["numerical_limit"] += 1
            rows.append(StudyRow(scenario.ordinal, name, "numerical_limit",
                                 None, None, None, None, None))
        return None

    base = run("baseline", build_mls(dnet), None)
    if base is None:
        return rows, audit
    base_total = base[0]
    if base_total <= config.shed_threshold:
        return rows, audit  # non-qualifying

    base_weighted_total = None
    if weights is not None:
        wres = run("weighted", build_mls(dnet, weights), base_total)
        if wres is not None:
            base_weighted_total = wres[0]

    for name, factory in _variant_programs(dnet, config, weights):
        run(name, factory(), base_total, base_weighted_total)

    _audit_eps_chain(rows, config, base_total, audit)
    return rows, audit


def _audit_eps_chain(rows, config, base_total, audit):
    """Monotonicity and bound properties along the unweighted eps grid."""
    by_name = {r.variant: r for r in rows}
    eps_rows = [(e, by_name.get(variant_name("eps", e))) for e in sorted(config.eps_list)]
    eps_rows = [(e, r) for e, r in eps_rows if r is not None]

    zero = by_name.get(variant_name("eps", 0.0))
    if zero is not None and zero.status == "optimal":
        if abs(zero.total_shed - base_total) > 1e-6:
            audit["eps0_equivalence_violations"] += 1

    seen_infeasible = False
    prev = None  # last non-numerical-limit grid row
    for e, r in eps_rows:
        if r.status == "numerical_limit":
            continue  # excluded and reported separately
        if r.status == "infeasible":
            seen_infeasible = True
        elif r.status == "optimal":
            if seen_infeasible:
                audit["eps_monotone_status_violations"] += 1
            if variance_bound_gap(_as_shedvec(r), e) < -1e-9:
                audit["variance_bound_violations"] += 1
            if prev is not None and prev[1].status == "optimal":
                if r.total_shed < prev[1].total_shed - 1e-6:
                    audit["eps_monotone_shed_violations"] += 1
                if (r.pof is not None and prev[1].pof is not None
                        and r.pof < prev[1].pof - 1e-6):
                    audit["eps_monotone_pof_violations"] += 1
                if r.jain < prev[1].jain - 1e-6:
                    audit["eps_monotone_jain_violations"] += 1
        prev = (e, r)


def _as_shedvec(row: "StudyRow"):
    from .conic import ShedVector

    v = np.asarray(row.shed, dtype=float)
    return ShedVector(load_ids=tuple(range(1, len(v) + 1)), values=v)


# --- parallel driver -------------------------------------------------------

_WORKER_STATE: dict = {}


def _worker_init(case_text: str, weights_csv: str | None, config: StudyConfig):
    os.environ.setdefault("OMP_NUM_THREADS", "1")
    net = caseio.parse_case(case_text)
    weights = None
    if weights_csv is not None:
        import io

        weights = caseio.read_weights(io.StringIO(weights_csv), net)
    _WORKER_STATE.update(net=net, weights=weights, config=config)


def _worker_run(scenarios: list[DamageScenario]):
    net = _WORKER_STATE["net"]
    weights = _WORKER_STATE["weights"]
    config = _WORKER_STATE["config"]
    all_rows = []
    audit = dict.fromkeys(_AUDIT_KEYS, 0)
    for scn in scenarios:
        rows, a = solve_scenario(net, scn, config, weights)
        all_rows.extend(rows)
        for key, v in a.items():
            audit[key] += v
    return all_rows, audit


def run_study(config: StudyConfig) -> Path:
    """Run the sweep and write all CSV artifacts to the output directory."""
    case_text = Path(config.case_path).read_text()
    network = caseio.parse_case(case_text)
    problems = caseio.validate(network)
    if problems:
        raise ValueError(f"invalid network: {problems}")
    weights_csv = None
    weights = None
    if config.weights_path is not None:
        weights_csv = Path(config.weights_path).read_text()
        import io

        weights = caseio.read_weights(io.StringIO(weights_csv), network)

    if config.sample is not None:
        count, seed = config.sample
        scenarios = list(sample_damage(network, config.k_damaged, count, seed))
    else:
        scenarios = list(enumerate_damage(network, config.k_damaged))

    workers = config.workers or os.cpu_count() or 1
    chunk = max(1, min(200, (len(scenarios) + 4 * workers - 1) // (4 * workers)))
    batches = [scenarios[i : i + chunk] for i in range(0, len(scenarios), chunk)]

    all_rows: list[StudyRow] = []
    audit = dict.fromkeys(_AUDIT_KEYS, 0)
    if workers == 1 or len(batches) == 1:
        _worker_init(case_text, weights_csv, config)
        results = map(_worker_run, batches)
        for rows, a in results:
            all_rows.extend(rows)
            for key, v in a.items():
                audit[key] += v
    else:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_worker_init,
            initargs=(case_text, weights_csv, config),
        ) as pool:
            for rows, a in pool.map(_worker_run, batches):
                all_rows.extend(rows)
                for key, v in a.items():
                    audit[key] += v

    order = {"baseline": 0, "weighted": 1}
    all_rows.sort(key=lambda r: (r.ordinal, order.get(r.variant, 2), r.variant))

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_artifacts(out, config, network, weights, scenarios, all_rows, audit)
    return out


# --- aggregation & CSV writing ---------------------------------------------


def five_number_summary(values) -> dict:
    """Box-plot summary with 1.5*IQR whiskers and explicit outliers."""
    v = np.sort(np.asarray(values, dtype=float))
    q1, med, q3 = (float(np.percentile(v, q)) for q in (25, 50, 75))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    outliers = v[(v < lo_fence) | (v > hi_fence)]
    return {
        "min": float(inside[0]) if len(inside) else float(v[0]),
        "q1": q1,
        "median": med,
        "q3": q3,
        "max": float(inside[-1]) if len(inside) else float(v[-1]),
        "outliers": [float(x) for x in outliers],
    }


def summarize_indices(rows, cohort=None) -> dict:
    """Mean/max/min of gini and jain per variant over a row cohort."""
    picked = [r for r in rows if (cohort is None or cohort(r)) and r.status == "optimal"]
    if not picked:
        raise ValueError("empty cohort")
    out: dict = {}
    for variant in sorted({r.variant for r in picked}):
        sub = [r for r in picked if r.variant == variant]
        for index_name, get in (("gini", lambda r: r.gini), ("jain", lambda r: r.jain)):
            vals = np.array([get(r) for r in sub], dtype=float)
            out.setdefault(variant, {})[index_name] = {
                "mean": float(vals.mean()),
                "max": float(vals.max()),
                "min": float(vals.min()),
            }
    return out


def priority_share(rows, high_priority_ids, threshold: float = 1e-6) -> float:
    """Mean percent of total shed carried by the high-priority loads."""
    shares = []
    for r in rows:
        if r.status != "optimal" or r.shed is None:
            continue
        total = sum(r.shed)
        if total <= threshold:
            continue
        high = sum(r.shed[i - 1] for i in high_priority_ids)
        shares.append(100.0 * high / total)
    if not shares:
        raise ValueError("empty cohort")
    return float(np.mean(shares))


def nonmonotone_pof_count(rows, p_list=DEFAULT_P_LIST, guard: float = 1e-6) -> int:
    """Scenarios whose POF sequence over increasing p is not nondecreasing."""
    names = [("baseline" if p == 1 else variant_name("pnorm", p)) for p in p_list]
    by_scn: dict[int, dict[str, StudyRow]] = {}
    for r in rows:
        by_scn.setdefault(r.ordinal, {})[r.variant] = r
    count = 0
    for variants in by_scn.values():
        seq = []
        ok = True
        for p, name in zip(p_list, names):
            row = variants.get(name)
            if row is None or row.status != "optimal" or (p != 1 and row.pof is None):
                ok = False
                break
            seq.append(0.0 if p == 1 else row.pof)
        if ok and any(b < a - guard for a, b in zip(seq, seq[1:])):
            count += 1
    return count


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_artifacts(out, config, network, weights, scenarios, rows, audit):
    base_mva = network.base_mva
    n_loads = network.n_loads
    load_ids = [d.id for d in network.loads]
    by_scn: dict[int, dict[str, StudyRow]] = {}
    for r in rows:
        by_scn.setdefault(r.ordinal, {})[r.variant] = r

    qualifying = set()
    for scn in scenarios:
        b = by_scn.get(scn.ordinal, {}).get("baseline")
        if b and b.status == "optimal" and b.total_shed > config.shed_threshold:
            qualifying.add(scn.ordinal)

    # (a) scenarios.csv census
    k = config.k_damaged
    head = ["ordinal"] + [f"line_id_{i+1}" for i in range(k)] + [
        "qualifying",
        "baseline_shed_pu",
        "baseline_status",
    ]
    body = []
    for scn in scenarios:
        b = by_scn.get(scn.ordinal, {}).get("baseline")
        body.append(
            [scn.ordinal, *scn.line_ids]
            + [
                int(scn.ordinal in qualifying),
                b.total_shed if b and b.status == "optimal" else None,
                b.status if b else "missing",
            ]
        )
    _write_csv(out / "scenarios.csv", head, body)

    # (b) rows.csv
    head = ["ordinal", "variant", "status", "total_shed_pu", "gini", "jain", "pof"] + [
        f"shed_{i}_pu" for i in load_ids
    ]
    body = []
    for r in rows:
        sheds = list(r.shed) if r.shed is not None else [None] * n_loads
        body.append([r.ordinal, r.variant, r.status, r.total_shed,
                     r.gini, r.jain, r.pof] + sheds)
    _write_csv(out / "rows.csv", head, body)

    qrows = [r for r in rows if r.ordinal in qualifying]

    # (c) table1.csv: index statistics, baseline vs weighted
    t1_variants = ["baseline"] + (["weighted"] if weights is not None else [])
    stats = summarize_indices(qrows, cohort=lambda r: r.variant in t1_variants)
    body = []
    for stat in ("mean", "max", "min"):
        line = [stat]
        for index_name in ("gini", "jain"):
            for variant in t1_variants:
                line.append(stats[variant][index_name][stat])
        body.append(line)
    head = ["statistic"] + [
        f"{idx}_{v}" for idx in ("gini", "jain") for v in t1_variants
    ]
    _write_csv(out / "table1.csv", head, body)

    # (d) table2.csv: max POF per p
    body = []
    for p in config.p_list:
        if p == 1:
            continue
        name = variant_name("pnorm", p)
        vals = [r.pof for r in qrows if r.variant == name and r.pof is not None]
        body.append([("inf" if p == math.inf else int(p)),
                     max(vals) if vals else None, len(vals)])
    _write_csv(out / "table2.csv", ["p", "max_pof", "cohort_size"], body)

    # (e) table3.csv: infeasible counts per eps
    body = []
    for e in sorted(config.eps_list):
        name = variant_name("eps", e)
        sub = [r for r in qrows if r.variant == name]
        body.append([
            e,
            sum(r.status == "infeasible" for r in sub),
            sum(r.status == "numerical_limit" for r in sub),
            sum(r.status == "optimal" for r in sub),
            len(sub),
        ])
    _write_csv(
        out / "table3.csv",
        ["eps", "infeasible", "numerical_limit", "optimal", "total"],
        body,
    )

    # cohorts for figures 6/7 and table 4
    grid09 = [e for e in sorted(config.eps_list) if e <= 0.9]
    cohort09 = {
        o
        for o in qualifying
        if all(
            (r := by_scn[o].get(variant_name("eps", e))) is not None
            and r.status == "optimal"
            for e in grid09
        )
    }
    eps1_feasible = {
        o
        for o in qualifying
        if 1.0 in config.eps_list
        and (r := by_scn[o].get(variant_name("eps", 1.0))) is not None
        and r.status == "optimal"
    }

    # (f) table4.csv: max POF per eps over the all-eps-feasible cohort
    body = []
    for e in grid09:
        name = variant_name("eps", e)
        vals = [
            r.pof
            for r in qrows
            if r.variant == name and r.ordinal in cohort09 and r.pof is not None
        ]
        body.append([e, max(vals) if vals else None, len(vals)])
    _write_csv(out / "table4.csv", ["eps", "max_pof", "cohort_size"], body)

    # (g) table5.csv: mean high-priority shed share
    body = []
    if weights is not None:
        for e in sorted(config.weighted_eps_list):
            u_rows = [r for r in qrows if r.variant == variant_name("eps", e)]
            w_rows = [r for r in qrows if r.variant == variant_name("weighted_eps", e)]
            body.append([
                e,
                priority_share(u_rows, config.high_priority_loads, config.shed_threshold),
                priority_share(w_rows, config.high_priority_loads, config.shed_threshold),
            ])
    _write_csv(
        out / "table5.csv",
        ["eps", "unweighted_share_pct", "weighted_share_pct"],
        body,
    )

    # (h) per-figure box-plot summaries
    def boxrows(groups):
        body = []
        for key, vals in groups:
            if not len(vals):
                continue
            s = five_number_summary(vals)
            body.append(list(key) + [s["min"], s["q1"], s["median"], s["q3"], s["max"],
                                     ";".join(repr(v) for v in s["outliers"])])
        return body

    box_head = ["min", "q1", "median", "q3", "max", "outliers"]

    def shed_mw(r, i):
        return r.shed[i] * base_mva

    groups = []
    for variant in t1_variants:
        sub = [r for r in qrows if r.variant == variant and r.status == "optimal"]
        for i, lid in enumerate(load_ids):
            groups.append(((variant, lid), [shed_mw(r, i) for r in sub]))
    _write_csv(out / "fig1_sheds_weighted_vs_unweighted.csv",
               ["variant", "load_id"] + box_head, boxrows(groups))

    groups = []
    for p in config.p_list:
        name = "baseline" if p == 1 else variant_name("pnorm", p)
        sub = [r for r in qrows if r.variant == name and r.status == "optimal"]
        for i, lid in enumerate(load_ids):
            groups.append((((("inf" if p == math.inf else int(p))), lid),
                           [shed_mw(r, i) for r in sub]))
    _write_csv(out / "fig2_sheds_per_p.csv", ["p", "load_id"] + box_head, boxrows(groups))

    groups = []
    for p in config.p_list:
        name = "baseline" if p == 1 else variant_name("pnorm", p)
        sub = [r for r in qrows if r.variant == name and r.status == "optimal"]
        pv = "inf" if p == math.inf else int(p)
        groups.append(((pv, "gini"), [r.gini for r in sub]))
        groups.append(((pv, "jain"), [r.jain for r in sub]))
    _write_csv(out / "fig3_indices_per_p.csv", ["p", "index"] + box_head, boxrows(groups))

    groups = []
    for p in config.p_list:
        if p == 1:
            continue
        name = variant_name("pnorm", p)
        vals = [r.pof for r in qrows if r.variant == name and r.pof is not None]
        groups.append(((("inf" if p == math.inf else int(p)),), vals))
    _write_csv(out / "fig4_pof_per_p.csv", ["p"] + box_head, boxrows(groups))

    groups = []
    for e in grid09:
        name = variant_name("eps", e)
        sub = [r for r in qrows if r.variant == name and r.status == "optimal"]
        for i, lid in enumerate(load_ids):
            groups.append(((e, lid), [shed_mw(r, i) for r in sub]))
    _write_csv(out / "fig5_sheds_per_eps.csv", ["eps", "load_id"] + box_head, boxrows(groups))

    groups6, groups7 = [], []
    for e in grid09:
        name = variant_name("eps", e)
        sub = [r for r in qrows if r.variant == name and r.ordinal in cohort09
               and r.status == "optimal"]
        groups6.append(((e, "gini"), [r.gini for r in sub]))
        groups6.append(((e, "jain"), [r.jain for r in sub]))
        groups7.append(((e,), [r.pof for r in sub if r.pof is not None]))
    _write_csv(out / "fig6_indices_per_eps.csv", ["eps", "index"] + box_head, boxrows(groups6))
    _write_csv(out / "fig7_pof_per_eps.csv", ["eps"] + box_head, boxrows(groups7))

    groups = []
    if weights is not None:
        for e in sorted(config.weighted_eps_list):
            name = variant_name("weighted_eps", e)
            sub = [r for r in qrows if r.variant == name and r.status == "optimal"]
            groups.append(((e, "gini"), [r.gini for r in sub]))
            groups.append(((e, "jain"), [r.jain for r in sub]))
    _write_csv(out / "fig8_indices_weighted_eps.csv", ["eps", "index"] + box_head,
               boxrows(groups))

    # property audit + run metadata
    audit_out = dict(audit)
    audit_out["nonmonotone_pof_scenarios"] = nonmonotone_pof_count(qrows, config.p_list)
    with open(out / "properties.json", "w") as fh:
        json.dump(audit_out, fh, indent=2, sort_keys=True)
        fh.write("\n")

    meta = {
        "case_path": str(config.case_path),
        "weights_path": str(config.weights_path) if config.weights_path else None,
        "base_mva": base_mva,
        "n_buses": len(network.buses),
        "n_lines": len(network.lines),
        "n_loads": n_loads,
        "k_damaged": config.k_damaged,
        "scenario_total": scenario_count(network, config.k_damaged),
        "scenarios_run": len(scenarios),
        "qualifying": len(qualifying),
        "cohort_all_eps_0_to_0.9": len(cohort09),
        "cohort_eps_1.0": len(eps1_feasible),
        "sample": list(config.sample) if config.sample else None,
        "p_list": ["inf" if p == math.inf else int(p) for p in config.p_list],
        "eps_list": list(config.eps_list),
        "weighted_eps_list": list(config.weighted_eps_list),
        "high_priority_loads": list(config.high_priority_loads),
        "shed_threshold": config.shed_threshold,
        "cohort_notes": {
            "table5": "rows with Optimal status and total shed above the threshold",
            "fig6_fig7_table4": "scenarios feasible at every eps grid point in [0, 0.9]",
            "fig5": "rows with Optimal status at that eps",
        },
    }
    with open(out / "metadata.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
